/**
 * Typed client for the inference service. The fetch implementation is
 * injectable so tests can mock latency and failures.
 */

import {
  Interpolate2Request,
  InterpolateRequest,
  TransferRequest,
  TransferResponse,
  parseTransferResponse,
  validateInterpolate,
  validateInterpolate2,
  validateTransfer,
} from "./schema.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

export interface HealthInfo {
  status: string;
  fingerprint: string;
}

export class ApiClient {
  private attributeCount = 0;

  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        /* non-JSON error body; keep the status code */
      }
      throw new ServiceError(response.status, detail);
    }
    return response;
  }

  private post(path: string, body: unknown): Promise<Response> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async health(): Promise<HealthInfo> {
    const response = await this.request("/health");
    return (await response.json()) as HealthInfo;
  }

  async attributes(): Promise<string[]> {
    const response = await this.request("/attributes");
    const body = (await response.json()) as { attributes: string[] };
    this.attributeCount = body.attributes.length;
    return body.attributes;
  }

  /** Known attribute count from the last /attributes call (0 before it). */
  knownAttributeCount(): number {
    return this.attributeCount;
  }

  async transfer(req: TransferRequest): Promise<TransferResponse> {
    validateTransfer(req, this.attributeCount || Number.MAX_SAFE_INTEGER);
    const response = await this.post("/transfer", req);
    return parseTransferResponse(await response.json());
  }

  async interpolate(req: InterpolateRequest): Promise<Blob> {
    validateInterpolate(req, this.attributeCount || Number.MAX_SAFE_INTEGER);
    const response = await this.post("/interpolate", req);
    return response.blob();
  }

  async interpolate2(req: Interpolate2Request): Promise<Blob> {
    validateInterpolate2(req, this.attributeCount || Number.MAX_SAFE_INTEGER);
    const response = await this.post("/interpolate2", req);
    return response.blob();
  }
}

/** "data:image/png;base64,AAAA" -> "AAAA"; raw base64 passes through. */
export function dataUrlToBase64(dataUrl: string): string {
  const comma = dataUrl.indexOf(",");
  return comma >= 0 ? dataUrl.slice(comma + 1) : dataUrl;
}

export function base64ToDataUrl(b64: string): string {
  return `data:image/png;base64,${b64}`;
}
