/**
 * Request/response shapes of the inference service, with runtime validators.
 *
 * Every outgoing request passes through its validator before fetch, so the
 * UI can never send an out-of-range alpha or a malformed body; tests assert
 * the same guarantees without a server.
 */

export interface TransferRequest {
  image_a: string;
  image_b: string;
  attributes: number[];
  alphas?: number[];
}

export interface TransferResponse {
  image_c: string;
  image_d: string;
  residual_c: string;
  residual_d: string;
}

export interface InterpolateRequest {
  image: string;
  refs: string[];
  attribute: number;
  steps: number;
}

export interface Interpolate2Request {
  image: string;
  ref1: string;
  attr1: number;
  ref2: string;
  attr2: number;
  rows: number;
  cols: number;
}

export class SchemaError extends Error {}

function requireBase64(value: unknown, field: string): string {
  if (typeof value !== "string" || value.length === 0) {
    throw new SchemaError(`${field} must be a non-empty base64 string`);
  }
  if (!/^[A-Za-z0-9+/]+=*$/.test(value)) {
    throw new SchemaError(`${field} is not valid base64`);
  }
  return value;
}

function requireAttrIndex(value: unknown, field: string, count: number): number {
  if (typeof value !== "number" || !Number.isInteger(value) || value < 0 || value >= count) {
    throw new SchemaError(`${field} must be an attribute index in [0, ${count})`);
  }
  return value;
}

export function validateTransfer(req: TransferRequest, attributeCount: number): TransferRequest {
  requireBase64(req.image_a, "image_a");
  requireBase64(req.image_b, "image_b");
  if (!Array.isArray(req.attributes) || req.attributes.length === 0) {
    throw new SchemaError("attributes must be a non-empty array");
  }
  req.attributes.forEach((a, k) => requireAttrIndex(a, `attributes[${k}]`, attributeCount));
  if (req.alphas !== undefined) {
    if (!Array.isArray(req.alphas) || req.alphas.length !== req.attributes.length) {
      throw new SchemaError("alphas must match attributes in length");
    }
    req.alphas.forEach((a, k) => {
      if (typeof a !== "number" || Number.isNaN(a) || a < 0 || a > 1) {
        throw new SchemaError(`alphas[${k}] must lie in [0, 1]`);
      }
    });
  }
  return req;
}

export function validateInterpolate(req: InterpolateRequest, attributeCount: number): InterpolateRequest {
  requireBase64(req.image, "image");
  if (!Array.isArray(req.refs) || req.refs.length < 1 || req.refs.length > 3) {
    throw new SchemaError("refs must hold 1-3 images");
  }
  req.refs.forEach((r, k) => requireBase64(r, `refs[${k}]`));
  requireAttrIndex(req.attribute, "attribute", attributeCount);
  if (!Number.isInteger(req.steps) || req.steps < 2) {
    throw new SchemaError("steps must be an integer >= 2");
  }
  return req;
}

export function validateInterpolate2(req: Interpolate2Request, attributeCount: number): Interpolate2Request {
  requireBase64(req.image, "image");
  requireBase64(req.ref1, "ref1");
  requireBase64(req.ref2, "ref2");
  requireAttrIndex(req.attr1, "attr1", attributeCount);
  requireAttrIndex(req.attr2, "attr2", attributeCount);
  if (req.attr1 === req.attr2) {
    throw new SchemaError("attr1 and attr2 must differ");
  }
  for (const [field, v] of [["rows", req.rows], ["cols", req.cols]] as const) {
    if (!Number.isInteger(v) || v < 2) {
      throw new SchemaError(`${field} must be an integer >= 2`);
    }
  }
  return req;
}

export function parseTransferResponse(body: unknown): TransferResponse {
  const rec = body as Record<string, unknown>;
  for (const field of ["image_c", "image_d", "residual_c", "residual_d"]) {
    requireBase64(rec?.[field], field);
  }
  return rec as unknown as TransferResponse;
}
