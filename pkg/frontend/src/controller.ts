/**
 * Orchestration between editor state and the service: debounced transfer
 * requests, last-write-wins response handling, error toasts.
 */

import { ApiClient, ServiceError, base64ToDataUrl, dataUrlToBase64 } from "./api.js";
import { debounce, Debounced } from "./debounce.js";
import { LatestGate } from "./latest.js";
import { EditorState } from "./state.js";

export const TRANSFER_DEBOUNCE_MS = 300;

export type ToastFn = (message: string) => void;

export class EditorController {
  readonly gate = new LatestGate();
  private readonly debouncedTransfer: Debounced<[]>;

  constructor(
    readonly state: EditorState,
    readonly api: ApiClient,
    private readonly toast: ToastFn = () => undefined,
    debounceMs: number = TRANSFER_DEBOUNCE_MS,
  ) {
    this.debouncedTransfer = debounce(() => {
      void this.transferNow();
    }, debounceMs);
  }

  async connect(): Promise<void> {
    const health = await this.api.health();
    this.state.serviceFingerprint = health.fingerprint;
    this.state.setAttributes(await this.api.attributes());
  }

  /** Slider/toggle edits call this; bursts collapse into one request. */
  scheduleTransfer(): void {
    this.debouncedTransfer();
  }

  /** One transfer against the current state; stale responses are dropped. */
  async transferNow(): Promise<void> {
    const { state } = this;
    const selection = state.enabledSelection();
    if (!state.source || !state.reference || selection.indices.length === 0) {
      return;
    }
    const ticket = this.gate.issue();
    const fingerprint = state.serviceFingerprint;
    state.requestInFlight = true;
    state.notify();
    try {
      const response = await this.api.transfer({
        image_a: dataUrlToBase64(state.source.dataUrl),
        image_b: dataUrlToBase64(state.reference.dataUrl),
        attributes: selection.indices,
        alphas: selection.alphas,
      });
      if (this.gate.tryApply(ticket, fingerprint, state.serviceFingerprint)) {
        state.setResults({
          imageC: base64ToDataUrl(response.image_c),
          imageD: base64ToDataUrl(response.image_d),
          residualC: base64ToDataUrl(response.residual_c),
          residualD: base64ToDataUrl(response.residual_d),
          fingerprint,
        });
      }
    } catch (err) {
      if (ticket === this.gate.newestIssued()) {
        this.toast(err instanceof ServiceError ? `service: ${err.message}` : String(err));
      }
    } finally {
      // a newer request may still be pending; only its settlement clears the flag
      if (ticket === this.gate.newestIssued()) {
        state.requestInFlight = false;
      }
      state.notify();
    }
  }

  /** Clicking a result pane makes it the next source (the feedback loop). */
  promoteResult(pane: "C" | "D"): void {
    const { results } = this.state;
    if (!results) return;
    const dataUrl = pane === "C" ? results.imageC : results.imageD;
    this.state.setSource({ dataUrl, label: `result ${pane} (${results.fingerprint.slice(0, 8)})` });
  }

  async interpolateGrid(refDataUrls: string[], attribute: number, steps: number): Promise<Blob> {
    if (!this.state.source) throw new Error("no source image selected");
    return this.api.interpolate({
      image: dataUrlToBase64(this.state.source.dataUrl),
      refs: refDataUrls.map(dataUrlToBase64),
      attribute,
      steps,
    });
  }

  async interpolate2Grid(
    ref1: string, attr1: number, ref2: string, attr2: number, rows: number, cols: number,
  ): Promise<Blob> {
    if (!this.state.source) throw new Error("no source image selected");
    return this.api.interpolate2({
      image: dataUrlToBase64(this.state.source.dataUrl),
      ref1: dataUrlToBase64(ref1),
      attr1,
      ref2: dataUrlToBase64(ref2),
      attr2,
      rows,
      cols,
    });
  }
}

/** Cell geometry inside a grid PNG tiled with a 2px gutter. */
export function gridCellRect(
  imgWidth: number, imgHeight: number, rows: number, cols: number, x: number, y: number,
  gutter = 2,
): { row: number; col: number; x: number; y: number; w: number; h: number } | null {
  const cellW = (imgWidth - gutter * (cols - 1)) / cols;
  const cellH = (imgHeight - gutter * (rows - 1)) / rows;
  const col = Math.floor(x / (cellW + gutter));
  const row = Math.floor(y / (cellH + gutter));
  if (row < 0 || row >= rows || col < 0 || col >= cols) return null;
  const x0 = col * (cellW + gutter);
  const y0 = row * (cellH + gutter);
  if (x - x0 > cellW || y - y0 > cellH) return null; // click landed in a gutter
  return { row, col, x: x0, y: y0, w: cellW, h: cellH };
}
