/**
 * Controller behavior against a mocked service: reconstruction display at
 * alpha 0, out-of-order response discarding under mocked latency, request
 * shaping, and schema enforcement end to end.
 */

import { describe, expect, it } from "vitest";

import { ApiClient, FetchLike } from "../src/api.js";
import { EditorController, gridCellRect } from "../src/controller.js";
import { EditorState } from "../src/state.js";

const PNG_A = btoa("source-image");
const PNG_B = btoa("reference-image");
const RECONSTRUCTION = btoa("reconstruction-of-A");
const TRANSFERRED = btoa("transferred-A");

interface SentRequest {
  url: string;
  body: any;
}

/** Mock service: alpha 0 answers with the reconstruction payload, alpha 1
 * with the transferred payload; per-request latency is scriptable. */
function mockService(sent: SentRequest[], latencies: number[] = []) {
  let call = 0;
  const impl: FetchLike = (url, init) => {
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    sent.push({ url, body });
    const delay = latencies[call] ?? 0;
    call += 1;
    const respond = (): Response => {
      if (url.endsWith("/health")) {
        return Response.json({ status: "ok", fingerprint: "fp-1" });
      }
      if (url.endsWith("/attributes")) {
        return Response.json({ attributes: ["bangs", "smile"] });
      }
      if (url.endsWith("/transfer")) {
        const alpha = body.alphas?.[0] ?? 1;
        const image = alpha === 0 ? RECONSTRUCTION : TRANSFERRED;
        return Response.json({
          image_c: image, image_d: image, residual_c: image, residual_d: image,
        });
      }
      return new Response("not found", { status: 404 });
    };
    return new Promise((resolve) => setTimeout(() => resolve(respond()), delay));
  };
  return impl;
}

async function makeEditor(latencies: number[] = []) {
  const sent: SentRequest[] = [];
  const toasts: string[] = [];
  const state = new EditorState();
  const api = new ApiClient("http://svc", mockService(sent, latencies));
  const controller = new EditorController(state, api, (m) => toasts.push(m), 0);
  await controller.connect();
  state.setSource({ dataUrl: `data:image/png;base64,${PNG_A}`, label: "A" });
  state.setReference({ dataUrl: `data:image/png;base64,${PNG_B}`, label: "B" });
  return { state, controller, sent, toasts };
}

describe("transfer orchestration", () => {
  it("slider at 0 displays the server's reconstruction", async () => {
    const { state, controller } = await makeEditor();
    state.toggleAttribute(0, true);
    state.setAlpha(0, 0);
    await controller.transferNow();
    expect(state.results?.imageC).toBe(`data:image/png;base64,${RECONSTRUCTION}`);
    expect(state.results?.fingerprint).toBe("fp-1");
  });

  it("toggling two attributes sends one request with attributes=[i,j]", async () => {
    const { state, controller, sent } = await makeEditor();
    state.toggleAttribute(0, true);
    state.toggleAttribute(1, true);
    state.setAlpha(1, 0.25);
    await controller.transferNow();
    const transfers = sent.filter((s) => s.url.endsWith("/transfer"));
    expect(transfers.length).toBe(1);
    expect(transfers[0]!.body.attributes).toEqual([0, 1]);
    expect(transfers[0]!.body.alphas).toEqual([1, 0.25]);
    expect(transfers[0]!.body.image_a).toBe(PNG_A);
    expect(transfers[0]!.body.image_b).toBe(PNG_B);
  });

  it("out-of-order responses are discarded (mocked latency)", async () => {
    // first request takes 50ms, second 5ms: the slow stale response returns
    // last but must not overwrite the newer result
    const { state, controller } = await makeEditor([0, 0, 50, 5]);
    state.toggleAttribute(0, true);
    state.setAlpha(0, 0);                      // slow request: reconstruction payload
    const slow = controller.transferNow();
    state.setAlpha(0, 1);                      // fast request: transferred payload
    const fast = controller.transferNow();
    await Promise.all([slow, fast]);
    expect(state.results?.imageC).toBe(`data:image/png;base64,${TRANSFERRED}`);
  });

  it("alphas are clamped into [0, 1] before any request leaves", async () => {
    const { state, controller, sent } = await makeEditor();
    state.toggleAttribute(0, true);
    state.setAlpha(0, 7.3);
    state.setAlpha(1, -2);
    await controller.transferNow();
    const transfer = sent.find((s) => s.url.endsWith("/transfer"))!;
    expect(transfer.body.alphas).toEqual([1]);
    expect(state.attributes[1]!.alpha).toBe(0);
  });

  it("does nothing without a source, reference, or enabled attribute", async () => {
    const { state, controller, sent } = await makeEditor();
    await controller.transferNow();            // nothing toggled
    expect(sent.filter((s) => s.url.endsWith("/transfer"))).toHaveLength(0);
  });

  it("service errors surface as toasts, not results", async () => {
    const sent: SentRequest[] = [];
    const toasts: string[] = [];
    const state = new EditorState();
    const failing: FetchLike = async (url) => {
      sent.push({ url, body: undefined });
      if (url.endsWith("/health")) return Response.json({ status: "ok", fingerprint: "fp" });
      if (url.endsWith("/attributes")) return Response.json({ attributes: ["bangs"] });
      return Response.json({ detail: "unknown attribute index 9" }, { status: 404 });
    };
    const controller = new EditorController(state, new ApiClient("http://svc", failing),
                                            (m) => toasts.push(m), 0);
    await controller.connect();
    state.setSource({ dataUrl: `data:image/png;base64,${PNG_A}`, label: "A" });
    state.setReference({ dataUrl: `data:image/png;base64,${PNG_B}`, label: "B" });
    state.toggleAttribute(0, true);
    await controller.transferNow();
    expect(state.results).toBeNull();
    expect(toasts.some((t) => t.includes("unknown attribute"))).toBe(true);
  });

  it("promoting a result makes it the new source", async () => {
    const { state, controller } = await makeEditor();
    state.toggleAttribute(0, true);
    await controller.transferNow();
    controller.promoteResult("C");
    expect(state.source?.dataUrl).toBe(state.results?.imageC);
  });
});

describe("grid cell geometry", () => {
  it("maps clicks to cells across gutters", () => {
    // 4x4 grid of 32px cells with 2px gutters -> 134px square
    const rect = gridCellRect(134, 134, 4, 4, 40, 100);
    expect(rect).toMatchObject({ col: 1, row: 2 });
  });

  it("clicks inside a gutter return null", () => {
    expect(gridCellRect(134, 134, 4, 4, 33, 10)).toBeNull();
  });

  it("out-of-range clicks return null", () => {
    expect(gridCellRect(134, 134, 4, 4, 500, 10)).toBeNull();
  });
});
