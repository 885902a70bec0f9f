import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { debounce } from "../src/debounce.js";

describe("debounce", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("collapses a burst into one trailing call with the final arguments", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 300);
    for (let k = 0; k < 20; k++) {
      fn(k);
      vi.advanceTimersByTime(10);
    }
    vi.advanceTimersByTime(300);
    expect(calls).toEqual([19]);
  });

  it("caps the request rate during a continuous drag", () => {
    // one event every 40ms for 3 simulated seconds, trailing debounce 300ms:
    // only pauses >= 300ms fire, so a continuous drag fires once at the end
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 300);
    let value = 0;
    for (let t = 0; t < 3000; t += 40) {
      fn(value++);
      vi.advanceTimersByTime(40);
    }
    vi.advanceTimersByTime(300);
    expect(calls.length).toBeLessThanOrEqual(Math.ceil(3));
    expect(calls[calls.length - 1]).toBe(value - 1);
  });

  it("cancel drops the pending call", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 300);
    fn(1);
    fn.cancel();
    vi.advanceTimersByTime(1000);
    expect(calls).toEqual([]);
  });

  it("flush fires the pending call immediately", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 300);
    fn(5);
    fn.flush();
    expect(calls).toEqual([5]);
  });
});
