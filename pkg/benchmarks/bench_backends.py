#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three convolution primitives, the bilinear warp, and a full
training step at toy scale, on whichever backend LATENTSWAP_BACKEND
selects for this process. To compare, run it twice:

    LATENTSWAP_BACKEND=numpy python benchmarks/bench_backends.py
    LATENTSWAP_BACKEND=numba python benchmarks/bench_backends.py

or use --both, which re-invokes itself under each backend.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def timeit(fn, repeat, warmup=2):
    for _ in range(warmup):
        fn()
    start = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - start) / repeat


def bench_kernels(repeat):
    from latentswap import kernels

    rng = np.random.default_rng(0)
    x = rng.standard_normal((16, 16, 64, 64)).astype(np.float32)
    w = rng.standard_normal((32, 16, 4, 4)).astype(np.float32)
    wt = rng.standard_normal((16, 32, 4, 4)).astype(np.float32)
    g = rng.standard_normal((16, 32, 32, 32)).astype(np.float32)
    img = rng.standard_normal((256, 256, 3)).astype(np.float32)
    lin = np.array([[0.8, 0.1], [-0.1, 0.8]])
    results = {
        "conv_down (16x16x64x64)": timeit(lambda: kernels.conv_down(x, w, 2, 1), repeat),
        "spread_up (16x16x64x64)": timeit(lambda: kernels.spread_up(x, wt, 2, 1), repeat),
        "weight_grad": timeit(lambda: kernels.conv_weight_grad(x, g, 2, 1), repeat),
        "warp 256->256": timeit(
            lambda: kernels.warp_bilinear(img, lin, np.array([128.0, 128.0]),
                                          np.array([130.5, 127.2]), 256, 256),
            repeat,
        ),
    }
    return results


def bench_train_step(repeat):
    from latentswap.config import ModelConfig, TrainConfig
    from latentswap.model import ModelParams
    from latentswap.synth import SyntheticSpec, generate_synthetic
    from latentswap.train import TrainState, train_step

    spec = SyntheticSpec(image_size=64, attribute_names=("bangs", "smile"), seed=0)
    dataset, _ = generate_synthetic(spec, 128)
    cfg = ModelConfig(n_attributes=2, image_size=64, depth=4, base_channels=8,
                      latent_channels=32)
    tcfg = TrainConfig(batch_size=16, total_steps=10_000, seed=0)
    state = TrainState.fresh(ModelParams(cfg, seed=0), tcfg, dataset)

    def one_step():
        i = state.step % 2
        idx_a, idx_b = state.samplers[i].next_batch()
        a, ba = dataset.batch(idx_a)
        b, bb = dataset.batch(idx_b)
        train_step(a, ba, b, bb, i, state, tcfg)

    return {"train_step (toy 64x64, batch 16)": timeit(one_step, repeat, warmup=2)}


def run_single(repeat, as_json=False):
    from latentswap.backend import active_backend

    rows = {}
    rows.update(bench_kernels(repeat))
    rows.update(bench_train_step(max(repeat // 2, 2)))
    if as_json:
        print(json.dumps({"backend": active_backend(), "seconds": rows}))
        return
    print(f"backend: {active_backend()}")
    for name, seconds in rows.items():
        print(f"  {name:34s} {seconds * 1e3:9.2f} ms")


def run_both(repeat):
    results = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, LATENTSWAP_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, __file__, "--repeat", str(repeat), "--json"],
            env=env, capture_output=True, text=True, check=True,
        )
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        results[payload["backend"]] = payload["seconds"]
    names = list(results["numpy"])
    width = max(len(n) for n in names)
    print(f"{'kernel':{width}s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name in names:
        a = results["numpy"][name]
        b = results["numba"][name]
        print(f"{name:{width}s} {a * 1e3:9.2f}ms {b * 1e3:9.2f}ms {a / b:7.2f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=10)
    parser.add_argument("--both", action="store_true",
                        help="run numpy and numba in subprocesses and tabulate")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args()
    if args.both:
        run_both(args.repeat)
    else:
        run_single(args.repeat, as_json=args.json)


if __name__ == "__main__":
    main()
