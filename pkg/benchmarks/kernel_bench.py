#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy (im2col + BLAS) fallback.

Runs the individual hot kernels on representative shapes from the network,
plus one end-to-end reduced-profile training step per backend. Run it twice if
you care about cold-start: the first numba run pays the JIT compile (cached on
disk afterwards).

Usage: python benchmarks/kernel_bench.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

CONV_SHAPES = [
    # (label, N, Cin, H, W, Cout, k, stride, pad)
    ("input block 7x7/2", 1, 3, 256, 256, 64, 7, 2, 3),
    ("stage1 3x3", 1, 64, 64, 64, 64, 3, 1, 1),
    ("stage3 3x3", 1, 256, 16, 16, 256, 3, 1, 1),
    ("reduced stage1 3x3 (batch 16)", 16, 8, 16, 16, 8, 3, 1, 1),
    ("reduced up5 3x3 (batch 16)", 16, 5, 64, 64, 2, 3, 1, 1),
]
TCONV_SHAPES = [
    ("up2 tconv 2x2", 1, 256, 16, 16, 128),
    ("reduced up4 tconv (batch 16)", 16, 8, 32, 32, 4),
]


def _time(fn, repeats):
    fn()  # warm-up / JIT
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_backend(mod, repeats):
    rng = np.random.default_rng(0)
    rows = {}
    for label, n, cin, h, w, cout, k, stride, pad in CONV_SHAPES:
        x = rng.standard_normal((n, cin, h, w)).astype(np.float32)
        wt = rng.standard_normal((cout, cin, k, k)).astype(np.float32)
        y = mod.conv2d(x, wt, stride, pad)
        dy = rng.standard_normal(y.shape).astype(np.float32)
        rows[f"conv2d {label}"] = _time(lambda: mod.conv2d(x, wt, stride, pad), repeats)
        rows[f"conv2d_dx {label}"] = _time(
            lambda: mod.conv2d_dx(wt, dy, stride, pad, h, w), repeats)
        rows[f"conv2d_dw {label}"] = _time(
            lambda: mod.conv2d_dw(x, dy, stride, pad, k, k), repeats)
    for label, n, cin, h, w, cout in TCONV_SHAPES:
        x = rng.standard_normal((n, cin, h, w)).astype(np.float32)
        wt = rng.standard_normal((cin, cout, 2, 2)).astype(np.float32)
        dy = rng.standard_normal((n, cout, 2 * h, 2 * w)).astype(np.float32)
        rows[f"tconv {label}"] = _time(lambda: mod.conv_transpose2x2(x, wt), repeats)
        rows[f"tconv_dx {label}"] = _time(lambda: mod.conv_transpose2x2_dx(wt, dy), repeats)
    xp = rng.standard_normal((1, 64, 128, 128)).astype(np.float32)
    _, arg = mod.maxpool3x3s2p1(xp)
    dyp = rng.standard_normal((1, 64, 64, 64)).astype(np.float32)
    rows["maxpool 128px"] = _time(lambda: mod.maxpool3x3s2p1(xp), repeats)
    rows["maxpool_dx 128px"] = _time(lambda: mod.maxpool3x3s2p1_dx(arg, dyp, 128, 128), repeats)
    return rows


def bench_train_step(backend, repeats):
    from unetcolor.kernels import use_backend
    from unetcolor.model import ModelConfig, build_model
    from unetcolor.train import compute_losses_and_grads

    use_backend(backend)

    cfg = ModelConfig(num_classes=4, input_size=64, channel_scale=0.125)
    graph = build_model(cfg, init="he", seed=0)
    rng = np.random.default_rng(0)
    x = rng.random((16, 3, 64, 64), dtype=np.float32)
    ab = rng.random((16, 2, 64, 64), dtype=np.float32)
    labels = rng.integers(0, 4, 16)

    def step():
        result = graph.forward(x, mode="train")
        _, d_ab, d_logits = compute_losses_and_grads(result, ab, labels, 0.01)
        graph.backward(d_ab.astype(np.float32), d_logits)

    return _time(step, repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    from unetcolor.kernels import numba_kernels, numpy_kernels

    print("timing kernels (mean seconds over", args.repeats, "repeats)...")
    numba_rows = bench_backend(numba_kernels, args.repeats)
    numpy_rows = bench_backend(numpy_kernels, args.repeats)

    width = max(len(k) for k in numba_rows)
    print(f"\n{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'numba/numpy':>11}")
    print("-" * (width + 37))
    for key in numba_rows:
        a, b = numba_rows[key], numpy_rows[key]
        print(f"{key:<{width}}  {a * 1e3:>8.2f}ms  {b * 1e3:>8.2f}ms  {a / b:>10.2f}x")

    print("\nend-to-end reduced-profile train step (batch 16, 64px, scale 1/8):")
    for backend in ("numba", "numpy"):
        t = bench_train_step(backend, args.repeats)
        print(f"  {backend}: {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
