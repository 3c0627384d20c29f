#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the NumPy fallback.

Times the two hot kernels (separable Gaussian convolution, binary
morphology) on each available backend, plus one full synthesized pair to
show the end-to-end effect. Numerics are identical across backends, so
this is purely a speed comparison.

Usage: python benchmarks/bench_kernels.py [--size 1024] [--repeats 5]
"""

import argparse
import time

import numpy as np

from flarebench import kernels
from flarebench.imgcore import gaussian_kernel1d
from flarebench.synth import SynthConfig, synthesize_pair


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_backend(name, size, repeats, rng):
    module = kernels.backend_module(name)
    plane = rng.random((size, size))
    kern = gaussian_kernel1d(21, 21 / 6.0)
    mask = (rng.random((size, size)) > 0.5).astype(np.uint8)

    results = {
        "sepconv 21-tap": best_of(lambda: module.sepconv2d(plane, kern), repeats),
        "erode r=1": best_of(lambda: module.erode2d(mask, 1), repeats),
        "dilate r=1": best_of(lambda: module.dilate2d(mask, 1), repeats),
    }

    kernels.set_backend(name)
    bg = rng.random((512, 512, 3)).astype(np.float32) * 0.5
    flares = [rng.random((512, 512, 3)).astype(np.float32) * 0.6 for _ in range(4)]
    cfg = SynthConfig(seed=1, lightsource_count_weights=None, flare_count=4)
    results["synthesize_pair 512x512 x4"] = best_of(
        lambda: synthesize_pair(bg, flares, cfg, 0), max(1, repeats // 2)
    )
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=1024, help="kernel benchmark plane size")
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeat count")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    default = kernels.get_backend()
    available = kernels.available_backends()
    print(f"backends: {', '.join(available)} (default: {default})")
    print(f"plane: {args.size}x{args.size}, best of {args.repeats}\n")

    all_results = {}
    try:
        for name in available:
            all_results[name] = bench_backend(name, args.size, args.repeats, rng)
    finally:
        kernels.set_backend(default)

    ops = list(next(iter(all_results.values())))
    both = "cython" in all_results and "numpy" in all_results
    header = f"{'op':<28}" + "".join(f"{name:>14}" for name in all_results)
    if both:
        header += f"{'numpy/cython':>14}"
    print(header)
    for op in ops:
        row = f"{op:<28}"
        for name in all_results:
            row += f"{all_results[name][op] * 1e3:>12.2f}ms"
        if both and all_results["cython"][op] > 0:
            ratio = all_results["numpy"][op] / all_results["cython"][op]
            row += f"{ratio:>13.1f}x"
        print(row)


if __name__ == "__main__":
    main()
