"""Benchmark the compiled image-kernel core against the numpy fallback.

Runs the two hot kernels (median filter, complex Gabor convolution) on
both backends, checks that the outputs are bitwise identical, and prints
the time per call plus the speedup. Usage:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --median-size 2048 --repeats 7
"""
import argparse
import sys
import time

import numpy as np

from mammosvm._kernels import (
    HAVE_COMPILED,
    convolve_complex_compiled,
    median_filter_compiled,
)
from mammosvm._kernels._fallback import convolve_complex_numpy, median_filter_numpy


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_case(name, fallback_fn, compiled_fn, repeats):
    got_fallback = fallback_fn()
    got_compiled = compiled_fn()
    identical = np.array_equal(got_fallback, got_compiled)
    t_fallback = best_of(fallback_fn, repeats)
    t_compiled = best_of(compiled_fn, repeats)
    speedup = t_fallback / t_compiled if t_compiled > 0 else float("inf")
    check = "bitwise" if identical else "MISMATCH"
    print(
        f"{name:<28} {t_fallback * 1e3:>10.2f} {t_compiled * 1e3:>10.2f}"
        f" {speedup:>8.1f}x  {check}"
    )
    return identical


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed runs per case; the best run is reported")
    parser.add_argument("--median-size", type=int, default=1024,
                        help="side length of the median-filter test image")
    parser.add_argument("--conv-size", type=int, default=128,
                        help="side length of the convolution test image (ROI scale)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if not HAVE_COMPILED:
        print("compiled kernel core is not importable; nothing to compare",
              file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    print(f"{'case':<28} {'numpy ms':>10} {'cython ms':>10} {'speedup':>9}  parity")

    ok = True
    img_u8 = rng.integers(0, 256, size=(args.median_size, args.median_size),
                          dtype=np.uint8)
    for window in (3, 5, 9):
        ok &= bench_case(
            f"median {args.median_size}^2 w={window}",
            lambda w=window: median_filter_numpy(img_u8, w),
            lambda w=window: median_filter_compiled(img_u8, w),
            args.repeats,
        )

    img_f64 = rng.random((args.conv_size, args.conv_size))
    for side in (5, 9, 17):
        kernel = rng.random((side, side)) + 1j * rng.random((side, side))
        ok &= bench_case(
            f"convolve {args.conv_size}^2 k={side}",
            lambda k=kernel: convolve_complex_numpy(img_f64, k),
            lambda k=kernel: convolve_complex_compiled(img_f64, k),
            args.repeats,
        )

    if not ok:
        print("backend outputs diverged; see MISMATCH rows above", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
