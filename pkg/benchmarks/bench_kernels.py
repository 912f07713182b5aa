#!/usr/bin/env python3
"""Benchmark the compiled pixel kernels against the numpy fallback.

Both backends are importable side by side, so this runs them in one
process and verifies they produce identical outputs while timing them.

    python benchmarks/bench_kernels.py --size 4096 --repeats 5
"""

import argparse
import time

import numpy as np

from slidepress.kernels import _pure

try:
    from slidepress.kernels import _kernels
except ImportError:
    _kernels = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=4096,
                        help="square image edge in pixels")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    image = rng.integers(0, 256, (args.size, args.size, 3), dtype=np.uint8)
    megapixels = args.size * args.size / 1e6

    backends = [("python (numpy)", _pure)]
    if _kernels is not None:
        backends.append(("compiled (cython)", _kernels))
    else:
        print("compiled extension not built; timing the fallback only\n")

    header = f"{'kernel':<22}{'backend':<20}{'best ms':>10}{'Mpx/s':>10}"
    print(header)
    print("-" * len(header))

    results = {}
    for kernel_name, call in (
        ("downsample_2x2", lambda mod: mod.downsample_2x2(image)),
        ("luminance_stats", lambda mod: mod.luminance_stats(image, 60)),
        ("luminance", lambda mod: mod.luminance(image)),
    ):
        for backend_name, module in backends:
            best, result = timeit(lambda: call(module), args.repeats)
            results[kernel_name, backend_name] = (best, result)
            print(f"{kernel_name:<22}{backend_name:<20}"
                  f"{best * 1e3:>10.1f}{megapixels / best:>10.0f}")
        if len(backends) == 2:
            py = results[kernel_name, backends[0][0]]
            cy = results[kernel_name, backends[1][0]]
            if isinstance(py[1], np.ndarray):
                identical = np.array_equal(py[1], np.asarray(cy[1]))
            else:
                identical = py[1] == cy[1]
            print(f"{'':<22}speedup {py[0] / cy[0]:.2f}x, "
                  f"outputs identical: {identical}")
        print()


if __name__ == "__main__":
    main()
