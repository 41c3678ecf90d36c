"""Time the compiled warp kernels against the numpy fallback.

    python3 benchmarks/bench_warp.py [--sizes 64 128 256] [--samples 12] [--repeat 5]

Both backends are imported directly, so ``LAYERBLUR_BACKEND`` has no effect here.
"""
import argparse
import timeit

import numpy as np

from layerblur import _warp_py

try:
    from layerblur import _cwarp
except ImportError:
    _cwarp = None


def sample_rows(m, rng):
    rows = np.tile([1.0, 0.0, 0.0, 1.0, 0.0, 0.0], (m, 1))
    rows[:, :4] += rng.uniform(-0.02, 0.02, (m, 4))
    rows[:, 4:] = np.linspace(0, 6, m)[:, None] + rng.uniform(-0.5, 0.5, (m, 2))
    return np.ascontiguousarray(rows)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    parser.add_argument("--samples", type=int, default=12)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _cwarp is None:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`")
    rng = np.random.default_rng(0)
    print(f"{'size':>6} {'kernel':>8} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n in args.sizes:
        src = rng.random((n, n))
        params = sample_rows(args.samples, rng)
        stack = np.ascontiguousarray(rng.random((args.samples, n, n)))
        cases = {"gather": ("warp_stack", (src, params)),
                 "scatter": ("warp_adjoint_sum", (stack, params))}
        for label, (name, call_args) in cases.items():
            py = best_of(lambda: getattr(_warp_py, name)(*call_args), args.repeat)
            if _cwarp is None:
                print(f"{n:>6} {label:>8} {1e3 * py:>10.2f} {'-':>10} {'-':>8}")
                continue
            cy = best_of(lambda: getattr(_cwarp, name)(*call_args), args.repeat)
            np.testing.assert_allclose(getattr(_cwarp, name)(*call_args),
                                       getattr(_warp_py, name)(*call_args), atol=1e-12)
            print(f"{n:>6} {label:>8} {1e3 * py:>10.2f} {1e3 * cy:>10.2f} {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
