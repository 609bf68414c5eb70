"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and backend, the speedup,
and whether both backends produce identical output.
"""

import argparse
import time

import numpy as np

from sccode.kernels import backend_module


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    S = rng.normal(size=(2000, 200))
    S[rng.random(S.shape) < 0.5] = 0.0
    G = rng.normal(size=S.shape)
    X = rng.normal(size=(600, 100))
    M = rng.random(X.shape) >= 0.5
    M[:, 0] = True
    X = np.where(M, X, 0.0)

    def zc(mod):
        out = S.copy()
        return lambda: mod.zero_crossing_update(out, G, 0.3, False), lambda: (
            mod.zero_crossing_update(S.copy(), G, 0.3, False))

    def pd(mod):
        f = lambda: mod.partial_distances(X, M)  # noqa: E731
        return f, f

    order = np.ascontiguousarray(np.argsort(backend_module("python").partial_distances(X, M),
                                            axis=1, kind="stable"), dtype=np.intp)
    fallback = np.zeros_like(X)

    def kf(mod):
        f = lambda: mod.knn_fill(X, M, order, 10, fallback, X.copy())  # noqa: E731
        return f, f

    return {"zero_crossing_update (2000x200)": zc, "partial_distances (600x100)": pd,
            "knn_fill (600x100, k=10)": kf}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    try:
        compiled = backend_module("compiled")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1
    python = backend_module("python")
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}  same")
    for name, make in cases(rng).items():
        tp, out_p = make(python)
        tc, out_c = make(compiled)
        a, b = _best(tp, args.repeat), _best(tc, args.repeat)
        same = np.array_equal(out_p(), out_c())
        print(f"{name:36s} {a * 1e3:12.2f} {b * 1e3:14.2f} {a / b:8.1f}x  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
