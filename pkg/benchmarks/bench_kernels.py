"""Benchmark the projected-extragradient kernel: numba vs pure numpy.

Times the same regularized-model solves through both implementations and
checks they agree to 1e-10.  Run directly:

    python benchmarks/bench_kernels.py [--dim 20] [--repeat 50]

For an end-to-end comparison instead, run any solver once with
HOLDER_VI_BACKEND=numba and once with HOLDER_VI_BACKEND=numpy and diff
the traces.
"""

import argparse
import time

import numpy as np

from holder_vi.kernels import HAS_NUMBA, KIND_BALL, KIND_BOX, KIND_WHOLE, _peg_numpy

if HAS_NUMBA:
    from holder_vi.kernels import _peg_numba


def make_case(rng, dim, kind):
    B = rng.standard_normal((dim, dim))
    S = 0.5 * rng.standard_normal((dim, dim))
    J = B @ B.T / dim + (S - S.T)
    c = rng.standard_normal(dim)
    anchor = np.zeros(dim)
    lo = np.full(dim, -1.0)
    hi = np.full(dim, 1.0)
    return (c, J, anchor, 1.3, 0.5, kind, lo, hi, 2.0, 1e-10, 200_000, 3.0)


def run(fn, cases, repeat):
    t0 = time.perf_counter()
    out = []
    for _ in range(repeat):
        out = [fn(*case) for case in cases]
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cases = [make_case(rng, args.dim, kind)
             for kind in (KIND_WHOLE, KIND_BALL, KIND_BOX)
             for _ in range(5)]

    t_np, out_np = run(_peg_numpy, cases, args.repeat)
    print(f"numpy : {t_np:8.3f} s  ({len(cases) * args.repeat} solves, dim {args.dim})")

    if not HAS_NUMBA:
        print("numba : not installed, skipping")
        return

    _peg_numba(*cases[0])  # compile outside the timed region
    t_nb, out_nb = run(_peg_numba, cases, args.repeat)
    print(f"numba : {t_nb:8.3f} s  (speedup {t_np / t_nb:5.2f}x)")

    worst = max(float(np.linalg.norm(a[0] - b[0]))
                for a, b in zip(out_np, out_nb))
    print(f"agreement: worst point gap {worst:.2e} "
          f"({'ok' if worst <= 1e-10 else 'MISMATCH'})")


if __name__ == "__main__":
    main()
