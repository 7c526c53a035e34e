"""Compare the compiled and numpy kernel backends.

Times the Schur-complement assembly on the diamond-norm constraint set and a
full ``diamond_norm_sdp`` solve under each backend::

    python3 benchmarks/bench_kernels.py [--dims 2 3 4] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from diamond_gap import _pykernels, kernels
from diamond_gap.channels import id_minus, random_channel
from diamond_gap.diamond import _diamond_lmi, diamond_norm_sdp

try:
    from diamond_gap import _ckernels
except ImportError:
    _ckernels = None


def use_backend(mod):
    for name in ("schur_complement", "constraint_inner", "constraint_combine"):
        setattr(kernels, name, getattr(mod, name))


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = [("numpy", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    rng = np.random.default_rng(0)
    print(f"{'d':>2} {'m':>5} {'backend':>8} {'schur (ms)':>11} {'sdp solve (ms)':>15}")
    for d in args.dims:
        A = _diamond_lmi(d).constraints
        G = rng.standard_normal((A.n, A.n))
        X = G @ G.T + A.n * np.eye(A.n)
        Sinv = np.linalg.inv(X + np.eye(A.n))
        phi = id_minus(random_channel(d, seed=1))
        ref = None
        for label, mod in backends:
            use_backend(mod)
            M = mod.schur_complement(A.ptr, A.rows, A.cols, A.vals, X, Sinv)
            if ref is None:
                ref = M
            else:
                assert np.allclose(M, ref, rtol=1e-10, atol=1e-10), "backends disagree"
            number = 3 if d >= 4 else 10
            t_schur = best_of(lambda: mod.schur_complement(A.ptr, A.rows, A.cols, A.vals, X, Sinv), args.repeat, number)
            t_sdp = best_of(lambda: diamond_norm_sdp(phi), max(1, args.repeat // 2), 1)
            print(f"{d:>2} {A.m:>5} {label:>8} {1e3 * t_schur:>11.3f} {1e3 * t_sdp:>15.1f}")
    use_backend(_ckernels or _pykernels)


if __name__ == "__main__":
    main()
