"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported side by side, so no environment flag is needed.
The first numba call (compilation) is excluded from the timings.
"""

import argparse
import timeit

import numpy as np

from ordinal_uq import kernels
from ordinal_uq.kernels import numpy_kernels


def cases(rng):
    X = rng.normal(size=(200, 5))
    T = np.array([rng.choice(200, 3, replace=False) for _ in range(10000)], dtype=np.int64)
    P = rng.normal(size=(200, 5))
    rho = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
    sig = np.abs(rng.normal(size=rho.shape)) * 0.2
    sig = np.ascontiguousarray((sig + sig.T) / 2)
    D2 = np.ascontiguousarray(rho + sig)
    return {
        "loss_grad ste (m=10000, d=5)": lambda k: k.loss_grad(X, T, k.STE, 0.0),
        "loss_grad tste (m=10000, d=5)": lambda k: k.loss_grad(X, T, k.TSTE, 4.0),
        "loss_only ste (m=10000, d=5)": lambda k: k.loss_only(X, T, k.STE, 0.0),
        "folded_sum (n=200)": lambda k: k.folded_sum(rho, sig),
        "order_agreement (n=200)": lambda k: k.order_agreement(rho, D2),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.numba_kernels is None:
        raise SystemExit("numba is unavailable or disabled; nothing to compare")
    backends = {"numpy": numpy_kernels, "numba": kernels.numba_kernels}
    print(f"{'kernel':34s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, fn in cases(np.random.default_rng(0)).items():
        fn(backends["numba"])  # compile
        ms = {}
        for label, mod in backends.items():
            number = 3 if label == "numpy" else 20
            best = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat))
            ms[label] = 1e3 * best / number
        print(f"{name:34s} {ms['numpy']:10.2f} {ms['numba']:10.2f} {ms['numpy'] / ms['numba']:7.1f}x")


if __name__ == "__main__":
    main()
