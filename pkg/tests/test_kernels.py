import os
import subprocess
import sys

import numpy as np
import pytest

from ordinal_uq import kernels
from ordinal_uq.kernels import numpy_kernels as npk

nbk = kernels.numba_kernels
needs_numba = pytest.mark.skipif(nbk is None, reason="numba unavailable or disabled")


def instance(seed, n=15, d=3, m=80):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)) * 2
    T = np.array([rng.choice(n, 3, replace=False) for _ in range(m)], dtype=np.int64)
    return X, T


def stats(seed, n=9):
    rng = np.random.default_rng(seed)
    P = rng.normal(size=(n, 2))
    rho = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
    sig = np.abs(rng.normal(size=(n, n))) * 0.3
    sig = (sig + sig.T) / 2
    sig[rng.random((n, n)) < 0.1] = 0.0  # exercise the degenerate rule
    np.fill_diagonal(sig, 0.0)
    return np.ascontiguousarray(rho), np.ascontiguousarray(np.minimum(sig, sig.T))


@needs_numba
@pytest.mark.parametrize("kind,param", [(npk.STE, 0.0), (npk.TSTE, 2.0), (npk.CK, 0.05), (npk.HINGE, 0.0)])
def test_loss_kernels_agree(kind, param):
    for seed in range(3):
        X, T = instance(seed)
        l1, g1 = npk.loss_grad(X, T, kind, param)
        l2, g2 = nbk.loss_grad(X, T, kind, param)
        assert l2 == pytest.approx(l1, rel=1e-12)
        assert np.allclose(g1, g2, rtol=1e-12, atol=1e-12)
        assert nbk.loss_only(X, T, kind, param) == pytest.approx(npk.loss_only(X, T, kind, param), rel=1e-12)


@needs_numba
def test_uncertainty_kernels_agree():
    for seed in range(4):
        rho, sig = stats(seed)
        for i in range(rho.shape[0]):
            assert np.allclose(npk.anchor_pi(rho, sig, i), nbk.anchor_pi(rho, sig, i), rtol=0, atol=1e-15)
        assert nbk.folded_sum(rho, sig) == pytest.approx(npk.folded_sum(rho, sig), rel=1e-13)
        D2 = rho + np.random.default_rng(seed).normal(size=rho.shape) * 0.2
        D2 = np.ascontiguousarray((D2 + D2.T) / 2)
        assert nbk.order_agreement(rho, D2) == npk.order_agreement(rho, D2)


def test_order_agreement_brute_force():
    rho, _ = stats(11, n=7)
    D2 = rho ** 1.5 + np.random.default_rng(0).normal(size=rho.shape) * 0.3
    D2 = (D2 + D2.T) / 2
    count = 0
    n = 7
    for i in range(n):
        for j in range(n):
            for l in range(j + 1, n):
                if i in (j, l):
                    continue
                count += (rho[i, j] - rho[i, l]) * (D2[i, j] - D2[i, l]) > 0
    assert kernels.order_agreement(rho, np.ascontiguousarray(D2)) == count


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, ORDINAL_UQ_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from ordinal_uq import kernels; print(kernels.backend(), kernels.numba_kernels)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split() == ["numpy", "None"]
