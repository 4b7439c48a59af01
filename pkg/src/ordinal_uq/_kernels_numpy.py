"""Vectorized numpy kernels. Reference path and fallback when numba is off."""

import numpy as np
from scipy.special import ndtr

STE, TSTE, CK, HINGE = 0, 1, 2, 3
DEGENERATE_SIGMA = 1e-12


def _softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _coefficients(dij, dil, kind, param, want_grad):
    """Per-triplet loss plus derivatives w.r.t. the two squared distances."""
    if kind == STE:
        z = dij - dil
        loss = _softplus(z)
        if not want_grad:
            return loss, None, None
        s = _sigmoid(z)
        return loss, s, -s
    if kind == TSTE:
        half = 0.5 * (param + 1.0)
        z = half * (np.log1p(dij / param) - np.log1p(dil / param))
        loss = _softplus(z)
        if not want_grad:
            return loss, None, None
        s = _sigmoid(z)
        return loss, s * half / (param + dij), -s * half / (param + dil)
    if kind == CK:
        tot = dij + dil + 2.0 * param
        far = dil + param
        with np.errstate(divide="ignore", invalid="ignore"):
            loss = np.log(tot) - np.log(far)
            if not want_grad:
                return loss, None, None
            return loss, 1.0 / tot, 1.0 / tot - 1.0 / far
    if kind == HINGE:
        margin = 1.0 + dij - dil
        active = margin > 0
        loss = np.where(active, margin, 0.0)
        if not want_grad:
            return loss, None, None
        a = active.astype(np.float64)
        return loss, a, -a
    raise ValueError(f"unknown loss kind {kind}")


def loss_grad(X, T, kind, param):
    n, d = X.shape
    if T.shape[0] == 0:
        return 0.0, np.zeros_like(X)
    i, j, l = T[:, 0], T[:, 1], T[:, 2]
    uij = X[i] - X[j]
    uil = X[i] - X[l]
    dij = np.einsum("md,md->m", uij, uij)
    dil = np.einsum("md,md->m", uil, uil)
    loss, a, c = _coefficients(dij, dil, kind, param, True)
    gij = (2.0 * a)[:, None] * uij
    gil = (2.0 * c)[:, None] * uil
    G = np.empty_like(X)
    for k in range(d):
        G[:, k] = (
            np.bincount(i, gij[:, k] + gil[:, k], minlength=n)
            - np.bincount(j, gij[:, k], minlength=n)
            - np.bincount(l, gil[:, k], minlength=n)
        )
    return float(loss.sum()), G


def loss_only(X, T, kind, param):
    if T.shape[0] == 0:
        return 0.0
    i, j, l = T[:, 0], T[:, 1], T[:, 2]
    uij = X[i] - X[j]
    uil = X[i] - X[l]
    dij = np.einsum("md,md->m", uij, uij)
    dil = np.einsum("md,md->m", uil, uil)
    loss, _, _ = _coefficients(dij, dil, kind, param, False)
    return float(loss.sum())


def pi_values(rho_ij, rho_il, sig_ij, sig_il):
    """Elementwise triplet uncertainty with the degenerate-deviation rule."""
    rho_ij, rho_il = np.asarray(rho_ij, float), np.asarray(rho_il, float)
    den = np.asarray(sig_ij, float) + np.asarray(sig_il, float)
    diff = rho_il - rho_ij
    small = den < DEGENERATE_SIGMA
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ndtr(np.where(small, 0.0, diff / np.where(small, 1.0, den)))
    return np.where(small, 0.5 + 0.5 * np.sign(diff), out)


def anchor_pi(rho, sig, i):
    """pi_{i j l} for every pair j < l with j, l != i, in lexicographic (j, l) order."""
    n = rho.shape[0]
    others = np.delete(np.arange(n), i)
    jj, ll = np.triu_indices(n - 1, k=1)
    j, l = others[jj], others[ll]
    return pi_values(rho[i, j], rho[i, l], sig[i, j], sig[i, l])


def folded_sum(rho, sig):
    n = rho.shape[0]
    total = 0.0
    for i in range(n):
        p = anchor_pi(rho, sig, i)
        total += np.minimum(p, 1.0 - p).sum()
    return total


def order_agreement(D_true, D_emb):
    """Number of comparisons whose closer candidate agrees between two distance matrices.

    Ties in either matrix count as disagreement.
    """
    n = D_true.shape[0]
    jj, ll = np.triu_indices(n - 1, k=1)
    count = 0
    for i in range(n):
        j = jj + (jj >= i)
        l = ll + (ll >= i)
        a = D_true[i, j] - D_true[i, l]
        b = D_emb[i, j] - D_emb[i, l]
        count += int(np.sum(a * b > 0))
    return count
