"""numba loop kernels mirroring ``_kernels_numpy`` one-for-one."""

import math

import numpy as np
from numba import njit

STE, TSTE, CK, HINGE = 0, 1, 2, 3
DEGENERATE_SIGMA = 1e-12
_SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def _softplus(z):
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


@njit(cache=True)
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@njit(cache=True)
def _term(dij, dil, kind, param):
    # returns (loss, dL/d dij, dL/d dil)
    if kind == STE:
        z = dij - dil
        s = _sigmoid(z)
        return _softplus(z), s, -s
    elif kind == TSTE:
        half = 0.5 * (param + 1.0)
        z = half * (math.log1p(dij / param) - math.log1p(dil / param))
        s = _sigmoid(z)
        return _softplus(z), s * half / (param + dij), -s * half / (param + dil)
    elif kind == CK:
        tot = dij + dil + 2.0 * param
        far = dil + param
        if tot <= 0.0 or far <= 0.0:
            return np.nan, np.nan, np.nan
        return math.log(tot) - math.log(far), 1.0 / tot, 1.0 / tot - 1.0 / far
    else:
        margin = 1.0 + dij - dil
        if margin > 0.0:
            return margin, 1.0, -1.0
        return 0.0, 0.0, 0.0


@njit(cache=True)
def loss_grad(X, T, kind, param):
    n, d = X.shape
    G = np.zeros((n, d))
    loss = 0.0
    for t in range(T.shape[0]):
        i, j, l = T[t, 0], T[t, 1], T[t, 2]
        dij = 0.0
        dil = 0.0
        for k in range(d):
            a = X[i, k] - X[j, k]
            b = X[i, k] - X[l, k]
            dij += a * a
            dil += b * b
        f, a_coef, c_coef = _term(dij, dil, kind, param)
        loss += f
        for k in range(d):
            gij = 2.0 * a_coef * (X[i, k] - X[j, k])
            gil = 2.0 * c_coef * (X[i, k] - X[l, k])
            G[i, k] += gij + gil
            G[j, k] -= gij
            G[l, k] -= gil
    return loss, G


@njit(cache=True)
def loss_only(X, T, kind, param):
    d = X.shape[1]
    loss = 0.0
    for t in range(T.shape[0]):
        i, j, l = T[t, 0], T[t, 1], T[t, 2]
        dij = 0.0
        dil = 0.0
        for k in range(d):
            a = X[i, k] - X[j, k]
            b = X[i, k] - X[l, k]
            dij += a * a
            dil += b * b
        f, _, _ = _term(dij, dil, kind, param)
        loss += f
    return loss


@njit(cache=True)
def _pi(rij, ril, sij, sil):
    den = sij + sil
    diff = ril - rij
    if den < DEGENERATE_SIGMA:
        if diff > 0.0:
            return 1.0
        elif diff < 0.0:
            return 0.0
        return 0.5
    return 0.5 * math.erfc(-(diff / den) / _SQRT2)


@njit(cache=True)
def anchor_pi(rho, sig, i):
    n = rho.shape[0]
    m = (n - 1) * (n - 2) // 2
    out = np.empty(m)
    c = 0
    for j in range(n):
        if j == i:
            continue
        for l in range(j + 1, n):
            if l == i:
                continue
            out[c] = _pi(rho[i, j], rho[i, l], sig[i, j], sig[i, l])
            c += 1
    return out


@njit(cache=True)
def folded_sum(rho, sig):
    n = rho.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            for l in range(j + 1, n):
                if l == i:
                    continue
                p = _pi(rho[i, j], rho[i, l], sig[i, j], sig[i, l])
                total += min(p, 1.0 - p)
    return total


@njit(cache=True)
def order_agreement(D_true, D_emb):
    n = D_true.shape[0]
    count = 0
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            for l in range(j + 1, n):
                if l == i:
                    continue
                a = D_true[i, j] - D_true[i, l]
                b = D_emb[i, j] - D_emb[i, l]
                if a * b > 0.0:
                    count += 1
    return count
