"""Metrics: Procrustes error, abstaining prediction error, kNN, spectral clustering, ARI."""

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.cluster import KMeans

from . import kernels
from .errors import DisconnectedGraphError, ShapeError
from .triplets import n_comparisons, pairwise_distances


def _arr(X):
    return np.asarray(getattr(X, "coords", X), dtype=float)


def procrustes_distance(X, X_star, scaling=False):
    """min over orthogonal U of ||X U - X_star||_F^2 after centring both.

    With ``scaling=True`` the minimum also runs over a positive factor on X.
    """
    X, X_star = _arr(X), _arr(X_star)
    if X.shape != X_star.shape:
        raise ShapeError(f"shape mismatch {X.shape} vs {X_star.shape}")
    Xc = X - X.mean(axis=0)
    Yc = X_star - X_star.mean(axis=0)
    U, sv, Vt = np.linalg.svd(Xc.T @ Yc)
    s = 1.0
    if scaling:
        nx = float(np.sum(Xc * Xc))
        s = float(sv.sum()) / nx if nx > 0 else 0.0
    resid = s * (Xc @ (U @ Vt)) - Yc
    return float(np.sum(resid * resid))


def triplet_prediction_error(verdicts):
    """(error on predicted, abstention rate) for verdicts over *true* triplets.

    A verdict of +1 agrees with the true triplet, -1 contradicts it and 0 is
    an abstention.  The error is 0 when nothing is predicted.
    """
    v = np.asarray(verdicts)
    if v.size == 0:
        return 0.0, 0.0
    right = int(np.sum(v > 0))
    wrong = int(np.sum(v < 0))
    abstained = v.size - right - wrong
    err = wrong / (right + wrong) if right + wrong else 0.0
    return err, abstained / v.size


def knn_error(X, labels, k=5):
    """Leave-one-out kNN misclassification rate; vote ties go to the smallest label."""
    X = _arr(X)
    labels = np.asarray(labels)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must lie in [1, {n - 1}]")
    D = pairwise_distances(X)
    np.fill_diagonal(D, np.inf)
    nbrs = np.argsort(D, axis=1, kind="stable")[:, :k]
    classes = np.unique(labels)
    wrong = 0
    for p in range(n):
        counts = np.array([np.sum(labels[nbrs[p]] == c) for c in classes])
        if classes[np.argmax(counts)] != labels[p]:
            wrong += 1
    return wrong / n


def spectral_clustering(X, n_clusters, graph_k=10, rng=None):
    """Normalized spectral clustering on a symmetrized Gaussian kNN graph.

    Bandwidth is the median kNN distance; the row-normalized bottom
    eigenvectors of the symmetric Laplacian are clustered with k-means
    (20 restarts).
    """
    X = _arr(X)
    n = X.shape[0]
    if n_clusters < 2 or graph_k < 1:
        raise ValueError("need n_clusters >= 2 and graph_k >= 1")
    if n_clusters > n:
        raise ValueError("more clusters than points")
    k = min(graph_k, n - 1)
    D = pairwise_distances(X)
    np.fill_diagonal(D, np.inf)
    nbrs = np.argsort(D, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    dist = D[rows, nbrs.ravel()]
    h = float(np.median(dist))
    if h <= 0:
        h = 1.0
    W = np.zeros((n, n))
    W[rows, nbrs.ravel()] = np.exp(-(dist**2) / (2.0 * h * h))
    W = np.maximum(W, W.T)
    n_comp, _ = connected_components(csr_matrix(W > 0), directed=False)
    if n_comp > n_clusters:
        raise DisconnectedGraphError(f"kNN graph has {n_comp} components for {n_clusters} clusters")
    deg = W.sum(axis=1)
    inv = 1.0 / np.sqrt(np.maximum(deg, np.finfo(float).tiny))
    L = np.eye(n) - inv[:, None] * W * inv[None, :]
    _, vecs = np.linalg.eigh(L)
    U = vecs[:, :n_clusters]
    U = U / np.maximum(np.linalg.norm(U, axis=1, keepdims=True), np.finfo(float).tiny)
    seed = int(np.random.default_rng(rng).integers(2**31 - 1))
    km = KMeans(n_clusters=n_clusters, n_init=20, random_state=seed).fit(U)
    return km.labels_.astype(np.int64)


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1.0) / 2.0


def adjusted_rand_index(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError("labelings differ in length")
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1)
    index = _comb2(table).sum()
    sa = _comb2(table.sum(axis=1)).sum()
    sb = _comb2(table.sum(axis=0)).sum()
    expected = sa * sb / _comb2(n) if n > 1 else 0.0
    best = 0.5 * (sa + sb)
    if best == expected:
        return 1.0
    return float((index - expected) / (best - expected))


def true_triplet_error(D_true, X):
    """Fraction of all ground-truth comparisons that the embedding ``X`` gets wrong."""
    D_true = np.ascontiguousarray(D_true, dtype=float)
    D_emb = np.ascontiguousarray(pairwise_distances(_arr(X)))
    n = D_true.shape[0]
    return 1.0 - kernels.order_agreement(D_true, D_emb) / n_comparisons(n)
