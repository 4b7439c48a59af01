"""Synthetic point sets and feature-CSV ingestion."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, RankError


@dataclass
class PointSet:
    points: np.ndarray
    labels: np.ndarray = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            raise ValueError("points must be an (n, d) array")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("points must be finite")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.points.shape[0],):
                raise ValueError("labels must have one entry per point")

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass
class MixtureSpec:
    means: list
    covariances: list
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        self.means = [np.asarray(m, dtype=float) for m in self.means]
        self.covariances = [np.asarray(c, dtype=float) for c in self.covariances]
        k = len(self.means)
        if k == 0 or len(self.covariances) != k:
            raise ValueError("need one covariance per mean")
        if self.weights is None:
            self.weights = np.full(k, 1.0 / k)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (k,) or np.any(self.weights < 0):
            raise ValueError("weights must be a non-negative vector, one per component")
        if not np.isclose(self.weights.sum(), 1.0):
            raise ValueError("weights must sum to 1")
        for c in self.covariances:
            if not is_spd(c):
                raise ValueError("covariances must be symmetric positive definite")

    @property
    def dim(self):
        return self.means[0].shape[0]


def is_spd(C):
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or not np.allclose(C, C.T):
        return False
    try:
        np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        return False
    return True


def three_gaussian_mixture():
    """Three equally weighted 2-D Gaussians used for the calibration studies."""
    return MixtureSpec(
        means=[[2.0, 2.0], [-2.0, -1.0], [4.0, -2.0]],
        covariances=[
            [[2.0, 0.0], [0.0, 1.0]],
            [[1.0, 0.0], [0.0, 1.0]],
            [[1.0, 0.7], [0.7, 2.0]],
        ],
    )


def sample_mixture(spec, n, rng=None):
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(rng)
    labels = rng.choice(len(spec.weights), size=n, p=spec.weights)
    z = rng.standard_normal((n, spec.dim))
    points = np.empty((n, spec.dim))
    for k, (mu, cov) in enumerate(zip(spec.means, spec.covariances)):
        mask = labels == k
        points[mask] = mu + z[mask] @ np.linalg.cholesky(cov).T
    return PointSet(points, labels)


def separated_clusters(n, n_clusters=6, dim=5, separation=10.0, rng=None):
    """Labelled isotropic unit-variance clusters on a random simplex-like layout.

    Cluster centres are drawn uniformly on a sphere of radius ``separation``
    and the layout is redrawn until every pair of centres is at least
    ``separation`` apart.
    """
    rng = np.random.default_rng(rng)
    for _ in range(1000):
        c = rng.standard_normal((n_clusters, dim))
        c *= separation / np.linalg.norm(c, axis=1, keepdims=True)
        gaps = np.linalg.norm(c[:, None] - c[None], axis=-1) + np.eye(n_clusters) * 2 * separation
        if gaps.min() >= separation:
            break
    labels = rng.integers(n_clusters, size=n)
    points = c[labels] + rng.standard_normal((n, dim))
    return PointSet(points, labels)


def full_rank_gaussian(m, dim, rng=None):
    """Correlated full-rank Gaussian features with a decaying spectrum."""
    rng = np.random.default_rng(rng)
    scales = 1.0 / np.sqrt(np.arange(1, dim + 1))
    basis, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return (rng.standard_normal((m, dim)) * scales) @ basis.T


def pca_project(features, d_true, labels=None, rtol=1e-10):
    """Project centred features on the top ``d_true`` principal axes.

    Each axis is signed so its largest-magnitude loading is positive.
    """
    F = np.asarray(features, dtype=float)
    m, D = F.shape
    if m < 2:
        raise ValueError("need at least two rows")
    if not 1 <= d_true <= min(m, D):
        raise ValueError(f"d_true must lie in [1, {min(m, D)}]")
    Fc = F - F.mean(axis=0)
    cov = Fc.T @ Fc / (m - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    rank = int(np.sum(evals > rtol * max(evals[0], np.finfo(float).tiny)))
    if rank < d_true:
        raise RankError(f"covariance rank {rank} < d_true={d_true}")
    V = evecs[:, :d_true]
    pivot = np.argmax(np.abs(V), axis=0)
    V = V * np.sign(V[pivot, np.arange(d_true)])
    return PointSet(Fc @ V, labels)


def read_features(path, label_column=None):
    """Read a numeric CSV; lines starting with '#' are skipped.

    Returns ``(features, labels)``; ``labels`` is None without a label column.
    """
    rows, linenos = [], []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            cells = text.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParseError(f"expected {width} columns, got {len(cells)}", line=lineno)
            row = []
            for col, cell in enumerate(cells, start=1):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise ParseError(f"not a number: {cell!r}", line=lineno, column=col) from None
            rows.append(row)
            linenos.append(lineno)
    if not rows:
        return np.empty((0, 0)), None
    data = np.array(rows)
    if label_column is None:
        return data, None
    col = label_column % width
    raw = data[:, col]
    if not np.all(raw == np.round(raw)):
        bad = int(np.flatnonzero(raw != np.round(raw))[0])
        raise ParseError("label is not an integer", line=linenos[bad], column=col + 1)
    return np.delete(data, col, axis=1), raw.astype(np.int64)


def write_features(path, features, labels=None):
    F = np.asarray(features, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        for r, row in enumerate(F):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[r])))
            fh.write(",".join(cells) + "\n")
