"""Triplet and point uncertainties from an embedding ensemble, and their uses."""

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .embedding import LossSpec
from .ensemble import PriorSpec, bayesian_ensemble, bootstrap_ensemble
from .errors import BatchTooLargeError, ConfigError, NotAlignedError, ThresholdError
from .triplets import n_comparisons, pairwise_distances


@dataclass
class DistanceStats:
    rho_bar: np.ndarray
    sigma_bar: np.ndarray

    @property
    def n(self):
        return self.rho_bar.shape[0]


@dataclass
class PointStats:
    means: np.ndarray  # (n, d)
    covariances: np.ndarray  # (n, d, d)

    @property
    def std(self):
        """Per-coordinate standard deviations, shape (n, d)."""
        return np.sqrt(np.maximum(np.diagonal(self.covariances, axis1=1, axis2=2), 0.0))


class Verdict(enum.IntEnum):
    CLOSER_L = -1
    ABSTAIN = 0
    CLOSER_J = 1


@dataclass(frozen=True)
class Prediction:
    verdict: Verdict
    pi: float


def _members(E):
    members = getattr(E, "members", E)
    members = np.asarray(members, dtype=float)
    if members.shape[0] < 2:
        raise ConfigError("need at least two ensemble members")
    return members


def distance_stats(E):
    """Entrywise mean and sample (ddof=1) std of member distance matrices."""
    members = _members(E)
    D = np.stack([pairwise_distances(X) for X in members])
    return DistanceStats(np.ascontiguousarray(D.mean(axis=0)), np.ascontiguousarray(D.std(axis=0, ddof=1)))


def point_stats(E):
    members = _members(E)
    if getattr(E, "source", {}).get("kind") == "bootstrap" and not E.aligned:
        raise NotAlignedError("bootstrap members must be Procrustes-aligned first")
    means = members.mean(axis=0)
    dev = members - means
    cov = np.einsum("bni,bnj->nij", dev, dev) / (members.shape[0] - 1)
    return PointStats(means, cov)


def triplet_uncertainty(stats, i, j, l):
    """Probability that ``j`` is closer to ``i`` than ``l`` is."""
    if len({i, j, l}) != 3:
        raise ValueError("i, j, l must be distinct")
    r, s = stats.rho_bar, stats.sigma_bar
    return float(kernels.pi_values(r[i, j], r[i, l], s[i, j], s[i, l]))


def pi_for(stats, triplets):
    """Vectorised ``triplet_uncertainty`` over (m, 3) index rows."""
    T = np.asarray(getattr(triplets, "answers", triplets), dtype=np.int64).reshape(-1, 3)
    i, j, l = T.T
    r, s = stats.rho_bar, stats.sigma_bar
    return kernels.pi_values(r[i, j], r[i, l], s[i, j], s[i, l])


def _check_threshold(t):
    if not 0.5 < t <= 1.0:
        raise ThresholdError(f"threshold must lie in (0.5, 1], got {t}")


def verdicts(pi, t):
    """+1 (j closer), -1 (l closer) or 0 (abstain) for each pi."""
    _check_threshold(t)
    pi = np.asarray(pi, dtype=float)
    return np.where(pi > t, 1, np.where(pi < 1.0 - t, -1, 0))


def predict_with_abstention(stats, i, j, l, t):
    pi = triplet_uncertainty(stats, i, j, l)
    return Prediction(Verdict(int(verdicts(pi, t))), pi)


def folded_average_uncertainty(stats):
    """Mean of min(pi, 1 - pi) over all unordered comparisons."""
    n = stats.n
    if n < 3:
        raise ValueError("need n >= 3")
    return float(kernels.folded_sum(stats.rho_bar, stats.sigma_bar)) / n_comparisons(n)


def true_triplet_average_uncertainty(stats, truth):
    """Mean pi over the true orientations; 1 means certain and correct."""
    if len(truth) == 0:
        raise ValueError("empty truth set")
    return float(np.mean(pi_for(stats, truth)))


def calibration_uncertainty(stats, truth):
    """``true_triplet_average_uncertainty`` flipped about 0.5: 0 is fully certain."""
    return 1.0 - true_triplet_average_uncertainty(stats, truth)


@dataclass(frozen=True)
class BootstrapMethod:
    spec: LossSpec = LossSpec()
    b: int = 20
    r: float = 0.4

    def build(self, S, d, cfg=None, rng=None):
        return bootstrap_ensemble(S, d, self.spec, self.b, self.r, cfg, rng)


@dataclass(frozen=True)
class BayesianMethod:
    spec: LossSpec = LossSpec()
    prior: PriorSpec = PriorSpec()
    n_samples: int = 500
    thinning: int = 1

    def build(self, S, d, cfg=None, rng=None):
        return bayesian_ensemble(S, d, self.spec, self.prior, self.n_samples, self.thinning, cfg, rng)


@dataclass
class ScanResult:
    dims: list
    uncertainty: list
    best_dim: int


def dimension_scan(S, dims, method=BootstrapMethod(), cfg=None, rng=None):
    """Folded average uncertainty per candidate dimension; smallest argmin wins."""
    dims = [int(d) for d in dims]
    if not dims or min(dims) < 1:
        raise ConfigError("dims must be a non-empty list of positive integers")
    rng = np.random.default_rng(rng)
    seeds = [int(s) for s in rng.integers(0, 2**63 - 1, size=len(dims))]
    values = []
    for d, seed in zip(dims, seeds):
        E = method.build(S, d, cfg, seed)
        values.append(folded_average_uncertainty(distance_stats(E)))
    best = min(range(len(dims)), key=lambda k: (values[k], dims[k]))
    return ScanResult(dims, values, dims[best])


def select_uncertain_batch(stats, k):
    """The ``k`` comparisons with pi closest to 0.5, as (i, j, l) rows with j < l.

    Ties are broken lexicographically.  Anchors are streamed so memory stays
    O(k + n^2) rather than O(n^3).
    """
    n = stats.n
    total = n_comparisons(n)
    if k < 1:
        raise ConfigError("batch size must be >= 1")
    if k > total:
        raise BatchTooLargeError(f"batch of {k} exceeds the {total} available comparisons")
    rho, sig = stats.rho_bar, stats.sigma_bar
    jj, ll = np.triu_indices(n - 1, k=1)
    keep_key = np.empty(0)
    keep = np.empty((0, 3), dtype=np.int64)
    for i in range(n):
        p = np.asarray(kernels.anchor_pi(rho, sig, i))
        key = (p - 0.5) ** 2
        if key.size > k:
            kth = np.partition(key, k - 1)[k - 1]
            idx = np.flatnonzero(key <= kth)
        else:
            idx = np.arange(key.size)
        j = jj[idx] + (jj[idx] >= i)
        l = ll[idx] + (ll[idx] >= i)
        cand = np.column_stack([np.full(idx.size, i), j, l])
        keep_key = np.concatenate([keep_key, key[idx]])
        keep = np.vstack([keep, cand])
        order = np.lexsort((keep[:, 2], keep[:, 1], keep[:, 0], keep_key))[:k]
        keep_key, keep = keep_key[order], keep[order]
    return keep.astype(np.int64)


def write_uncertainty_report(path, stats, points=None, scan=None):
    """JSON with row-major flattened rho_bar/sigma_bar and whatever else is given."""
    report = {
        "n": stats.n,
        "rho_bar": stats.rho_bar.ravel().tolist(),
        "sigma_bar": stats.sigma_bar.ravel().tolist(),
        "folded_average": folded_average_uncertainty(stats),
    }
    if points is not None:
        report["point_means"] = points.means.tolist()
        report["point_covariances"] = points.covariances.tolist()
    if scan is not None:
        report["scan"] = {"dims": scan.dims, "uncertainty": scan.uncertainty, "best_dim": scan.best_dim}
    Path(path).write_text(json.dumps(report, indent=2), encoding="utf-8")
    return report


__all__ = [
    "DistanceStats",
    "PointStats",
    "Verdict",
    "Prediction",
    "distance_stats",
    "point_stats",
    "triplet_uncertainty",
    "pi_for",
    "verdicts",
    "predict_with_abstention",
    "folded_average_uncertainty",
    "true_triplet_average_uncertainty",
    "calibration_uncertainty",
    "BootstrapMethod",
    "BayesianMethod",
    "ScanResult",
    "dimension_scan",
    "select_uncertain_batch",
    "write_uncertainty_report",
]
