"""Triplet answers, the log-normal answer noise model, and triplet files.

A triplet ``(i, j, l)`` asserts that point ``i`` is closer to ``j`` than to
``l``.  A *comparison* is the unordered question ``{i, (j, l)}``; we store it
canonically as ``(i, min(j, l), max(j, l))``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, ParseError, TieError, TripletIndexError


class Orientation(enum.Enum):
    J_CLOSER = "j"
    L_CLOSER = "l"


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian noise on log-distances; ``sigma == 0`` answers truthfully."""

    sigma: float = 0.0

    def __post_init__(self):
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise DomainError(f"noise sigma must be finite and >= 0, got {self.sigma}")

    def p_j_closer(self, delta_ij, delta_il):
        """Probability that the answer is (i, j, l)."""
        dij = np.asarray(delta_ij, dtype=float)
        dil = np.asarray(delta_il, dtype=float)
        if self.sigma == 0:
            return np.where(dij < dil, 1.0, np.where(dij > dil, 0.0, 0.5))
        z = (np.log(dil) - np.log(dij)) / (self.sigma * math.sqrt(2.0))
        return ndtr(z)


class TripletSet:
    """Ordered multiset of triplet answers over ``n`` points.

    ``answers`` is an ``(m, 3)`` int64 array; duplicates are kept.
    """

    __slots__ = ("n", "answers")

    def __init__(self, n, answers=None):
        n = int(n)
        if answers is None:
            answers = np.empty((0, 3), dtype=np.int64)
        answers = np.ascontiguousarray(answers, dtype=np.int64).reshape(-1, 3)
        if answers.size:
            if answers.min() < 0 or answers.max() >= n:
                bad = np.flatnonzero(((answers < 0) | (answers >= n)).any(axis=1))[0]
                raise TripletIndexError(f"triplet {tuple(answers[bad])} out of range for n={n}")
            a, b, c = answers.T
            dup = (a == b) | (a == c) | (b == c)
            if dup.any():
                bad = np.flatnonzero(dup)[0]
                raise DomainError(f"triplet {tuple(answers[bad])} has repeated indices")
        answers.flags.writeable = False
        self.n = n
        self.answers = answers

    def __len__(self):
        return self.answers.shape[0]

    def __iter__(self):
        return (tuple(int(v) for v in row) for row in self.answers)

    def __eq__(self, other):
        if not isinstance(other, TripletSet):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.answers, other.answers)

    def __repr__(self):
        return f"TripletSet(n={self.n}, m={len(self)})"

    def subset(self, idx):
        return TripletSet(self.n, self.answers[np.asarray(idx)])

    def concat(self, other):
        if other.n != self.n:
            raise ValueError("point counts differ")
        return TripletSet(self.n, np.vstack([self.answers, other.answers]))

    def reversed(self):
        """Every answer flipped: (i, j, l) -> (i, l, j)."""
        return TripletSet(self.n, self.answers[:, [0, 2, 1]])

    def comparisons(self):
        """Canonical (i, min(j,l), max(j,l)) rows, one per answer."""
        a = self.answers
        lo = np.minimum(a[:, 1], a[:, 2])
        hi = np.maximum(a[:, 1], a[:, 2])
        return np.column_stack([a[:, 0], lo, hi])


def n_comparisons(n):
    return n * (n - 1) * (n - 2) // 2


def pairwise_distances(X):
    X = np.asarray(X, dtype=float)
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def all_comparisons(n):
    """All canonical comparisons for n points, lexicographic in (i, j, l)."""
    jj, ll = np.triu_indices(n - 1, k=1)
    blocks = []
    for i in range(n):
        j = jj + (jj >= i)
        l = ll + (ll >= i)
        blocks.append(np.column_stack([np.full(j.shape, i), j, l]))
    if not blocks:
        return np.empty((0, 3), dtype=np.int64)
    return np.vstack(blocks).astype(np.int64)


def orient(comparisons, D, noise=NoiseModel(), rng=None):
    """Answer canonical comparisons against distance matrix ``D``."""
    comparisons = np.asarray(comparisons, dtype=np.int64).reshape(-1, 3)
    i, j, l = comparisons.T
    j_closer = answer_comparisons(D[i, j], D[i, l], noise, rng)
    out = comparisons.copy()
    out[~j_closer, 1] = l[~j_closer]
    out[~j_closer, 2] = j[~j_closer]
    return out


def answer_comparisons(delta_ij, delta_il, noise, rng=None):
    """Vectorised noisy answers; True where j is reported closer.

    With ``sigma > 0`` this consumes exactly ``2 * m`` standard normals.
    """
    dij = np.asarray(delta_ij, dtype=float)
    dil = np.asarray(delta_il, dtype=float)
    if noise.sigma == 0:
        if np.any(dij == dil):
            raise TieError("equal distances cannot be answered without noise")
        return dij < dil
    if np.any(dij <= 0) or np.any(dil <= 0):
        raise DomainError("log-normal noise needs strictly positive distances")
    eps = rng.standard_normal((2,) + dij.shape)
    return np.log(dij) + noise.sigma * eps[0] < np.log(dil) + noise.sigma * eps[1]


def answer_comparison(delta_ij, delta_il, noise, rng=None):
    closer = answer_comparisons(np.array([delta_ij]), np.array([delta_il]), noise, rng)[0]
    return Orientation.J_CLOSER if closer else Orientation.L_CLOSER


def all_true_triplets(X_star):
    """One correctly oriented triplet per comparison of the ground truth."""
    X_star = np.asarray(X_star, dtype=float)
    n = X_star.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points")
    D = pairwise_distances(X_star)
    return TripletSet(n, orient(all_comparisons(n), D))


def random_comparisons(n, count, rng):
    """Uniform draws with replacement from all canonical comparisons."""
    i = rng.integers(n, size=count)
    a = rng.integers(n - 1, size=count)
    b = rng.integers(n - 2, size=count)
    b = b + (b >= a)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    lo = lo + (lo >= i)
    hi = hi + (hi >= i)
    return np.column_stack([i, lo, hi]).astype(np.int64)


def sample_noisy_triplets(X_star, count=None, fraction=None, noise=NoiseModel(), rng=None):
    """Draw comparisons uniformly with replacement and answer them noisily.

    Exactly one of ``count`` or ``fraction`` is given; a fraction is taken
    of all n(n-1)(n-2)/2 comparisons and floored.
    """
    X_star = np.asarray(X_star, dtype=float)
    n = X_star.shape[0]
    if (count is None) == (fraction is None):
        raise ValueError("give exactly one of count or fraction")
    if fraction is not None:
        if not 0 < fraction <= 1:
            raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
        count = int(math.floor(fraction * n_comparisons(n)))
    if count < 1:
        raise ValueError("requested triplet count must be >= 1")
    rng = np.random.default_rng(rng)
    comps = random_comparisons(n, count, rng)
    return TripletSet(n, orient(comps, pairwise_distances(X_star), noise, rng))


def agreement_fraction(S, D):
    """Fraction of answers with D[i, j] < D[i, l]; ties count as violations."""
    if len(S) == 0:
        return 1.0
    i, j, l = S.answers.T
    return float(np.mean(D[i, j] < D[i, l]))


def write_triplets(S, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"n={S.n}\n")
        for i, j, l in S.answers:
            fh.write(f"{i},{j},{l}\n")


def read_triplets(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith("n="):
        raise ParseError("missing 'n=<int>' header", line=1)
    try:
        n = int(lines[0][2:])
    except ValueError:
        raise ParseError(f"bad header {lines[0]!r}", line=1) from None
    if n < 0:
        raise ParseError("negative point count", line=1)
    rows = []
    for lineno, text in enumerate(lines[1:], start=2):
        parts = text.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 'i,j,l', got {text!r}", line=lineno)
        try:
            row = [int(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-integer index in {text!r}", line=lineno) from None
        if min(row) < 0:
            raise ParseError(f"negative index in {text!r}", line=lineno)
        if len(set(row)) != 3:
            raise ParseError(f"indices not distinct in {text!r}", line=lineno)
        if max(row) >= n:
            raise TripletIndexError(f"line {lineno}: index {max(row)} >= n={n}")
        rows.append(row)
    return TripletSet(n, np.array(rows, dtype=np.int64).reshape(-1, 3))
