"""Simulated perception study: GP-sampled observers, pooled triplets, 1-D bootstrap."""

from dataclasses import dataclass

import numpy as np

from .embedding import LossSpec
from .ensemble import bootstrap_ensemble
from .errors import CholeskyError, DegenerateError
from .triplets import TripletSet, random_comparisons

MAX_JITTER = 1e-6


@dataclass(frozen=True)
class GpSpec:
    """Logistic-mean GP with a squared-exponential kernel, pinned at 0 -> 0 and 1 -> 1."""

    lengthscale: float = 0.54
    steepness: float = 25.0
    jitter: float = 1e-10
    anchors: tuple = (0.0, 1.0)
    targets: tuple = (0.0, 1.0)

    def __post_init__(self):
        if not self.lengthscale > 0:
            raise ValueError("lengthscale must be > 0")

    def prior_mean(self, x):
        return 1.0 / (1.0 + np.exp(-self.steepness * (np.asarray(x, dtype=float) - 0.5)))

    def kernel(self, a, b):
        a = np.asarray(a, dtype=float)[:, None]
        b = np.asarray(b, dtype=float)[None, :]
        return np.exp(-((a - b) ** 2) / (2.0 * self.lengthscale**2))

    def posterior(self, x):
        """Mean and covariance at ``x`` after conditioning on the anchors."""
        x = np.asarray(x, dtype=float)
        xa = np.asarray(self.anchors, dtype=float)
        ya = np.asarray(self.targets, dtype=float)
        Kaa = self.kernel(xa, xa)
        Kxa = self.kernel(x, xa)
        sol = np.linalg.solve(Kaa, Kxa.T)
        mean = self.prior_mean(x) + Kxa @ np.linalg.solve(Kaa, ya - self.prior_mean(xa))
        cov = self.kernel(x, x) - Kxa @ sol
        return mean, 0.5 * (cov + cov.T)


def stimulus_grid(n_stimuli=20):
    if n_stimuli < 2:
        raise ValueError("need at least two stimuli")
    return np.linspace(0.0, 1.0, n_stimuli)


def sample_perception_functions(spec, grid, n_observers, rng=None):
    """``n_observers`` draws of the pinned GP on ``grid``, shape (n_observers, len(grid)).

    Grid points that coincide with an anchor have zero posterior variance and
    take the pinned value exactly; the rest are drawn through a jittered
    Cholesky factor.
    """
    if n_observers < 1:
        raise ValueError("need at least one observer")
    rng = np.random.default_rng(rng)
    grid = np.asarray(grid, dtype=float)
    mean, cov = spec.posterior(grid)
    pinned = np.isin(grid, np.asarray(spec.anchors, dtype=float))
    free = np.flatnonzero(~pinned)
    L = _jittered_cholesky(cov[np.ix_(free, free)], spec.jitter)
    out = np.tile(mean, (n_observers, 1))
    for a, y in zip(spec.anchors, spec.targets):
        out[:, grid == a] = y
    z = rng.standard_normal((n_observers, free.size))
    out[:, free] += z @ L.T
    return out


def _jittered_cholesky(C, jitter):
    eye = np.eye(C.shape[0])
    while True:
        try:
            return np.linalg.cholesky(C + jitter * eye)
        except np.linalg.LinAlgError:
            if jitter >= MAX_JITTER:
                raise CholeskyError(f"posterior covariance not positive definite at jitter {jitter:g}") from None
            jitter *= 10.0


def observer_triplets(f, count, rng=None):
    """Noise-free answers of one observer with perception values ``f``.

    Comparisons with exactly equal perceived distances are redrawn.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(rng)
    f = np.asarray(f, dtype=float)
    n = f.size
    comps = random_comparisons(n, count, rng)
    for _ in range(1000):
        i, j, l = comps.T
        tie = np.abs(f[i] - f[j]) == np.abs(f[i] - f[l])
        if not tie.any():
            break
        comps[tie] = random_comparisons(n, int(tie.sum()), rng)
    else:
        raise DegenerateError("perception function yields only tied comparisons")
    i, j, l = comps.T
    swap = np.abs(f[i] - f[j]) > np.abs(f[i] - f[l])
    comps[swap, 1], comps[swap, 2] = l[swap], j[swap]
    return TripletSet(n, comps)


def normalize_member(v, first=0, last=-1):
    """Affine map sending entry ``first`` to 0 and entry ``last`` to 1."""
    v = np.asarray(v, dtype=float).ravel()
    span = v[last] - v[first]
    if span == 0:
        raise DegenerateError("endpoint stimuli embedded at the same location")
    return (v - v[first]) / span


@dataclass
class PsychoResult:
    grid: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    members: np.ndarray
    functions: np.ndarray
    n_triplets: int
    lengthscale: float


def run_psycho_experiment(
    spec,
    n_stimuli=20,
    n_observers=50,
    triplets_per_observer=100,
    b=50,
    r=0.1,
    loss=LossSpec(),
    cfg=None,
    rng=None,
):
    """Pool every observer's triplets, bootstrap a 1-D embedding, normalise members."""
    rng = np.random.default_rng(rng)
    grid = stimulus_grid(n_stimuli)
    fn_seed, trip_seed, boot_seed = (int(s) for s in rng.integers(0, 2**63 - 1, size=3))
    functions = sample_perception_functions(spec, grid, n_observers, fn_seed)
    trip_rng = np.random.default_rng(trip_seed)
    pooled = np.vstack([observer_triplets(f, triplets_per_observer, trip_rng).answers for f in functions])
    S = TripletSet(n_stimuli, pooled)
    E = bootstrap_ensemble(S, 1, loss, b, r, cfg, boot_seed)
    members = np.stack([normalize_member(X[:, 0]) for X in E.members])
    mean = members.mean(axis=0)
    std = np.sqrt(members.var(axis=0, ddof=1))
    return PsychoResult(grid, mean, std, members, functions, len(S), spec.lengthscale)


def interior_mean_std(result):
    return float(np.mean(result.std[1:-1]))


__all__ = [
    "GpSpec",
    "stimulus_grid",
    "sample_perception_functions",
    "observer_triplets",
    "normalize_member",
    "PsychoResult",
    "run_psycho_experiment",
    "interior_mean_std",
]
