"""Bootstrap and Bayesian (elliptical slice sampling) embedding ensembles."""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import (
    Embedding,
    LossSpec,
    OptimizerConfig,
    _jsonable,
    embed,
    loss_value,
    read_embedding,
    write_embedding,
)
from .errors import (
    ConfigError,
    DegenerateError,
    NonTerminationError,
    NumericalError,
    NumericalFailure,
    UnsupportedError,
)

MAX_SHRINKS = 1000


@dataclass(frozen=True)
class PriorSpec:
    """Isotropic Gaussian prior ``N(0, scale * I)`` on every point."""

    scale: float = 15.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError("prior scale must be > 0")

    def draw(self, shape, rng):
        return math.sqrt(self.scale) * rng.standard_normal(shape)


@dataclass
class EmbeddingEnsemble:
    members: np.ndarray  # (b, n, d)
    source: dict
    aligned: bool = False
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=float)
        if self.members.ndim != 3:
            raise ValueError("members must stack to a (b, n, d) array")

    @property
    def b(self):
        return self.members.shape[0]

    @property
    def n(self):
        return self.members.shape[1]

    @property
    def d(self):
        return self.members.shape[2]

    @property
    def kind(self):
        return self.source["kind"]

    def __len__(self):
        return self.b

    def __getitem__(self, k):
        return self.members[k]


def _centered(X):
    return X - X.mean(axis=0)


def procrustes_align(X, X_ref, return_scale=False):
    """Rotate, reflect and scale ``X`` onto ``X_ref`` in least squares.

    The result is placed at ``X_ref``'s centroid.
    """
    X = np.asarray(getattr(X, "coords", X), dtype=float)
    X_ref = np.asarray(getattr(X_ref, "coords", X_ref), dtype=float)
    if X.shape != X_ref.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {X_ref.shape}")
    Xc = _centered(X)
    Rc = _centered(X_ref)
    nx = float(np.sum(Xc * Xc))
    if nx == 0.0:
        raise DegenerateError("cannot align an embedding with all points coincident")
    if not np.any(Rc):
        raise DegenerateError("reference embedding has all points coincident")
    U, s, Vt = np.linalg.svd(Xc.T @ Rc)
    R = U @ Vt
    scale = float(s.sum()) / nx
    out = scale * (Xc @ R) + X_ref.mean(axis=0)
    if return_scale:
        return out, scale
    return out


def _seeds(rng, k):
    return [int(s) for s in rng.integers(0, 2**63 - 1, size=k)]


def bootstrap_ensemble(S, d, spec=LossSpec(), b=20, r=0.4, cfg=None, rng=None):
    """``b`` embeddings of without-replacement triplet subsamples, aligned.

    A member picked at random serves as the Procrustes reference.
    """
    if b < 2:
        raise ConfigError("need b >= 2 replicas")
    if not 0 < r < 1:
        raise ConfigError("subsample fraction r must lie in (0, 1)")
    size = int(math.floor(r * len(S)))
    if size < 1:
        raise ConfigError(f"floor(r * |S|) = {size}; need at least one triplet per replica")
    cfg = cfg or OptimizerConfig()
    rng = np.random.default_rng(rng)
    seeds = _seeds(rng, b)
    reference = int(rng.integers(b))
    raw = []
    for k, seed in enumerate(seeds):
        rep = np.random.default_rng(seed)
        idx = np.sort(rep.choice(len(S), size=size, replace=False))
        try:
            raw.append(embed(S.subset(idx), d, spec, cfg, rep).coords)
        except NumericalFailure as exc:
            raise NumericalError(f"bootstrap replica {k} (seed {seed}) failed: {exc}") from exc
    ref = raw[reference]
    members, scales = [], []
    for X in raw:
        Y, s = procrustes_align(X, ref, return_scale=True)
        members.append(Y)
        scales.append(s)
    return EmbeddingEnsemble(
        np.stack(members),
        {"kind": "bootstrap", "b": b, "r": r, "subsample_size": size, "loss": spec.kind},
        aligned=True,
        info={"replica_seeds": seeds, "reference": reference, "alignment_scales": scales},
    )


def ess_step(x, log_lik, prior, rng, cur_log_lik=None):
    """One elliptical slice sampling update.

    Returns ``(x_new, log_lik(x_new), log_threshold)``; the new state always
    satisfies ``log_lik(x_new) > log_threshold``.
    """
    x = np.asarray(x, dtype=float)
    if cur_log_lik is None:
        cur_log_lik = log_lik(x)
    if not math.isfinite(cur_log_lik):
        raise ValueError("log-likelihood of the current state must be finite")
    nu = prior.draw(x.shape, rng)
    threshold = cur_log_lik + math.log(rng.uniform())
    theta = rng.uniform(0.0, 2.0 * math.pi)
    lo, hi = theta - 2.0 * math.pi, theta
    for _ in range(MAX_SHRINKS):
        proposal = x * math.cos(theta) + nu * math.sin(theta)
        ll = log_lik(proposal)
        if ll > threshold:
            return proposal, ll, threshold
        if theta < 0:
            lo = theta
        else:
            hi = theta
        theta = rng.uniform(lo, hi)
    raise NonTerminationError(f"no acceptable proposal after {MAX_SHRINKS} bracket shrinks")


def bayesian_ensemble(
    S,
    d,
    spec=LossSpec(),
    prior=PriorSpec(),
    n_samples=500,
    thinning=1,
    cfg=None,
    rng=None,
    center=True,
    align=False,
):
    """Posterior samples of embeddings under ``prior`` and the triplet likelihood.

    The chain starts at the maximum-likelihood embedding, which is emitted as
    the first member; no burn-in is discarded.
    """
    if not spec.probabilistic:
        raise UnsupportedError("Bayesian ensembles need a probabilistic likelihood")
    if n_samples < 2 or thinning < 1:
        raise ConfigError("need n_samples >= 2 and thinning >= 1")
    rng = np.random.default_rng(rng)
    init_seed, chain_seed = _seeds(rng, 2)
    X0 = embed(S, d, spec, cfg, init_seed)
    chain = np.random.default_rng(chain_seed)

    def log_lik(X):
        return -loss_value(spec, X, S)

    x = _centered(X0.coords) if center else X0.coords.copy()
    ll = log_lik(x)
    members = [x]
    evals = 0
    for _ in range(n_samples - 1):
        for _ in range(thinning):
            x, ll, _ = ess_step(x, log_lik, prior, chain, ll)
            evals += 1
            if center:
                x = _centered(x)
        members.append(x)
    members = np.stack(members)
    info = {"init_seed": init_seed, "chain_seed": chain_seed, "centered": center, "steps": evals,
            "init_loss": X0.info["final_loss"]}
    aligned = False
    if align:
        members = np.stack([procrustes_align(m, members[0]) for m in members])
        aligned = True
    return EmbeddingEnsemble(
        members,
        {"kind": "bayesian", "prior_scale": prior.scale, "n_samples": n_samples,
         "thinning": thinning, "loss": spec.kind},
        aligned=aligned,
        info=info,
    )


def write_ensemble(E, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k, X in enumerate(E.members):
        write_embedding(Embedding(X, {"member": k}), directory / f"member_{k}.csv")
    meta = {"source": E.source, "b": E.b, "aligned": E.aligned, **E.info}
    with open(directory / "ensemble.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_jsonable)


def read_ensemble(directory):
    directory = Path(directory)
    meta = json.loads((directory / "ensemble.json").read_text(encoding="utf-8"))
    members = np.stack([read_embedding(directory / f"member_{k}.csv").coords for k in range(meta["b"])])
    info = {k: v for k, v in meta.items() if k not in ("source", "b", "aligned")}
    return EmbeddingEnsemble(members, meta["source"], meta["aligned"], info)
