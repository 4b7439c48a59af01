"""Triplet likelihoods, their losses and gradients, and the descent embedder."""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import EmptyTripletsError, NumericalError, UnsupportedError

_KIND_CODES = {"ste": kernels.STE, "tste": kernels.TSTE, "ck": kernels.CK, "gnmds": kernels.HINGE}


@dataclass(frozen=True)
class LossSpec:
    """Which triplet loss to use.

    ``alpha`` (t-STE degrees of freedom) defaults to ``max(d - 1, 1)`` at
    evaluation time.  ``mu`` is the Crowd Kernel regulariser and ``lam`` the
    Frobenius weight of the GNMDS hinge loss.
    """

    kind: str = "ste"
    alpha: float = None
    mu: float = 0.05
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {sorted(_KIND_CODES)}")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.mu < 0 or self.lam < 0:
            raise ValueError("mu and lam must be >= 0")

    @classmethod
    def ste(cls):
        return cls("ste")

    @classmethod
    def tste(cls, alpha=None):
        return cls("tste", alpha=alpha)

    @classmethod
    def crowd_kernel(cls, mu=0.05):
        return cls("ck", mu=mu)

    @classmethod
    def gnmds(cls, lam=0.0):
        return cls("gnmds", lam=lam)

    @property
    def probabilistic(self):
        return self.kind != "gnmds"

    def resolved_alpha(self, d):
        return float(self.alpha) if self.alpha is not None else float(max(d - 1, 1))

    def kernel_args(self, d):
        code = _KIND_CODES[self.kind]
        if self.kind == "tste":
            return code, self.resolved_alpha(d)
        if self.kind == "ck":
            return code, float(self.mu)
        return code, 0.0


@dataclass
class OptimizerConfig:
    max_iters: int = 2000
    step_size: float = 1.0
    backtrack: float = 0.5
    tol: float = 1e-7
    restarts: int = 3
    init_scale: float = 0.1
    grad_tol: float = 1e-3
    armijo: float = 1e-4

    def __post_init__(self):
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be >= 1")
        if not (self.step_size > 0 and self.init_scale > 0 and self.grad_tol > 0):
            raise ValueError("step_size, init_scale and grad_tol must be > 0")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")


@dataclass
class Embedding:
    coords: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coords = np.ascontiguousarray(self.coords, dtype=float)
        if self.coords.ndim != 2:
            raise ValueError("coords must be an (n, d) array")
        if not np.all(np.isfinite(self.coords)):
            raise NumericalError("embedding has non-finite coordinates")

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def d(self):
        return self.coords.shape[1]


def _coords(X):
    if isinstance(X, Embedding):
        return X.coords
    return np.ascontiguousarray(X, dtype=float)


def triplet_probability(spec, X, t):
    """Model probability of the answer ``t = (i, j, l)`` under ``spec``."""
    if not spec.probabilistic:
        raise UnsupportedError("the GNMDS hinge loss has no probability model")
    X = _coords(X)
    i, j, l = t
    dij = float(np.sum((X[i] - X[j]) ** 2))
    dil = float(np.sum((X[i] - X[l]) ** 2))
    if spec.kind == "ste":
        p = 1.0 / (1.0 + math.exp(min(dij - dil, 700.0)))
    elif spec.kind == "tste":
        a = spec.resolved_alpha(X.shape[1])
        z = 0.5 * (a + 1.0) * (math.log1p(dij / a) - math.log1p(dil / a))
        p = 1.0 / (1.0 + math.exp(min(z, 700.0)))
    else:
        den = dij + dil + 2.0 * spec.mu
        p = (dil + spec.mu) / den if den > 0 else math.nan
    if not math.isfinite(p):
        raise NumericalError(f"non-finite probability for triplet {tuple(t)}")
    return p


def _answers(S):
    return getattr(S, "answers", S)


def loss_and_gradient(spec, X, S):
    """Total loss over ``S`` and its exact gradient w.r.t. the coordinates."""
    X = _coords(X)
    code, param = spec.kernel_args(X.shape[1])
    loss, grad = kernels.loss_grad(X, _answers(S), code, param)
    if spec.kind == "gnmds" and spec.lam > 0:
        loss += spec.lam * float(np.sum(X * X))
        grad = grad + 2.0 * spec.lam * X
    if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
        raise NumericalError(f"{spec.kind} loss or gradient is not finite")
    return loss, grad


def loss_value(spec, X, S):
    X = _coords(X)
    code, param = spec.kernel_args(X.shape[1])
    loss = kernels.loss_only(X, _answers(S), code, param)
    if spec.kind == "gnmds" and spec.lam > 0:
        loss += spec.lam * float(np.sum(X * X))
    return loss


def _descend(spec, X, T, cfg):
    code, param = spec.kernel_args(X.shape[1])
    lam = spec.lam if spec.kind == "gnmds" else 0.0

    def f_and_g(Y):
        f, g = kernels.loss_grad(Y, T, code, param)
        if lam:
            f += lam * float(np.sum(Y * Y))
            g += 2.0 * lam * Y
        return f, g

    def f_only(Y):
        f = kernels.loss_only(Y, T, code, param)
        if lam:
            f += lam * float(np.sum(Y * Y))
        return f

    f, g = f_and_g(X)
    step = cfg.step_size
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        gg = float(np.sum(g * g))
        if not math.isfinite(f) or not math.isfinite(gg):
            raise NumericalError(f"{spec.kind} descent produced non-finite values")
        if math.sqrt(gg) <= cfg.grad_tol * max(1.0, f):
            converged = True
            break
        while True:
            Y = X - step * g
            f_new = f_only(Y)
            if f_new <= f - cfg.armijo * step * gg:
                break
            step *= cfg.backtrack
            if step < 1e-300:
                break
        if step < 1e-300:
            converged = True
            break
        rel = (f - f_new) / max(abs(f), abs(f_new), 1.0)
        f, g_new = f_and_g(Y)
        # Barzilai-Borwein trial step for the next line search
        s_vec = Y - X
        y_vec = g_new - g
        sy = float(np.sum(s_vec * y_vec))
        step = float(np.sum(s_vec * s_vec)) / sy if sy > 0 else step / cfg.backtrack
        X, g = Y, g_new
        if rel < cfg.tol:
            converged = True
            break
    return X, f, it, converged


def embed(S, d, spec=LossSpec(), cfg=None, rng=None, init=None):
    """Minimum-loss embedding of ``S`` in ``d`` dimensions over random restarts.

    ``init`` replaces the random start of the first restart.
    """
    if len(S) == 0:
        raise EmptyTripletsError("cannot embed an empty triplet set")
    if d < 1:
        raise ValueError("d must be >= 1")
    cfg = cfg or OptimizerConfig()
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    T = np.ascontiguousarray(S.answers, dtype=np.int64)
    best = None
    losses = []
    for r in range(cfg.restarts):
        X0 = rng.normal(0.0, cfg.init_scale, size=(S.n, d))
        if r == 0 and init is not None:
            X0 = np.array(_coords(init), dtype=float, copy=True)
        X, f, iters, conv = _descend(spec, X0, T, cfg)
        losses.append(f)
        if best is None or f < best[1]:
            best = (X, f, iters, conv)
    X, f, iters, conv = best
    info = {
        "loss_kind": spec.kind,
        "final_loss": f,
        "iterations": iters,
        "converged": conv,
        "restart_losses": losses,
        "seed": seed,
        "optimizer": asdict(cfg),
        "n_triplets": len(S),
    }
    if spec.kind == "tste":
        info["alpha"] = spec.resolved_alpha(d)
    elif spec.kind == "ck":
        info["mu"] = spec.mu
    elif spec.kind == "gnmds":
        info["lambda"] = spec.lam
    return Embedding(X, info)


def write_embedding(emb, path):
    """CSV with 17 significant digits plus a ``.json`` metadata sidecar."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for row in emb.coords:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(emb.info, fh, indent=2, sort_keys=True, default=_jsonable)


def read_embedding(path):
    path = Path(path)
    coords = np.loadtxt(path, delimiter=",", ndmin=2)
    meta = path.with_suffix(".json")
    info = json.loads(meta.read_text(encoding="utf-8")) if meta.exists() else {}
    return Embedding(coords, info)


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
