"""Experiment pipelines: calibration sweeps, prediction grid, dimension scan,
psychophysics and the active-vs-random query loop.

Every pipeline is a pure function of its config; all randomness flows from
``cfg.seed``.  Results are ``Table`` objects (plot-ready rows plus metadata).
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .datasets import (
    full_rank_gaussian,
    three_gaussian_mixture,
    pca_project,
    read_features,
    sample_mixture,
    separated_clusters,
)
from .embedding import LossSpec, OptimizerConfig, _jsonable, embed
from .ensemble import PriorSpec
from .errors import ConfigError, DisconnectedGraphError
from .evaluation import (
    adjusted_rand_index,
    knn_error,
    procrustes_distance,
    spectral_clustering,
    triplet_prediction_error,
    true_triplet_error,
)
from .psychophysics import GpSpec, run_psycho_experiment
from .triplets import (
    NoiseModel,
    TripletSet,
    all_true_triplets,
    orient,
    pairwise_distances,
    random_comparisons,
    sample_noisy_triplets,
)
from .uncertainty import (
    BayesianMethod,
    BootstrapMethod,
    calibration_uncertainty,
    distance_stats,
    folded_average_uncertainty,
    pi_for,
    select_uncertain_batch,
    verdicts,
)

METHODS = ("bootstrap", "bayes")
LOSSES = ("ste", "tste", "ck", "gnmds")
POLICIES = ("uncertainty", "random")


@dataclass
class ExperimentConfig:
    """Flat settings shared by every pipeline; each one reads what it needs."""

    n: int = 50
    d: int = 2
    loss: str = "ste"
    methods: tuple = ("bootstrap", "bayes")
    b: int = 20
    r: float = 0.4
    samples: int = 500
    prior_scale: float = 15.0
    thinning: int = 1
    sigma: float = 0.0
    reps: int = 5
    seed: int = 0
    data: str = None
    label_column: int = None
    # calibration
    fraction: float = 0.01
    sigmas: tuple = (0.0, 0.15, 0.3, 0.6, 1.2)
    fractions: tuple = (0.005, 0.02, 0.05, 0.15)
    # prediction grid
    thresholds: tuple = (0.55, 0.65, 0.75, 0.85, 0.95)
    counts: tuple = (0.01, 0.05, 0.15)
    # dimension scan
    d_true: int = 3
    dims: tuple = (1, 2, 3, 4, 5, 6)
    dim_fraction: float = 0.2
    dim_sigma: float = 0.1
    # psychophysics
    lengthscales: tuple = (2.0, 0.88, 0.54)
    n_stimuli: int = 20
    n_observers: int = 50
    triplets_per_observer: int = 100
    # optimizer
    max_iters: int = 2000
    restarts: int = 3
    tol: float = 1e-7
    init_scale: float = 0.1

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}")
        self.methods = tuple(self.methods)
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}")
        if "bayes" in self.methods and self.loss == "gnmds":
            raise ConfigError("the GNMDS hinge loss supports only the bootstrap method")
        for name in ("sigmas", "fractions", "thresholds", "counts", "dims", "lengthscales"):
            value = tuple(getattr(self, name))
            if not value:
                raise ConfigError(f"{name} must be non-empty")
            setattr(self, name, value)

    def loss_spec(self):
        return LossSpec(self.loss)

    def optimizer(self):
        try:
            return OptimizerConfig(
                max_iters=self.max_iters, restarts=self.restarts, tol=self.tol, init_scale=self.init_scale
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def method(self, name):
        if name == "bootstrap":
            return BootstrapMethod(self.loss_spec(), self.b, self.r)
        if name == "bayes":
            return BayesianMethod(self.loss_spec(), PriorSpec(self.prior_scale), self.samples, self.thinning)
        raise ConfigError(f"unknown method {name!r}")


@dataclass
class ActiveLoopConfig:
    seed_triplets: int = 2000
    batch: int = 1000
    budget: int = 10000
    policies: tuple = POLICIES
    sigma: float = 0.1
    n: int = 200
    d: int = 5
    n_clusters: int = 6
    knn_k: int = 5
    graph_k: int = 10

    def __post_init__(self):
        if self.batch < 1 or self.seed_triplets < 1:
            raise ConfigError("batch and seed_triplets must be >= 1")
        if self.seed_triplets > self.budget:
            raise ConfigError("seed_triplets must not exceed budget")
        if any(p not in POLICIES for p in self.policies):
            raise ConfigError(f"policies must be drawn from {POLICIES}")

    @property
    def rounds(self):
        return (self.budget - self.seed_triplets) // self.batch


@dataclass
class Table:
    name: str
    rows: list
    meta: dict = field(default_factory=dict)

    @property
    def columns(self):
        cols = []
        for row in self.rows:
            for key in row:
                if key not in cols:
                    cols.append(key)
        return cols

    def column(self, key):
        return [row[key] for row in self.rows]

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{self.name}.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            cols = self.columns
            writer.writerow(cols)
            for row in self.rows:
                writer.writerow([_fmt(row.get(c)) for c in cols])
        with open(out / f"{self.name}.json", "w", encoding="utf-8") as fh:
            json.dump(self.meta, fh, indent=2, sort_keys=True, default=_jsonable)
        return out / f"{self.name}.csv"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def child_seeds(seed, k):
    return [int(s) for s in np.random.default_rng(seed).integers(0, 2**63 - 1, size=k)]


def _mean_std(values):
    a = np.asarray(values, dtype=float)
    return float(np.mean(a)), float(np.std(a, ddof=1)) if a.size > 1 else 0.0


def _external_points(cfg, dim, rng):
    features, labels = read_features(cfg.data, cfg.label_column)
    if features.shape[0] < cfg.n:
        raise ConfigError(f"{cfg.data} has {features.shape[0]} rows; need n={cfg.n}")
    P = pca_project(features, dim, labels)
    idx = np.sort(rng.choice(features.shape[0], size=cfg.n, replace=False))
    return P.points[idx], (None if labels is None else labels[idx])


def mixture_points(cfg, seed):
    rng = np.random.default_rng(seed)
    if cfg.data:
        return _external_points(cfg, cfg.d, rng)[0]
    return sample_mixture(three_gaussian_mixture(), cfg.n, rng).points


def _base_meta(cfg, kind):
    return {"experiment": kind, "config": asdict(cfg), "optimizer": asdict(cfg.optimizer())}


def run_calibration_sweep(cfg, axis="noise"):
    """Embedding error and calibration uncertainty along a noise or triplet-fraction grid.

    Noise sweeps use ``cfg.fraction`` of all comparisons; fraction sweeps are
    noise-free.  The point set is fixed; each repetition redraws triplets.
    """
    if axis not in ("noise", "triplets"):
        raise ConfigError("axis must be 'noise' or 'triplets'")
    grid = cfg.sigmas if axis == "noise" else cfg.fractions
    opt = cfg.optimizer()
    point_seed, run_seed = child_seeds(cfg.seed, 2)
    X_star = mixture_points(cfg, point_seed)
    truth = all_true_triplets(X_star)
    seeds = np.array(child_seeds(run_seed, len(grid) * cfg.reps)).reshape(len(grid), cfg.reps)
    rows, per_rep = [], []
    for g, value in enumerate(grid):
        sigma, frac = (value, cfg.fraction) if axis == "noise" else (0.0, value)
        rec = {"procrustes": [], "procrustes_scaled": [], "n_triplets": []}
        rec.update({f"uncertainty_{m}": [] for m in cfg.methods})
        for k in range(cfg.reps):
            trip_seed, emb_seed, *ens_seeds = child_seeds(int(seeds[g, k]), 2 + len(cfg.methods))
            S = sample_noisy_triplets(X_star, fraction=frac, noise=NoiseModel(sigma), rng=trip_seed)
            X = embed(S, cfg.d, cfg.loss_spec(), opt, emb_seed).coords
            rec["n_triplets"].append(len(S))
            rec["procrustes"].append(procrustes_distance(X, X_star))
            rec["procrustes_scaled"].append(procrustes_distance(X, X_star, scaling=True))
            for m, es in zip(cfg.methods, ens_seeds):
                E = cfg.method(m).build(S, cfg.d, opt, es)
                rec[f"uncertainty_{m}"].append(calibration_uncertainty(distance_stats(E), truth))
        row = {"sigma" if axis == "noise" else "fraction": value, "n_triplets": rec["n_triplets"][0]}
        for key in ["procrustes", "procrustes_scaled"] + [f"uncertainty_{m}" for m in cfg.methods]:
            row[f"{key}_mean"], row[f"{key}_std"] = _mean_std(rec[key])
        rows.append(row)
        per_rep.append({"value": value, **rec})
    meta = _base_meta(cfg, f"calibrate-{axis}")
    meta.update({"axis": axis, "grid": list(grid), "repetitions": per_rep, "point_seed": point_seed})
    return Table(f"calibrate_{axis}", rows, meta)


def run_prediction_grid(cfg, thresholds=None, counts=None, method=None):
    """Error and abstention over thresholds x triplet counts, per repetition.

    ``counts`` are fractions of all comparisons when < 1, absolute otherwise.
    """
    thresholds = tuple(thresholds or cfg.thresholds)
    counts = tuple(counts or cfg.counts)
    method = method or cfg.methods[0]
    for t in thresholds:
        if not 0.5 < t <= 1:
            raise ConfigError(f"threshold {t} outside (0.5, 1]")
    opt = cfg.optimizer()
    point_seed, run_seed = child_seeds(cfg.seed, 2)
    X_star = mixture_points(cfg, point_seed)
    truth = all_true_triplets(X_star)
    seeds = np.array(child_seeds(run_seed, len(counts) * cfg.reps)).reshape(len(counts), cfg.reps)
    err = np.zeros((cfg.reps, len(thresholds), len(counts)))
    abst = np.zeros_like(err)
    for c, count in enumerate(counts):
        for k in range(cfg.reps):
            trip_seed, ens_seed = child_seeds(int(seeds[c, k]), 2)
            kwargs = {"fraction": count} if count < 1 else {"count": int(count)}
            S = sample_noisy_triplets(X_star, noise=NoiseModel(cfg.sigma), rng=trip_seed, **kwargs)
            stats = distance_stats(cfg.method(method).build(S, cfg.d, opt, ens_seed))
            pi = pi_for(stats, truth)
            for t_idx, t in enumerate(thresholds):
                err[k, t_idx, c], abst[k, t_idx, c] = triplet_prediction_error(verdicts(pi, t))
    rows = []
    for t_idx, t in enumerate(thresholds):
        for c, count in enumerate(counts):
            e_mean, e_std = _mean_std(err[:, t_idx, c])
            a_mean, a_std = _mean_std(abst[:, t_idx, c])
            rows.append({"threshold": t, "count": count, "error_mean": e_mean, "error_std": e_std,
                         "abstention_mean": a_mean, "abstention_std": a_std})
    meta = _base_meta(cfg, "predict-grid")
    meta.update({"method": method, "thresholds": list(thresholds), "counts": list(counts),
                 "error": err.tolist(), "abstention": abst.tolist(), "point_seed": point_seed})
    return Table("predict_grid", rows, meta)


def dimension_points(cfg, seed):
    """``n`` points of intrinsic dimension ``d_true``: CSV or synthetic, PCA-projected."""
    rng = np.random.default_rng(seed)
    if cfg.data:
        return _external_points(cfg, cfg.d_true, rng)[0]
    m = max(10 * cfg.n, 500)
    features = full_rank_gaussian(m, max(10, cfg.d_true + 1), rng)
    P = pca_project(features, cfg.d_true)
    idx = np.sort(rng.choice(m, size=cfg.n, replace=False))
    return P.points[idx]


def run_dimension_experiment(cfg, dims=None, warm_start=True):
    """Scan embedding dimensions: STE training loss and folded uncertainty per method.

    Each repetition draws its own point sample and noisy triplets.  With
    ``warm_start`` the training-loss embedding at each dimension also tries the
    previous dimension's solution padded with a zero column.
    """
    dims = tuple(int(d) for d in (dims or cfg.dims))
    if not dims or min(dims) < 1:
        raise ConfigError("dims must be positive integers")
    opt = cfg.optimizer()
    spec = cfg.loss_spec()
    loss = np.zeros((cfg.reps, len(dims)))
    unc = {m: np.zeros((cfg.reps, len(dims))) for m in cfg.methods}
    chosen = {m: [] for m in cfg.methods}
    for k, rep_seed in enumerate(child_seeds(cfg.seed, cfg.reps)):
        point_seed, trip_seed, emb_seed, scan_seed = child_seeds(rep_seed, 4)
        X_star = dimension_points(cfg, point_seed)
        S = sample_noisy_triplets(X_star, fraction=cfg.dim_fraction, noise=NoiseModel(cfg.dim_sigma), rng=trip_seed)
        prev = None
        for di, (d, es) in enumerate(zip(dims, child_seeds(emb_seed, len(dims)))):
            init = None
            if warm_start and prev is not None and prev.shape[1] < d:
                init = np.hstack([prev, np.zeros((prev.shape[0], d - prev.shape[1]))])
            emb = embed(S, d, spec, opt, es, init=init)
            loss[k, di] = emb.info["final_loss"]
            prev = emb.coords
        for m, ms in zip(cfg.methods, child_seeds(scan_seed, len(cfg.methods))):
            for di, (d, es) in enumerate(zip(dims, child_seeds(ms, len(dims)))):
                E = cfg.method(m).build(S, d, opt, es)
                unc[m][k, di] = folded_average_uncertainty(distance_stats(E))
            best = min(range(len(dims)), key=lambda i: (unc[m][k, i], dims[i]))
            chosen[m].append(dims[best])
    rows = []
    for di, d in enumerate(dims):
        row = {"dim": d}
        row["ste_loss_mean"], row["ste_loss_std"] = _mean_std(loss[:, di])
        for m in cfg.methods:
            row[f"uncertainty_{m}_mean"], row[f"uncertainty_{m}_std"] = _mean_std(unc[m][:, di])
        rows.append(row)
    meta = _base_meta(cfg, "dimscan")
    meta.update({"dims": list(dims), "d_true": cfg.d_true, "training_loss": loss.tolist(),
                 "uncertainty": {m: v.tolist() for m, v in unc.items()}, "chosen_dim": chosen,
                 "warm_start": warm_start})
    return Table("dimscan", rows, meta)


def run_psycho(cfg, lengthscales=None):
    """One bootstrap psychophysics simulation per lengthscale, shared seed."""
    lengthscales = tuple(lengthscales or cfg.lengthscales)
    opt = cfg.optimizer()
    rows, summary = [], []
    for ls in lengthscales:
        res = run_psycho_experiment(
            GpSpec(float(ls)), cfg.n_stimuli, cfg.n_observers, cfg.triplets_per_observer,
            cfg.b, cfg.r, cfg.loss_spec(), opt, cfg.seed,
        )
        for s, mu, sd in zip(res.grid, res.mean, res.std):
            rows.append({"stimulus": float(s), "mean": float(mu), "std": float(sd),
                         "lengthscale": float(ls), "seed": cfg.seed})
        summary.append({"lengthscale": float(ls), "interior_std": float(np.mean(res.std[1:-1])),
                        "n_triplets": res.n_triplets})
    meta = _base_meta(cfg, "psycho")
    meta["summary"] = summary
    return Table("psycho", rows, meta)


def active_dataset(acfg, seed):
    """Labelled stand-in for a real classification set: separated clusters."""
    P = separated_clusters(acfg.n, acfg.n_clusters, acfg.d, rng=seed)
    return P.points, P.labels


def _answer(comps, D, sigma, seed):
    return TripletSet(D.shape[0], orient(comps, D, NoiseModel(sigma), np.random.default_rng(seed)))


def run_active_loop(acfg, points, labels, method, opt, seed, spec=LossSpec()):
    """Grow a triplet set by uncertainty-driven or random batches; score each step.

    Both policies share the seed set and the per-round oracle noise stream,
    so their answers differ only through which comparisons are asked.
    """
    D = pairwise_distances(points)
    n = D.shape[0]
    rounds = acfg.rounds
    seed_comp_seed, seed_noise_seed, pick_master, noise_master, eval_master = child_seeds(seed, 5)
    pick_seeds = child_seeds(pick_master, rounds)
    noise_seeds = child_seeds(noise_master, rounds)
    eval_seeds = child_seeds(eval_master, 2 * (rounds + 1))
    seed_set = _answer(random_comparisons(n, acfg.seed_triplets, np.random.default_rng(seed_comp_seed)),
                       D, acfg.sigma, seed_noise_seed)
    n_clusters = len(np.unique(labels)) if labels is not None else acfg.n_clusters
    rows = []
    for policy in acfg.policies:
        S = seed_set
        for step in range(rounds + 1):
            if step > 0:
                if policy == "uncertainty":
                    stats = distance_stats(method.build(S, acfg.d, opt, pick_seeds[step - 1]))
                    comps = select_uncertain_batch(stats, acfg.batch)
                else:
                    comps = random_comparisons(n, acfg.batch, np.random.default_rng(pick_seeds[step - 1]))
                S = S.concat(_answer(comps, D, acfg.sigma, noise_seeds[step - 1]))
            X = embed(S, acfg.d, spec, opt, eval_seeds[2 * step]).coords
            row = {"policy": policy, "step": step, "n_triplets": len(S),
                   "triplet_error": true_triplet_error(D, X)}
            if labels is not None:
                row["knn_error"] = knn_error(X, labels, acfg.knn_k)
                try:
                    pred = spectral_clustering(X, n_clusters, acfg.graph_k, eval_seeds[2 * step + 1])
                    row["ari"] = adjusted_rand_index(labels, pred)
                except DisconnectedGraphError:
                    row["ari"] = math.nan
            rows.append(row)
    return rows


def run_active_experiment(cfg, acfg=None, method=None):
    acfg = acfg or ActiveLoopConfig()
    method_name = method or cfg.methods[0]
    opt = cfg.optimizer()
    rows = []
    for k, rep_seed in enumerate(child_seeds(cfg.seed, cfg.reps)):
        data_seed, loop_seed = child_seeds(rep_seed, 2)
        if cfg.data:
            cfg_n = ExperimentConfig(**{**asdict(cfg), "n": acfg.n})
            points, labels = _external_points(cfg_n, acfg.d, np.random.default_rng(data_seed))
        else:
            points, labels = active_dataset(acfg, data_seed)
        for row in run_active_loop(acfg, points, labels, cfg.method(method_name), opt, loop_seed, cfg.loss_spec()):
            rows.append({"rep": k, **row})
    meta = _base_meta(cfg, "active")
    meta.update({"active": asdict(acfg), "method": method_name, "rounds": acfg.rounds})
    return Table("active", rows, meta)


def config_fields():
    return {f.name: f for f in fields(ExperimentConfig)}
