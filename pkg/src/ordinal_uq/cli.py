"""Batch command line: ``ordinal-uq <experiment> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, NumericalFailure, OrdinalUQError, ParseError
from .experiments import (
    ActiveLoopConfig,
    ExperimentConfig,
    run_active_experiment,
    run_calibration_sweep,
    run_dimension_experiment,
    run_prediction_grid,
    run_psycho,
)

log = logging.getLogger("ordinal_uq")

COMMANDS = ("calibrate-noise", "calibrate-triplets", "predict-grid", "dimscan", "psycho", "active")


def _floats(text):
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def _ints(text):
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


def _strs(text):
    return tuple(v for v in str(text).replace(" ", "").split(",") if v)


# flag -> (parser, help)
OPTIONS = {
    "method": (_strs, "ensemble method(s): bootstrap, bayes (comma list or repeated)"),
    "loss": (str, "triplet loss: ste, tste, ck, gnmds"),
    "b": (int, "bootstrap replicas"),
    "r": (float, "bootstrap subsample fraction"),
    "samples": (int, "posterior samples for the Bayesian ensemble"),
    "prior-scale": (float, "prior variance per coordinate"),
    "thinning": (int, "keep every k-th chain state"),
    "sigma": (float, "answer noise (log-distance std) for predict-grid, dimscan and active"),
    "dim": (int, "embedding dimension (true dimension for dimscan)"),
    "seed": (int, "master seed"),
    "reps": (int, "repetitions"),
    "n": (int, "number of points"),
    "data": (str, "feature CSV to use instead of synthetic data"),
    "label-column": (int, "label column index in --data"),
    "fraction": (float, "triplet fraction for calibrate-noise"),
    "sigmas": (_floats, "noise grid for calibrate-noise"),
    "fractions": (_floats, "triplet fractions for calibrate-triplets"),
    "thresholds": (_floats, "abstention thresholds for predict-grid"),
    "counts": (_floats, "triplet counts (fractions if < 1) for predict-grid"),
    "dims": (_ints, "candidate dimensions for dimscan"),
    "dim-fraction": (float, "triplet fraction for dimscan"),
    "lengthscales": (_floats, "GP lengthscales for psycho"),
    "stimuli": (int, "number of stimuli for psycho"),
    "observers": (int, "number of observers for psycho"),
    "triplets-per-observer": (int, "answers per observer for psycho"),
    "seed-triplets": (int, "initial random triplets for active"),
    "batch": (int, "queries per round for active"),
    "budget": (int, "final triplet count for active"),
    "policy": (_strs, "active policies: uncertainty, random"),
    "max-iters": (int, "gradient descent iteration cap"),
    "restarts": (int, "random restarts per embedding"),
    "tol": (float, "relative loss-change tolerance"),
}

_CFG_FIELDS = {
    "method": "methods", "loss": "loss", "b": "b", "r": "r", "samples": "samples",
    "prior-scale": "prior_scale", "thinning": "thinning", "seed": "seed", "reps": "reps", "n": "n",
    "data": "data", "label-column": "label_column", "fraction": "fraction", "sigmas": "sigmas",
    "fractions": "fractions", "thresholds": "thresholds", "counts": "counts", "dims": "dims",
    "dim-fraction": "dim_fraction", "lengthscales": "lengthscales", "stimuli": "n_stimuli",
    "observers": "n_observers", "triplets-per-observer": "triplets_per_observer",
    "max-iters": "max_iters", "restarts": "restarts", "tol": "tol",
}
_ACTIVE_FIELDS = {"seed-triplets": "seed_triplets", "batch": "batch", "budget": "budget",
                  "policy": "policies", "sigma": "sigma", "dim": "d", "n": "n"}


def read_config_file(path):
    """Parse ``key = value`` lines; '#' starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("_", "-")
            if key not in OPTIONS:
                raise ParseError(f"unknown key {key!r}", line=lineno)
            try:
                values[key] = OPTIONS[key][0](value)
            except ValueError:
                raise ParseError(f"bad value for {key}: {value!r}", line=lineno) from None
    return values


def build_parser():
    parser = argparse.ArgumentParser(prog="ordinal-uq", description="Uncertainty estimates for ordinal embeddings.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
        for flag, (conv, helptext) in OPTIONS.items():
            if conv is _strs:
                p.add_argument(f"--{flag}", action="append", help=helptext)
            else:
                p.add_argument(f"--{flag}", type=conv, help=helptext)
    return parser


def resolve(command, args):
    """Merge config file and flags into (ExperimentConfig, ActiveLoopConfig)."""
    values = read_config_file(args.config) if args.config else {}
    for flag, (conv, _) in OPTIONS.items():
        v = getattr(args, flag.replace("-", "_"))
        if v is None:
            continue
        if conv is _strs:
            v = tuple(item for chunk in v for item in _strs(chunk))
        values[flag] = v
    kwargs = {_CFG_FIELDS[k]: v for k, v in values.items() if k in _CFG_FIELDS}
    if command in ("calibrate-noise", "calibrate-triplets", "predict-grid", "psycho", "active"):
        if "dim" in values:
            kwargs["d"] = values["dim"]
    if command == "dimscan":
        if "dim" in values:
            kwargs["d_true"] = values["dim"]
        if "sigma" in values:
            kwargs["dim_sigma"] = values["sigma"]
    if command == "predict-grid" and "sigma" in values:
        kwargs["sigma"] = values["sigma"]
    if command in ("predict-grid", "dimscan", "psycho", "active") and "methods" not in kwargs:
        kwargs["methods"] = ("bootstrap",)
    if command == "psycho":
        kwargs.setdefault("b", 50)
        kwargs.setdefault("r", 0.1)
        kwargs.setdefault("d", 1)
    try:
        cfg = ExperimentConfig(**kwargs)
        acfg = None
        if command == "active":
            akw = {_ACTIVE_FIELDS[k]: v for k, v in values.items() if k in _ACTIVE_FIELDS}
            acfg = ActiveLoopConfig(**akw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, acfg


def run(command, cfg, acfg=None):
    if command == "calibrate-noise":
        return run_calibration_sweep(cfg, "noise")
    if command == "calibrate-triplets":
        return run_calibration_sweep(cfg, "triplets")
    if command == "predict-grid":
        return run_prediction_grid(cfg)
    if command == "dimscan":
        return run_dimension_experiment(cfg)
    if command == "psycho":
        return run_psycho(cfg)
    if command == "active":
        return run_active_experiment(cfg, acfg)
    raise ConfigError(f"unknown command {command!r}")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg, acfg = resolve(args.command, args)
        table = run(args.command, cfg, acfg)
        path = table.write(Path(args.out))
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OrdinalUQError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    log.info("wrote %s", path)
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
