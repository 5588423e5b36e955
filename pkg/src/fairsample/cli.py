"""Experiment runner: seeded multi-trial scheme executions with CSV output.

Configuration is a flat set of dotted keys with defaults, optionally loaded
from a TOML file (sections become key prefixes) and overridable with
``--key=value`` command-line flags.  Each trial derives its generator from
(seed, trial index), so adding trials or running them in parallel never
changes earlier results; files are written once all trials finish.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ._parallel import pmap
from .classifier import LossKind, TrainConfig, TrainingDivergence
from .bounds import HeuristicInverseSqrt, VCEnvelope
from .evaluation import excess_risk, grid_optimal_mixture, write_sweep_csv
from .oracle import min_group_accuracy, resolve_oracle
from .schemes import (
    AOpt,
    Empirical,
    EpsilonGreedy,
    Heuristic,
    RunRecord,
    SchemeConfig,
    Uniform,
    run_scheme,
)

logger = logging.getLogger("fairsample")

_TRIAL_DOMAIN = 0   # seed-derivation namespaces; grid points use 1
_EXCESS_DOMAIN = 2


class ConfigError(ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_float(text: str):
    if text.strip().lower() in ("", "none"):
        return None
    return float(text)


# key -> (parser for CLI strings, default).  TOML values arrive typed and are
# validated against the parsed type of the default.
_KEYS = {
    "oracle": (str, "instance1"),
    "scheme.kind": (str, "aopt"),
    "scheme.C": (float, 1.0),
    "scheme.ucb_multiplier": (float, 2.0),
    "scheme.zeta": (_parse_optional_float, None),
    "scheme.epsilon": (float, 0.1),
    "scheme.c0": (float, 0.1),
    "scheme.n0": (int, 10),
    "scheme.k0": (int, 4),
    "scheme.b0": (int, 50),
    "scheme.selector": (str, "ucb"),
    "bound.kind": (str, "inverse_sqrt"),
    "bound.c0": (float, 0.1),
    "bound.d_vc": (float, 3.0),
    "bound.delta": (float, 0.05),
    "train.learning_rate": (float, 0.1),
    "train.max_epochs": (int, 500),
    "train.tolerance": (float, 1e-6),
    "train.l2": (float, 1e-4),
    "train.warm_start": (_parse_bool, True),
    "budget": (int, 2000),
    "trials": (int, 1),
    "seed": (int, 0),
    "jobs": (int, 1),
    "out": (str, "out"),
    "eval": (_parse_bool, False),
    "record.stride": (int, 10),
    "sweep.resolution": (int, 1001),
    "sweep.samples": (int, 20000),
}

_SCHEME_KINDS = ("aopt", "epsilon_greedy", "empirical", "uniform", "heuristic")


def _coerce(key: str, value) -> object:
    if key not in _KEYS:
        raise ConfigError(key, "unknown configuration key")
    parser, _ = _KEYS[key]
    try:
        if isinstance(value, str):
            return parser(value)
        if parser is int and isinstance(value, float):
            if value != int(value):
                raise ValueError("expected an integer")
            return int(value)
        if parser is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if parser is _parse_optional_float and isinstance(value, (int, float)):
            return float(value)
        if parser is _parse_bool:
            if isinstance(value, bool):
                return value
            raise ValueError("expected a boolean")
        if parser is int and isinstance(value, int):
            return value
        if parser is str:
            raise ValueError("expected a string")
        raise ValueError(f"unsupported value {value!r}")
    except (ValueError, TypeError) as exc:
        raise ConfigError(key, str(exc)) from None


def load_config_file(path) -> dict:
    """Read a TOML config; one level of sections maps to key prefixes."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    flat: dict[str, object] = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            for sub, subvalue in value.items():
                if isinstance(subvalue, dict):
                    raise ConfigError(f"{key}.{sub}", "nested sections are not supported")
                flat[f"{key}.{sub}"] = subvalue
        else:
            flat[key] = value
    return flat


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description."""

    oracle: str
    scheme: SchemeConfig
    budget: int
    trials: int
    seed: int
    out: Path
    evaluate: bool = False
    stride: int = 10
    jobs: int = 1
    train: TrainConfig = TrainConfig()
    sweep_resolution: int = 1001
    sweep_samples: int = 20000
    label: str = "scheme"

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials", "must be at least 1")
        if self.budget % 2 != 0:
            raise ConfigError("budget", "must be even")
        if self.stride < 1:
            raise ConfigError("record.stride", "must be at least 1")
        if self.jobs < 1:
            raise ConfigError("jobs", "must be at least 1")


def _build_scheme(values: dict) -> SchemeConfig:
    kind_name = values["scheme.kind"].strip().lower()
    if kind_name not in _SCHEME_KINDS:
        raise ConfigError("scheme.kind", f"must be one of {_SCHEME_KINDS}")
    try:
        if kind_name == "aopt":
            kind = AOpt(
                C=values["scheme.C"],
                ucb_multiplier=values["scheme.ucb_multiplier"],
                zeta=values["scheme.zeta"],
            )
        elif kind_name == "epsilon_greedy":
            kind = EpsilonGreedy(epsilon=values["scheme.epsilon"])
        elif kind_name == "empirical":
            kind = Empirical()
        elif kind_name == "uniform":
            kind = Uniform()
        else:
            kind = Heuristic(
                n0=values["scheme.n0"],
                k0=values["scheme.k0"],
                b0=values["scheme.b0"],
                c0=values["scheme.c0"],
                selector=values["scheme.selector"],
                epsilon=values["scheme.epsilon"],
            )
    except ValueError as exc:
        raise ConfigError("scheme", str(exc)) from None

    bound_kind = values["bound.kind"].strip().lower()
    try:
        if bound_kind == "inverse_sqrt":
            schedule = HeuristicInverseSqrt(c0=values["bound.c0"])
        elif bound_kind == "vc":
            schedule = VCEnvelope(d_vc=values["bound.d_vc"], delta=values["bound.delta"])
        else:
            raise ConfigError("bound.kind", "must be 'inverse_sqrt' or 'vc'")
    except ValueError as exc:
        raise ConfigError("bound", str(exc)) from None
    return SchemeConfig(kind=kind, bounds=schedule, selection_loss=LossKind.ZERO_ONE)


def build_config(overrides: dict, label: str | None = None) -> ExperimentConfig:
    """Merge defaults with override values (already coerced) into a config."""
    values = {key: default for key, (_, default) in _KEYS.items()}
    for key, value in overrides.items():
        values[key] = _coerce(key, value)
    try:
        train = TrainConfig(
            learning_rate=values["train.learning_rate"],
            max_epochs=values["train.max_epochs"],
            tolerance=values["train.tolerance"],
            l2=values["train.l2"],
            warm_start=values["train.warm_start"],
        )
    except ValueError as exc:
        raise ConfigError("train", str(exc)) from None
    return ExperimentConfig(
        oracle=values["oracle"],
        scheme=_build_scheme(values),
        budget=values["budget"],
        trials=values["trials"],
        seed=values["seed"],
        out=Path(values["out"]),
        evaluate=values["eval"],
        stride=values["record.stride"],
        jobs=values["jobs"],
        train=train,
        sweep_resolution=values["sweep.resolution"],
        sweep_samples=values["sweep.samples"],
        label=label or values["scheme.kind"],
    )


# ---------------------------------------------------------------------------
# Trial execution
# ---------------------------------------------------------------------------

@dataclass
class FailedTrial:
    trial: int
    reason: str


def trial_seed(base_seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(_TRIAL_DOMAIN, trial))


def _trial_worker(payload):
    spec_text, scheme, budget, train_cfg, base_seed, stride, trial = payload
    spec = resolve_oracle(spec_text)
    rng = np.random.default_rng(trial_seed(base_seed, trial))
    try:
        record = run_scheme(scheme, spec, budget, train_cfg, rng, record_stride=stride)
    except TrainingDivergence as exc:
        logger.warning("trial %d failed: %s", trial, exc)
        return FailedTrial(trial=trial, reason=str(exc))
    record.trial = trial
    record.min_accuracy = min_group_accuracy(spec, record.final_classifier)
    return record


def run_trials(cfg: ExperimentConfig) -> list[RunRecord | FailedTrial]:
    """Run all trials of one experiment; results ordered by trial index."""
    payloads = [
        (cfg.oracle, cfg.scheme, cfg.budget, cfg.train, cfg.seed, cfg.stride, trial)
        for trial in range(cfg.trials)
    ]
    return pmap(_trial_worker, payloads, cfg.jobs)


@dataclass
class ExperimentResult:
    records: list
    sweep: object | None
    paths: dict[str, Path]

    @property
    def completed(self) -> list[RunRecord]:
        return [r for r in self.records if isinstance(r, RunRecord)]

    @property
    def failed(self) -> list[FailedTrial]:
        return [r for r in self.records if isinstance(r, FailedTrial)]


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute the configured trials and write trajectories/summary CSVs."""
    spec = resolve_oracle(cfg.oracle)
    logger.info("running %d trial(s) of %s on %s", cfg.trials, cfg.label, cfg.oracle)
    records = run_trials(cfg)

    sweep = None
    if cfg.evaluate:
        logger.info("evaluating: grid sweep at resolution %d", cfg.sweep_resolution)
        sweep = grid_optimal_mixture(
            spec, cfg.sweep_resolution, cfg.sweep_samples, cfg.train, cfg.seed, jobs=cfg.jobs
        )
        for record in records:
            if isinstance(record, RunRecord):
                rng = np.random.default_rng(
                    np.random.SeedSequence(cfg.seed, spawn_key=(_EXCESS_DOMAIN, record.trial))
                )
                record.excess_risk = excess_risk(record.final_pi, spec, sweep, cfg.train, rng)

    cfg.out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectories": cfg.out / "trajectories.csv",
        "summary": cfg.out / "summary.csv",
    }
    _write_trajectories(paths["trajectories"], records, spec.num_attributes)
    _write_summary(paths["summary"], records, spec.num_attributes)
    if sweep is not None:
        paths["sweep"] = cfg.out / "sweep.csv"
        write_sweep_csv(sweep, paths["sweep"])
    return ExperimentResult(records=records, sweep=sweep, paths=paths)


def compare_schemes(cfgs: list[ExperimentConfig], out_dir) -> list[dict]:
    """Run several schemes against one oracle and tabulate min-accuracy.

    All configurations must share the oracle and budget.  Returns one row
    per scheme with the across-trial mean and sample std of the final
    minimum test accuracy, and writes comparison.csv.
    """
    if not cfgs:
        raise ValueError("no configurations to compare")
    first = cfgs[0]
    for cfg in cfgs[1:]:
        if cfg.oracle != first.oracle:
            raise ValueError("mismatched oracles: comparison needs a shared oracle")
        if cfg.budget != first.budget:
            raise ValueError("mismatched budgets: comparison needs a shared budget")
    rows = []
    for cfg in cfgs:
        records = run_trials(cfg)
        accs = [r.min_accuracy for r in records if isinstance(r, RunRecord)]
        failures = sum(1 for r in records if isinstance(r, FailedTrial))
        row = {
            "scheme": cfg.label,
            "trials": cfg.trials,
            "completed": len(accs),
            "failures": failures,
            "mean_min_acc": float(np.mean(accs)) if accs else math.nan,
            "std_min_acc": float(np.std(accs, ddof=1)) if len(accs) > 1 else math.nan,
        }
        rows.append(row)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "trials", "completed", "failures", "mean_min_acc", "std_min_acc"])
        for row in rows:
            writer.writerow(
                [
                    row["scheme"],
                    row["trials"],
                    row["completed"],
                    row["failures"],
                    _fmt(row["mean_min_acc"]),
                    _fmt(row["std_min_acc"]),
                ]
            )
    return rows


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _write_trajectories(path: Path, records, m: int) -> None:
    header = (
        ["trial", "t", "z"]
        + [f"pi_{z}" for z in range(m)]
        + [f"loss_{z}" for z in range(m)]
        + [f"n_{z}" for z in range(m)]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for record in records:
            if not isinstance(record, RunRecord):
                continue
            for i in range(len(record.ts)):
                writer.writerow(
                    [record.trial, record.ts[i], record.zs[i]]
                    + [_fmt(v) for v in record.pis[i]]
                    + [_fmt(v) for v in record.losses[i]]
                    + [int(v) for v in record.counts[i]]
                )


def _write_summary(path: Path, records, m: int) -> None:
    pis, accs, excesses = [], [], []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial"] + [f"pi_{z}" for z in range(m)] + ["min_acc", "excess_risk"])
        for record in records:
            if isinstance(record, FailedTrial):
                writer.writerow([record.trial] + ["nan"] * (m + 2))
                continue
            excess = record.excess_risk if record.excess_risk is not None else math.nan
            writer.writerow(
                [record.trial]
                + [_fmt(v) for v in record.final_pi.weights]
                + [_fmt(record.min_accuracy), _fmt(excess)]
            )
            pis.append(record.final_pi.weights)
            accs.append(record.min_accuracy)
            excesses.append(excess)
        if pis:
            pis_arr = np.asarray(pis)
            accs_arr = np.asarray(accs)
            exc_arr = np.asarray(excesses)
            ddof = 1 if len(pis) > 1 else 0
            writer.writerow(
                ["mean"]
                + [_fmt(v) for v in pis_arr.mean(axis=0)]
                + [_fmt(accs_arr.mean()), _fmt(exc_arr.mean())]
            )
            writer.writerow(
                ["std"]
                + [_fmt(v) for v in pis_arr.std(axis=0, ddof=ddof)]
                + [_fmt(accs_arr.std(ddof=ddof)), _fmt(exc_arr.std(ddof=ddof))]
            )


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

_OVERRIDE_RE = re.compile(r"^--([A-Za-z_][A-Za-z0-9_.]*)=(.*)$")


def _setup_logging() -> None:
    level_name = os.environ.get("FAIRSAMPLE_LOG", "off").strip().lower()
    levels = {"off": logging.CRITICAL + 10, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        level_name = "info"
    logging.basicConfig(level=levels[level_name], format="%(levelname)s %(name)s: %(message)s")


def _parse_argv(argv):
    parser = argparse.ArgumentParser(
        prog="fairsample",
        description="Run seeded adaptive-sampling experiments and emit CSV results.",
    )
    parser.add_argument("--config", type=str, help="TOML configuration file")
    parser.add_argument("--scheme", type=str, help="shorthand for scheme.kind")
    parser.add_argument("--oracle", type=str, help="oracle preset or csv:PATH")
    parser.add_argument("--budget", type=int, help="total oracle draws per trial")
    parser.add_argument("--trials", type=int, help="number of seeded trials")
    parser.add_argument("--seed", type=int, help="base seed")
    parser.add_argument("--jobs", type=int, help="trial-level parallelism")
    parser.add_argument("--out", type=str, help="output directory")
    parser.add_argument("--eval", action="store_true", help="run the grid sweep and excess risk")
    parser.add_argument(
        "--compare",
        nargs="+",
        metavar="CONFIG",
        help="compare the schemes of several config files sharing an oracle",
    )
    args, extra = parser.parse_known_args(argv)

    overrides: dict[str, object] = {}
    for token in extra:
        match = _OVERRIDE_RE.match(token)
        if match is None:
            raise ConfigError(token, "unrecognized argument (expected --key=value)")
        overrides[match.group(1)] = match.group(2)
    return args, overrides


def _assemble(args, overrides) -> ExperimentConfig:
    values: dict[str, object] = {}
    if args.config:
        values.update(load_config_file(args.config))
    values.update(overrides)
    for flag, key in (
        ("scheme", "scheme.kind"),
        ("oracle", "oracle"),
        ("budget", "budget"),
        ("trials", "trials"),
        ("seed", "seed"),
        ("jobs", "jobs"),
        ("out", "out"),
    ):
        value = getattr(args, flag)
        if value is not None:
            values[key] = value
    if args.eval:
        values["eval"] = True
    return build_config(values)


def main(argv=None) -> int:
    _setup_logging()
    try:
        args, overrides = _parse_argv(argv)
        if args.compare:
            cfgs = []
            for path in args.compare:
                values = load_config_file(path)
                values.update(overrides)
                cfgs.append(build_config(values, label=Path(path).stem))
            out = Path(args.out) if args.out else Path("out")
            rows = compare_schemes(cfgs, out)
            for row in rows:
                print(
                    f"{row['scheme']}: min_acc = {row['mean_min_acc']:.4f} "
                    f"+/- {row['std_min_acc']:.4f} ({row['completed']}/{row['trials']} trials)"
                )
            return 0
        cfg = _assemble(args, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    result = run_experiment(cfg)
    for name, path in result.paths.items():
        print(f"{name}: {path}")
    if result.failed:
        print(f"{len(result.failed)} trial(s) failed", file=sys.stderr)
        if not result.completed:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
