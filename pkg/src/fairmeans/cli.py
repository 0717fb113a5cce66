"""Command-line experiment harness.

Verbs:
    run           one algorithm on one dataset; appends a results CSV row and
                  writes a canonical JSON report keyed by the config hash.
    sweep         grid over k, gamma, eps; one row per cell, resumable.
    oracle-check  exact-oracle audit of the solver on a tiny dataset.
    inject        standalone synthetic outlier injection, CSV to CSV.

Configuration comes from an optional flat key=value file plus flags; flags
win.  Exit codes: 0 ok, 2 config error, 3 data error, 4 enumeration-guard
refusal, 5 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, fields, replace

from . import metrics
from .dataset import PointSet, RandomSource, inject_outliers, load_csv, subsample, write_csv
from .errors import ConfigError, DataError, GuardRefusal, InvariantViolation
from .geometry import aspect_ratio, fair_radii, load_fair_radii, save_fair_radii
from .local_search import lsfo

_INT_FIELDS = {"subsample_n", "k", "m", "seed"}
_FLOAT_FIELDS = {"outlier_fraction", "gamma", "eps"}
ALGORITHMS = ("lsfo", "greedy", "oracle")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment cell; defaults follow the standard protocol.

    m defaults to 1% of the post-subsample point count when left unset.
    outlier_fraction 0 disables injection.
    """

    dataset: str = ""
    subsample_n: int | None = None
    outlier_fraction: float = 0.01
    k: int = 5
    m: int | None = None
    gamma: float = 3.0
    eps: float = 1e-4
    seed: int = 0
    stage3_mode: str = "auto"
    algorithm: str = "lsfo"
    output: str = "results"
    discard_policy: str = "largest_delta"
    timings: bool = False

    def validate(self) -> "ExperimentConfig":
        if not self.dataset:
            raise ConfigError("dataset path is required")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.m is not None and self.m < 0:
            raise ConfigError(f"m must be >= 0, got {self.m}")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise ConfigError(f"outlier_fraction must be in [0, 1], got {self.outlier_fraction}")
        if self.gamma < 1.0:
            raise ConfigError(f"gamma must be >= 1, got {self.gamma}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if self.subsample_n is not None and self.subsample_n < 1:
            raise ConfigError(f"subsample_n must be >= 1, got {self.subsample_n}")
        return self

    def config_hash(self) -> str:
        """Stable hex key of everything that determines the run's results."""
        d = self.canonical_dict()
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def canonical_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.pop("output")  # where results land does not change what they are
        d.pop("timings")
        return d

    def to_file_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or f.name == "timings":
                continue
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


def config_from_file(path: str) -> dict:
    """Parse a flat key=value config file into a raw override dict."""
    known = {f.name for f in fields(ExperimentConfig)}
    out: dict = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = val
    return out


def _coerce(key: str, val):
    if val is None or not isinstance(val, str):
        return val
    try:
        if key in _INT_FIELDS:
            return int(val)
        if key in _FLOAT_FIELDS:
            return float(val)
        if key == "timings":
            return val.lower() in ("1", "true", "yes")
    except ValueError:
        raise ConfigError(f"bad value for {key}: {val!r}") from None
    return val


def build_config(file_overrides: dict, flag_overrides: dict) -> ExperimentConfig:
    merged = dict(file_overrides)
    merged.update({k: v for k, v in flag_overrides.items() if v is not None})
    cfg = ExperimentConfig()
    for key, val in merged.items():
        cfg = replace(cfg, **{key: _coerce(key, val)})
    return cfg.validate()


def _load_pipeline(cfg: ExperimentConfig, rng: RandomSource) -> PointSet:
    ps = load_csv(cfg.dataset)
    if cfg.subsample_n is not None:
        ps = subsample(ps, cfg.subsample_n, rng.child(1))
    if cfg.outlier_fraction > 0.0:
        ps = inject_outliers(ps, cfg.outlier_fraction, rng.child(2))
    return ps


def _cached_fair_radii(ps: PointSet, k: int, out_dir: str):
    cache_dir = os.path.join(out_dir, "radii-cache")
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"{ps.content_hash()[:16]}_k{k}.csv")
    nc = min(-(ps.n // -k), ps.n - 1)
    if os.path.exists(path):
        fr = load_fair_radii(path, nc)
        if fr.delta.shape[0] == ps.n:
            return fr
    fr = fair_radii(ps, k)
    save_fair_radii(path, fr)
    return fr


def run(cfg: ExperimentConfig) -> dict:
    """Execute one configured run; returns the appended results row."""
    t_start = time.perf_counter()
    os.makedirs(cfg.output, exist_ok=True)
    stage = "load"
    try:
        rng = RandomSource(cfg.seed)
        ps = _load_pipeline(cfg, rng)
        m = cfg.m if cfg.m is not None else max(1, round(0.01 * ps.n))
        stage = "fair_radii"
        delta = _cached_fair_radii(ps, cfg.k, cfg.output)
        stage = "aspect_ratio"
        aspect = aspect_ratio(ps)
        stage = cfg.algorithm
        if cfg.algorithm == "lsfo":
            report = lsfo(
                ps,
                delta,
                cfg.k,
                m,
                cfg.gamma,
                cfg.eps,
                rng.child(3),
                stage3_mode=cfg.stage3_mode,
                discard_policy=cfg.discard_policy,
            )
            bound = metrics.outlier_bound(m, cfg.k, cfg.eps, ps.n, aspect)
            payload = report.to_json_dict(include_timings=cfg.timings)
            cost_v, rho_v, nz = report.cost, report.rho, len(report.outliers)
        elif cfg.algorithm == "greedy":
            summary = metrics.greedy_baseline(ps, delta, cfg.k, cfg.gamma)
            bound = 0.0
            payload = {
                "algorithm": "greedy",
                "k": cfg.k,
                "gamma": cfg.gamma,
                "centers": list(summary.centers),
                "cost": summary.kmeans_cost,
                "rho": summary.rho,
                "outliers": [],
            }
            cost_v, rho_v, nz = summary.kmeans_cost, summary.rho, 0
        else:
            oracle = metrics.brute_force_opt(ps, delta, cfg.k, m, cfg.gamma)
            bound = 0.0
            payload = {
                "algorithm": "oracle",
                "k": cfg.k,
                "m": m,
                "gamma": cfg.gamma,
                "feasible": oracle.feasible,
                "cost": oracle.cost if oracle.feasible else None,
                "centers": list(oracle.centers),
                "outliers": list(oracle.outliers),
            }
            cost_v = oracle.cost if oracle.feasible else float("nan")
            rho_v = (
                metrics.max_bound_ratio(ps, oracle.centers, oracle.outliers, delta)
                if oracle.feasible
                else float("nan")
            )
            nz = len(oracle.outliers)
        stage = "report"
        chash = cfg.config_hash()
        payload = {"config": _jsonable(cfg.canonical_dict()), "result": payload}
        report_path = os.path.join(cfg.output, f"report_{chash}.json")
        with open(report_path, "w") as fh:
            fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        row = {
            "dataset": cfg.dataset,
            "n": ps.n,
            "k": cfg.k,
            "m": m,
            "gamma": cfg.gamma,
            "eps": cfg.eps,
            "seed": cfg.seed,
            "algorithm": cfg.algorithm,
            "cost": cost_v,
            "rho": rho_v,
            "n_outliers": nz,
            "bound": bound,
            "ms": int(round((time.perf_counter() - t_start) * 1000.0)),
            "config_hash": chash,
        }
        metrics.append_result_row(os.path.join(cfg.output, "results.csv"), row)
        return row
    except (ConfigError, DataError, GuardRefusal, InvariantViolation):
        raise
    except ValueError as e:
        raise ConfigError(f"stage {stage}: {e}") from e
    except OSError as e:
        raise DataError(f"stage {stage}: {e}") from e


def _jsonable(d: dict) -> dict:
    return {k: (v if not isinstance(v, tuple) else list(v)) for k, v in d.items()}


def _parse_grid(text: str | None, caster):
    if text is None:
        return None
    text = text.strip()
    if not text:
        return []
    try:
        return [caster(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad grid value in {text!r}") from None


def sweep(cfg: ExperimentConfig, k_grid, gamma_grid, eps_grid) -> dict:
    """Run a parameter grid; skip cells already present in the results CSV.

    Cell seeds derive from (base seed, cell index), so any cell reruns
    identically regardless of execution order.  Per-cell failures go to
    sweep_errors.log and the sweep continues; failed cells are retried on
    resume because only successful rows enter the CSV.
    """
    os.makedirs(cfg.output, exist_ok=True)
    results_path = os.path.join(cfg.output, "results.csv")
    metrics.ensure_results_file(results_path)
    done = metrics.existing_config_hashes(results_path)
    ks = k_grid if k_grid is not None else [cfg.k]
    gammas = gamma_grid if gamma_grid is not None else [cfg.gamma]
    epss = eps_grid if eps_grid is not None else [cfg.eps]
    base = RandomSource(cfg.seed)
    ran = skipped = failed = 0
    cell_index = 0
    for k in ks:
        for gamma in gammas:
            for eps in epss:
                cell = replace(cfg, k=k, gamma=gamma, eps=eps, seed=base.child(cell_index).seed)
                cell_index += 1
                cell = cell.validate()
                if cell.config_hash() in done:
                    skipped += 1
                    continue
                try:
                    run(cell)
                    ran += 1
                except (ConfigError, DataError, GuardRefusal, InvariantViolation) as e:
                    failed += 1
                    with open(os.path.join(cfg.output, "sweep_errors.log"), "a") as fh:
                        fh.write(f"cell k={k} gamma={gamma} eps={eps}: {type(e).__name__}: {e}\n")
    return {"cells": cell_index, "ran": ran, "skipped": skipped, "failed": failed}


def oracle_check(cfg: ExperimentConfig) -> dict:
    """Compare the solver against the exact oracle on one tiny instance."""
    rng = RandomSource(cfg.seed)
    ps = _load_pipeline(cfg, rng)
    m = cfg.m if cfg.m is not None else max(1, round(0.01 * ps.n))
    delta = fair_radii(ps, cfg.k)
    oracle = metrics.brute_force_opt(ps, delta, cfg.k, m, cfg.gamma)
    report = lsfo(ps, delta, cfg.k, m, cfg.gamma, cfg.eps, rng.child(3))
    out = {
        "n": ps.n,
        "k": cfg.k,
        "m": m,
        "gamma": cfg.gamma,
        "oracle_feasible": oracle.feasible,
        "oracle_cost": oracle.cost if oracle.feasible else None,
        "lsfo_cost": report.cost,
        "ratio": (report.cost / oracle.cost) if oracle.feasible and oracle.cost > 0 else None,
    }
    return out


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--dataset", help="input CSV path")
    p.add_argument("--subsample", dest="subsample_n", type=int, help="subsample to this many rows")
    p.add_argument("--outlier-fraction", dest="outlier_fraction", type=float,
                   help="fraction of rows to perturb into outliers (0 disables)")
    p.add_argument("--k", type=int, help="number of centers")
    p.add_argument("--m", type=int, help="outlier budget (default 1%% of rows)")
    p.add_argument("--gamma", type=float, help="fairness relaxation factor")
    p.add_argument("--eps", type=float, help="improvement granularity")
    p.add_argument("--seed", type=int, help="base random seed")
    p.add_argument("--stage3-mode", dest="stage3_mode", help="auto, full, or sampled[:budget]")
    p.add_argument("--discard-policy", dest="discard_policy",
                   choices=("largest_delta", "last_covered"), help="seeding discard rule")
    p.add_argument("--output", help="output directory (results.csv, reports, caches)")
    p.add_argument("--timings", action="store_const", const=True, default=None,
                   help="include wall-clock timings in the JSON report")


def _flags_dict(args: argparse.Namespace) -> dict:
    keys = [f.name for f in fields(ExperimentConfig)]
    return {k: getattr(args, k, None) for k in keys}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fairmeans",
        description="Individually fair k-means with outlier discards: experiment harness.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one algorithm on one dataset")
    _add_common_flags(p_run)
    p_run.add_argument("--algorithm", choices=ALGORITHMS, help="which solver to run")

    p_sweep = sub.add_parser("sweep", help="run a k/gamma/eps grid")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--algorithm", choices=ALGORITHMS, help="which solver to run")
    p_sweep.add_argument("--k-grid", help="comma-separated k values")
    p_sweep.add_argument("--gamma-grid", help="comma-separated gamma values")
    p_sweep.add_argument("--eps-grid", help="comma-separated eps values")

    p_oracle = sub.add_parser("oracle-check", help="exact-oracle audit on a tiny dataset")
    _add_common_flags(p_oracle)

    p_inject = sub.add_parser("inject", help="write a copy of a CSV with injected outliers")
    p_inject.add_argument("--dataset", required=True)
    p_inject.add_argument("--out-file", required=True, help="destination CSV")
    p_inject.add_argument("--fraction", type=float, default=0.01)
    p_inject.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    try:
        if args.verb == "inject":
            ps = load_csv(args.dataset)
            ps = inject_outliers(ps, args.fraction, RandomSource(args.seed))
            write_csv(ps, args.out_file)
            print(f"inject ok: {ps.n} rows, {len(ps.injected_outliers)} perturbed -> {args.out_file}")
            return 0
        file_overrides = config_from_file(args.config) if args.config else {}
        cfg = build_config(file_overrides, _flags_dict(args))
        if args.verb == "run":
            row = run(cfg)
            print(
                f"run ok: algorithm={row['algorithm']} n={row['n']} cost={row['cost']:.6g} "
                f"rho={row['rho']:.6g} outliers={row['n_outliers']} -> {cfg.output}/results.csv"
            )
            return 0
        if args.verb == "sweep":
            stats = sweep(
                cfg,
                _parse_grid(args.k_grid, int),
                _parse_grid(args.gamma_grid, float),
                _parse_grid(args.eps_grid, float),
            )
            print(
                f"sweep ok: {stats['cells']} cells, {stats['ran']} ran, "
                f"{stats['skipped']} skipped, {stats['failed']} failed -> {cfg.output}/results.csv"
            )
            return 0
        out = oracle_check(cfg)
        print(json.dumps(out, sort_keys=True))
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except GuardRefusal as e:
        print(f"guard refusal: {e}", file=sys.stderr)
        return 4
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return 5
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
