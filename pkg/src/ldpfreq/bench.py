"""Seeded parameter-sweep experiment runner and gain-table summarizer.

Every (mechanism, budget, n, k, distribution, run) cell is an independent
task with a seed derived from the base seed and the cell coordinates, so
serial and parallel execution produce the same result set. Rows are written
incrementally, then rewritten in sorted order so repeated runs are
byte-identical.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from importlib import metadata as _im
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import datasynth, evaluation, pipeline
from .core import (
    LONGITUDINAL_MECHANISMS,
    ALL_MECHANISMS,
    LongitudinalBudget,
    MechanismSpec,
    PrivacyBudget,
)
from .datasynth import SYNTHETIC_KINDS, DistributionSpec
from .errors import ConfigError
from .estimation import IbuConfig
from .evaluation import ExperimentResult, GainRecord, aggregate

log = logging.getLogger(__name__)

try:
    VERSION = _im.version("ldpfreq")
except _im.PackageNotFoundError:  # pragma: no cover
    VERSION = "unknown"

# Behavioral choices that affect numbers; recorded in every output header.
DESIGN_FLAGS = {
    "binning": "equal-width over the observed sample min/max; maximum maps to the top bin",
    "gain": "computed on run-averaged metrics, clipped below at zero",
    "the_threshold": "theta from golden-section search minimizing channel mean squared error",
    "hash_range": "g rounded half-to-even and clamped to >= 2",
    "longitudinal_support": "estimators use the simulated two-step chain's support probabilities",
    "memoization": "first obfuscation step memoized per value, one fresh step per report",
}

_ESTIMATOR_SETS = {"MI": ("MI",), "IBU": ("IBU",), "both": ("MI", "IBU")}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full sweep description: what to run, how often, where to write."""

    mechanisms: Tuple[str, ...]
    n_list: Tuple[int, ...]
    k_list: Tuple[int, ...]
    distributions: Tuple[str, ...]
    eps_list: Tuple[float, ...] = ()
    eps_inf_list: Tuple[float, ...] = ()
    eps1_ratio: float = 0.5
    estimators: str = "both"
    runs: int = 20
    base_seed: int = 0
    ibu: IbuConfig = field(default_factory=IbuConfig)
    output_dir: str = "results"
    output_format: str = "csv"
    csv_path: Optional[str] = None
    csv_column: Optional[str] = None

    def __post_init__(self):
        if not self.mechanisms:
            raise ConfigError("mechanisms list is empty")
        for m in self.mechanisms:
            if m not in ALL_MECHANISMS:
                raise ConfigError(f"unknown mechanism {m!r}")
        if not (self.n_list and self.k_list and self.distributions):
            raise ConfigError("n, k and distributions lists must be non-empty")
        for d in self.distributions:
            if d not in SYNTHETIC_KINDS + ("csv",):
                raise ConfigError(f"unknown distribution {d!r}")
        if "csv" in self.distributions and not (self.csv_path and self.csv_column):
            raise ConfigError("csv distribution needs csv_path and csv_column")
        oneshot = [m for m in self.mechanisms if m not in LONGITUDINAL_MECHANISMS]
        longitudinal = [m for m in self.mechanisms if m in LONGITUDINAL_MECHANISMS]
        if oneshot and not self.eps_list:
            raise ConfigError("eps list required for one-shot mechanisms")
        if longitudinal and not self.eps_inf_list:
            raise ConfigError("eps_inf list required for longitudinal mechanisms")
        if not 0 < self.eps1_ratio <= 1:
            raise ConfigError("eps1_ratio must be in (0, 1]")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        if self.estimators not in _ESTIMATOR_SETS:
            raise ConfigError("estimators must be 'MI', 'IBU' or 'both'")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("output format must be 'csv' or 'json'")

    @property
    def estimator_names(self) -> Tuple[str, ...]:
        return _ESTIMATOR_SETS[self.estimators]

    def budgets_for(self, mechanism: str) -> List[Tuple[Optional[float], Optional[float], Optional[float]]]:
        """(eps, eps_inf, eps_1) triples applicable to one mechanism."""
        if mechanism in LONGITUDINAL_MECHANISMS:
            return [(None, e, e * self.eps1_ratio) for e in self.eps_inf_list]
        return [(e, None, None) for e in self.eps_list]

    def to_json_dict(self) -> dict:
        return {
            "mechanisms": list(self.mechanisms),
            "estimators": self.estimators,
            "eps": list(self.eps_list),
            "eps_inf": list(self.eps_inf_list),
            "eps1_ratio": self.eps1_ratio,
            "n": list(self.n_list),
            "k": list(self.k_list),
            "distributions": list(self.distributions),
            "runs": self.runs,
            "base_seed": self.base_seed,
            "ibu": {"max_iter": self.ibu.max_iter, "tol": self.ibu.tol, "err_func": self.ibu.err_func},
            "output_dir": self.output_dir,
            "output_format": self.output_format,
        }


def load_config(path: str) -> ExperimentConfig:
    """Parse a TOML experiment description into a validated config."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path!r}: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    try:
        ibu_raw = raw.get("ibu", {})
        ibu = IbuConfig(
            max_iter=int(ibu_raw.get("max_iter", 10000)),
            tol=float(ibu_raw.get("tol", 1e-12)),
        )
        return ExperimentConfig(
            mechanisms=tuple(raw["mechanisms"]),
            estimators=str(raw.get("estimators", "both")),
            eps_list=tuple(float(e) for e in raw.get("eps", [])),
            eps_inf_list=tuple(float(e) for e in raw.get("eps_inf", [])),
            eps1_ratio=float(raw.get("eps1_ratio", 0.5)),
            n_list=tuple(int(n) for n in raw.get("n", [])),
            k_list=tuple(int(k) for k in raw.get("k", [])),
            distributions=tuple(raw.get("distributions", [])),
            runs=int(raw.get("runs", 20)),
            base_seed=int(raw.get("base_seed", 0)),
            ibu=ibu,
            output_dir=str(raw.get("output_dir", "results")),
            output_format=str(raw.get("output_format", "csv")),
            csv_path=raw.get("csv_path"),
            csv_column=raw.get("csv_column"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc


# --- Task execution ----------------------------------------------------------


@dataclass(frozen=True)
class _Task:
    """One simulated collection; fully self-describing so it pickles cleanly."""

    mechanism: str
    eps: Optional[float]
    eps_inf: Optional[float]
    eps_1: Optional[float]
    n: int
    k: int
    distribution: str
    run: int
    entropy: Tuple[int, ...]
    estimators: Tuple[str, ...]
    ibu_max_iter: int
    ibu_tol: float
    csv_path: Optional[str]
    csv_column: Optional[str]


def _build_tasks(cfg: ExperimentConfig) -> List[_Task]:
    tasks = []
    for mi, mechanism in enumerate(cfg.mechanisms):
        for bi, (eps, eps_inf, eps_1) in enumerate(cfg.budgets_for(mechanism)):
            for ni, n in enumerate(cfg.n_list):
                for ki, k in enumerate(cfg.k_list):
                    for di, dist in enumerate(cfg.distributions):
                        for run in range(cfg.runs):
                            tasks.append(
                                _Task(
                                    mechanism=mechanism,
                                    eps=eps,
                                    eps_inf=eps_inf,
                                    eps_1=eps_1,
                                    n=n,
                                    k=k,
                                    distribution=dist,
                                    run=run,
                                    entropy=(cfg.base_seed, mi, bi, ni, ki, di, run),
                                    estimators=cfg.estimator_names,
                                    ibu_max_iter=cfg.ibu.max_iter,
                                    ibu_tol=cfg.ibu.tol,
                                    csv_path=cfg.csv_path,
                                    csv_column=cfg.csv_column,
                                )
                            )
    return tasks


def _run_task(task: _Task) -> List[ExperimentResult]:
    seed_seq = np.random.SeedSequence(list(task.entropy))
    seed = int(seed_seq.generate_state(1, dtype=np.uint64)[0])
    rng = np.random.default_rng(seed_seq)

    dspec = DistributionSpec(
        kind=task.distribution,
        n=task.n,
        k=task.k,
        csv_path=task.csv_path,
        csv_column=task.csv_column,
    )
    samples = datasynth.sample(dspec, rng)
    values, true_dist = datasynth.bucketize(samples, task.k)

    if task.mechanism in LONGITUDINAL_MECHANISMS:
        budget = LongitudinalBudget(task.eps_inf, task.eps_1)
    else:
        budget = PrivacyBudget(task.eps)
    mspec = MechanismSpec(task.mechanism, task.k, budget)

    cfg = IbuConfig(max_iter=task.ibu_max_iter, tol=task.ibu_tol)
    estimates = pipeline.estimate_batch(mspec, values, rng, task.estimators, cfg)

    rows = []
    for name in task.estimators:
        est = estimates[name].distribution
        rows.append(
            ExperimentResult(
                mechanism=task.mechanism,
                estimator=name,
                eps=task.eps,
                eps_inf=task.eps_inf,
                eps_1=task.eps_1,
                n=task.n,
                k=task.k,
                distribution=task.distribution,
                seed=seed,
                mse=evaluation.mse(true_dist, est),
                mae=evaluation.mae(true_dist, est),
            )
        )
    return rows


def _metadata_lines(cfg: ExperimentConfig) -> List[str]:
    return [
        "# ldpfreq results",
        f"# version: {VERSION}",
        f"# config: {json.dumps(cfg.to_json_dict(), sort_keys=True)}",
        f"# design: {json.dumps(DESIGN_FLAGS, sort_keys=True)}",
    ]


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[ExperimentResult]:
    """Execute the full sweep and persist results under cfg.output_dir.

    Rows stream to disk as tasks finish; the file is rewritten in sorted
    order at the end so output is deterministic regardless of scheduling.
    """
    tasks = _build_tasks(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    out_path = os.path.join(cfg.output_dir, "results.csv")
    workers = workers or 1

    results: List[ExperimentResult] = []
    with open(out_path, "w", newline="") as fh:
        for line in _metadata_lines(cfg):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(ExperimentResult.CSV_FIELDS)

        def emit(rows: List[ExperimentResult]):
            for row in rows:
                writer.writerow(row.to_csv_row())
            fh.flush()
            results.extend(rows)

        if workers == 1:
            for task in tasks:
                emit(_run_task(task))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_task, t) for t in tasks]
                for done, fut in enumerate(as_completed(futures), start=1):
                    emit(fut.result())
                    if done % 50 == 0 or done == len(futures):
                        log.info("completed %d/%d tasks", done, len(futures))

    results.sort(key=lambda r: r.to_csv_row())
    write_results(out_path, cfg, results)
    if cfg.output_format == "json":
        json_path = os.path.join(cfg.output_dir, "results.json")
        with open(json_path, "w") as fh:
            json.dump(
                {
                    "version": VERSION,
                    "config": cfg.to_json_dict(),
                    "design": DESIGN_FLAGS,
                    "results": [json.loads(r.to_json()) for r in results],
                },
                fh,
                indent=2,
                sort_keys=True,
            )
    return results


def write_results(path: str, cfg: ExperimentConfig, results: Sequence[ExperimentResult]):
    with open(path, "w", newline="") as fh:
        for line in _metadata_lines(cfg):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(ExperimentResult.CSV_FIELDS)
        for row in results:
            writer.writerow(row.to_csv_row())


def load_results(path: str) -> List[ExperimentResult]:
    """Read a results CSV, skipping the provenance header."""
    results = []
    with open(path, newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows, None)
        if header is not None and tuple(header) != ExperimentResult.CSV_FIELDS:
            raise ConfigError(f"{path!r} is not a results file")
        for row in rows:
            results.append(ExperimentResult.from_csv_row(row))
    return results


# --- Summaries ---------------------------------------------------------------


@dataclass(frozen=True)
class GainTable:
    """Distribution-by-mechanism grid of averaged gains for one family."""

    family: str
    metric: str
    distributions: Tuple[str, ...]
    mechanisms: Tuple[str, ...]
    cells: np.ndarray  # shape (len(distributions), len(mechanisms))

    def row_averages(self) -> np.ndarray:
        return self.cells.mean(axis=1)

    def column_averages(self) -> np.ndarray:
        return self.cells.mean(axis=0)

    def overall_average(self) -> float:
        return float(self.cells.mean())

    def render(self) -> str:
        """Integer-rounded display table with row and column averages."""
        header = ["distribution"] + list(self.mechanisms) + ["avg"]
        lines = [f"{self.family} utility gain ({self.metric.upper()}, %)"]
        body = []
        for i, dist in enumerate(self.distributions):
            body.append([dist] + [f"{v:.0f}" for v in self.cells[i]] + [f"{self.row_averages()[i]:.0f}"])
        body.append(["avg"] + [f"{v:.0f}" for v in self.column_averages()] + [f"{self.overall_average():.0f}"])
        widths = [max(len(row[j]) for row in [header] + body) for j in range(len(header))]
        for row in [header] + body:
            lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
        return "\n".join(lines)

    def to_csv_rows(self) -> List[List[str]]:
        rows = [["distribution"] + list(self.mechanisms) + ["avg"]]
        for i, dist in enumerate(self.distributions):
            rows.append([dist] + [repr(float(v)) for v in self.cells[i]] + [repr(float(self.row_averages()[i]))])
        rows.append(["avg"] + [repr(float(v)) for v in self.column_averages()] + [repr(self.overall_average())])
        return rows


def summarize(results: Sequence[ExperimentResult]) -> Dict[str, Dict[str, GainTable]]:
    """Gain tables per mechanism family, keyed [family][metric].

    Each cell averages the per-sweep-cell gains over every budget, n and k
    present in the results.
    """
    records = aggregate(results)
    out: Dict[str, Dict[str, GainTable]] = {}
    for family, member in (("one-shot", lambda m: not m.startswith("L-")),
                           ("longitudinal", lambda m: m.startswith("L-"))):
        fam_records = [r for r in records if member(r.mechanism)]
        if not fam_records:
            continue
        dists = tuple(dict.fromkeys(r.distribution for r in fam_records))
        mechs = tuple(m for m in ALL_MECHANISMS if any(r.mechanism == m for r in fam_records))
        out[family] = {}
        for metric in ("mse", "mae"):
            cells = np.zeros((len(dists), len(mechs)))
            for i, dist in enumerate(dists):
                for j, mech in enumerate(mechs):
                    vals = [
                        getattr(r, f"gamma_{metric}")
                        for r in fam_records
                        if r.distribution == dist and r.mechanism == mech
                    ]
                    cells[i, j] = float(np.mean(vals)) if vals else np.nan
            out[family][metric] = GainTable(family, metric, dists, mechs, cells)
    return out


def write_summary(tables: Dict[str, Dict[str, GainTable]], output_dir: str) -> List[str]:
    """Write display text and full-precision CSV per table; returns the paths."""
    os.makedirs(output_dir, exist_ok=True)
    paths = []
    for family, by_metric in tables.items():
        slug = family.replace("-", "")
        for metric, table in by_metric.items():
            txt_path = os.path.join(output_dir, f"gains_{slug}_{metric}.txt")
            with open(txt_path, "w") as fh:
                fh.write(table.render() + "\n")
            csv_path = os.path.join(output_dir, f"gains_{slug}_{metric}.csv")
            with open(csv_path, "w", newline="") as fh:
                csv.writer(fh).writerows(table.to_csv_rows())
            paths.extend([txt_path, csv_path])
    return paths
