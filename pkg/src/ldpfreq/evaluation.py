"""Utility metrics and the utility-gain aggregation of IBU over MI."""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .core import Distribution
from .errors import LengthMismatchError, UnpairedRunsError


def mse(f: Distribution, f_hat: Distribution) -> float:
    """Mean squared error between two length-k distributions."""
    if len(f) != len(f_hat):
        raise LengthMismatchError(f"lengths {len(f)} and {len(f_hat)} differ")
    diff = f.probs - f_hat.probs
    return float(np.mean(diff * diff))


def mae(f: Distribution, f_hat: Distribution) -> float:
    """Mean absolute error between two length-k distributions."""
    if len(f) != len(f_hat):
        raise LengthMismatchError(f"lengths {len(f)} and {len(f_hat)} differ")
    return float(np.mean(np.abs(f.probs - f_hat.probs)))


def utility_gain(metric_mi: float, metric_ibu: float) -> float:
    """Percentage improvement of IBU over MI, clipped at zero.

    A perfect MI baseline (metric 0) means both estimators are exact; the
    gain is defined as 0 there.
    """
    if metric_mi < 0 or metric_ibu < 0:
        raise ValueError("metrics must be non-negative")
    if metric_mi == 0:
        return 0.0
    return 100.0 * max((metric_mi - metric_ibu) / metric_mi, 0.0)


@dataclass(frozen=True)
class ExperimentResult:
    """One estimator's error metrics for one simulated run."""

    mechanism: str
    estimator: str
    eps: Optional[float]
    eps_inf: Optional[float]
    eps_1: Optional[float]
    n: int
    k: int
    distribution: str
    seed: int
    mse: float
    mae: float

    def __post_init__(self):
        if self.mse < 0 or self.mae < 0:
            raise ValueError("error metrics must be non-negative")

    CSV_FIELDS = (
        "mechanism", "estimator", "eps", "eps_inf", "eps_1",
        "n", "k", "distribution", "seed", "mse", "mae",
    )

    def group_key(self) -> tuple:
        return (self.mechanism, self.eps, self.eps_inf, self.eps_1, self.n, self.k, self.distribution)

    def to_csv_row(self) -> List[str]:
        def fmt(x):
            return "" if x is None else repr(x) if isinstance(x, float) else str(x)

        return [fmt(getattr(self, name)) for name in self.CSV_FIELDS]

    @classmethod
    def from_csv_row(cls, row: List[str]) -> "ExperimentResult":
        vals = dict(zip(cls.CSV_FIELDS, row))
        opt = lambda s: None if s == "" else float(s)
        return cls(
            mechanism=vals["mechanism"],
            estimator=vals["estimator"],
            eps=opt(vals["eps"]),
            eps_inf=opt(vals["eps_inf"]),
            eps_1=opt(vals["eps_1"]),
            n=int(vals["n"]),
            k=int(vals["k"]),
            distribution=vals["distribution"],
            seed=int(vals["seed"]),
            mse=float(vals["mse"]),
            mae=float(vals["mae"]),
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass(frozen=True)
class GainRecord:
    """Run-averaged IBU-over-MI gain for one sweep cell."""

    mechanism: str
    eps: Optional[float]
    eps_inf: Optional[float]
    eps_1: Optional[float]
    n: int
    k: int
    distribution: str
    gamma_mse: float
    gamma_mae: float
    runs: int

    def __post_init__(self):
        if not (0.0 <= self.gamma_mse <= 100.0 and 0.0 <= self.gamma_mae <= 100.0):
            raise ValueError("gains must lie in [0, 100]")

    CSV_FIELDS = (
        "mechanism", "eps", "eps_inf", "eps_1", "n", "k", "distribution",
        "gamma_mse", "gamma_mae", "runs",
    )

    def to_csv_row(self) -> List[str]:
        def fmt(x):
            return "" if x is None else repr(x) if isinstance(x, float) else str(x)

        return [fmt(getattr(self, name)) for name in self.CSV_FIELDS]


def aggregate(results: Iterable[ExperimentResult]) -> List[GainRecord]:
    """Average MSE/MAE over runs per estimator, then apply the gain formula.

    The gain is computed on run-averaged metrics, not averaged per-run gains.
    Every (cell, seed) must contribute exactly one MI and one IBU row.
    """
    groups: dict = {}
    for r in results:
        groups.setdefault(r.group_key(), []).append(r)

    records = []
    for key in sorted(groups, key=_key_sort):
        rows = groups[key]
        by_est = {"MI": {}, "IBU": {}}
        for r in rows:
            if r.estimator not in by_est:
                raise UnpairedRunsError(f"unknown estimator {r.estimator!r}")
            if r.seed in by_est[r.estimator]:
                raise UnpairedRunsError(f"duplicate {r.estimator} row for seed {r.seed}")
            by_est[r.estimator][r.seed] = r
        if set(by_est["MI"]) != set(by_est["IBU"]):
            raise UnpairedRunsError(f"MI/IBU runs not paired for cell {key}")
        mi_rows = list(by_est["MI"].values())
        ibu_rows = list(by_est["IBU"].values())
        mi_mse = float(np.mean([r.mse for r in mi_rows]))
        ibu_mse = float(np.mean([r.mse for r in ibu_rows]))
        mi_mae = float(np.mean([r.mae for r in mi_rows]))
        ibu_mae = float(np.mean([r.mae for r in ibu_rows]))
        mechanism, eps, eps_inf, eps_1, n, k, distribution = key
        records.append(
            GainRecord(
                mechanism=mechanism,
                eps=eps,
                eps_inf=eps_inf,
                eps_1=eps_1,
                n=n,
                k=k,
                distribution=distribution,
                gamma_mse=utility_gain(mi_mse, ibu_mse),
                gamma_mae=utility_gain(mi_mae, ibu_mae),
                runs=len(mi_rows),
            )
        )
    return records


def _key_sort(key: tuple) -> tuple:
    return tuple("" if x is None else x for x in key[:1]) + tuple(
        -1.0 if x is None else float(x) if isinstance(x, (int, float)) else 0.0 for x in key[1:6]
    ) + (key[6],)
