"""Synthetic population generation, bucketization, and CSV ingestion."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import Distribution, check_domain_size
from .errors import ColumnMissingError, CsvParseError

log = logging.getLogger(__name__)

SYNTHETIC_KINDS = ("gaussian", "exponential", "uniform", "poisson", "triangular")

# Fixed generator parameters for the named synthetic populations.
GAUSSIAN_MU, GAUSSIAN_SIGMA = 1000.0, 10.0
EXPONENTIAL_RATE = 1.0
UNIFORM_LO, UNIFORM_HI = 100.0, 10000.0
POISSON_RATE = 5.0
TRIANGULAR_A, TRIANGULAR_C, TRIANGULAR_B = 100.0, 4500.0, 10000.0


@dataclass(frozen=True)
class DistributionSpec:
    """A named data distribution plus sample count n and bin count k."""

    kind: str
    n: int
    k: int
    csv_path: Optional[str] = None
    csv_column: Optional[str] = None
    csv_delimiter: str = ","

    def __post_init__(self):
        if self.kind not in SYNTHETIC_KINDS + ("csv",):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        check_domain_size(self.k)
        if self.kind == "csv" and not (self.csv_path and self.csv_column):
            raise ValueError("csv distributions need csv_path and csv_column")


def load_csv_column(path: str, column: str, delimiter: str = ",") -> np.ndarray:
    """Read one numeric column from a headered CSV file."""
    values = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ColumnMissingError(f"column {column!r} not in {reader.fieldnames}")
        for row_num, row in enumerate(reader, start=2):
            cell = row[column]
            try:
                values.append(float(cell))
            except (TypeError, ValueError):
                raise CsvParseError(f"{path}:{row_num}: non-numeric cell {cell!r}") from None
    return np.asarray(values, dtype=np.float64)


def sample(spec: DistributionSpec, rng: np.random.Generator) -> np.ndarray:
    """n iid draws from the named distribution (or the CSV column, truncated to n)."""
    if spec.kind == "gaussian":
        return rng.normal(GAUSSIAN_MU, GAUSSIAN_SIGMA, spec.n)
    if spec.kind == "exponential":
        return rng.exponential(1.0 / EXPONENTIAL_RATE, spec.n)
    if spec.kind == "uniform":
        return rng.uniform(UNIFORM_LO, UNIFORM_HI, spec.n)
    if spec.kind == "poisson":
        return rng.poisson(POISSON_RATE, spec.n).astype(np.float64)
    if spec.kind == "triangular":
        return rng.triangular(TRIANGULAR_A, TRIANGULAR_C, TRIANGULAR_B, spec.n)
    data = load_csv_column(spec.csv_path, spec.csv_column, spec.csv_delimiter)
    if data.size == 0:
        raise CsvParseError(f"{spec.csv_path}: no data rows")
    if data.size >= spec.n:
        return data[: spec.n]
    return data[rng.integers(0, data.size, spec.n)]


def bucketize(samples: np.ndarray, k: int) -> Tuple[np.ndarray, Distribution]:
    """Equal-width binning over [min, max]; the maximum maps to bin k-1.

    Returns per-user bin indices and the exact empirical bin distribution,
    which is the ground truth the estimators are scored against.
    """
    k = check_domain_size(k)
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("samples must be non-empty")
    lo, hi = samples.min(), samples.max()
    if lo == hi:
        log.warning("constant sample (value %r); all users fall in bin 0", lo)
        indices = np.zeros(samples.size, dtype=np.int64)
    else:
        indices = np.minimum((k * (samples - lo) / (hi - lo)).astype(np.int64), k - 1)
    freq = np.bincount(indices, minlength=k)
    return indices, Distribution(freq / samples.size)
