"""Shared domain vocabulary: budgets, distributions, reports, channel parameters.

All types are immutable value objects; construction validates invariants and
fails loudly rather than clamping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from .errors import (
    IndexOutOfDomainError,
    KindMismatchError,
    NegativeEntryError,
    NotNormalizedError,
)

NORMALIZATION_TOL = 1e-9

ONESHOT_MECHANISMS = ("GRR", "SUE", "OUE", "SS", "THE", "BLH", "OLH")
LONGITUDINAL_MECHANISMS = ("L-GRR", "L-SUE", "L-OUE", "L-SOUE", "L-OSUE", "L-BLH", "L-OLH")
ALL_MECHANISMS = ONESHOT_MECHANISMS + LONGITUDINAL_MECHANISMS


def check_domain_size(k: int) -> int:
    """Validate a domain cardinality (k >= 2, items are indices 0..k-1)."""
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 2:
        raise ValueError(f"domain size must be an integer >= 2, got {k!r}")
    return int(k)


def check_item(v: int, k: int) -> int:
    if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or not 0 <= v < k:
        raise IndexOutOfDomainError(f"item {v!r} outside domain 0..{k - 1}")
    return int(v)


@dataclass(frozen=True)
class PrivacyBudget:
    """A one-shot privacy budget epsilon (in nats)."""

    epsilon: float

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be a positive finite real, got {self.epsilon!r}")


@dataclass(frozen=True)
class LongitudinalBudget:
    """Budget pair for memoization-based mechanisms: upper bound and first report."""

    eps_inf: float
    eps_1: float

    def __post_init__(self):
        if not (np.isfinite(self.eps_inf) and self.eps_inf > 0):
            raise ValueError(f"eps_inf must be a positive finite real, got {self.eps_inf!r}")
        if not (np.isfinite(self.eps_1) and 0 < self.eps_1 <= self.eps_inf):
            raise ValueError(
                f"eps_1 must satisfy 0 < eps_1 <= eps_inf, got eps_1={self.eps_1!r}, "
                f"eps_inf={self.eps_inf!r}"
            )


@dataclass(frozen=True)
class Distribution:
    """A length-k probability vector (true, observed, or estimated)."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("probs must be a non-empty 1-D vector")
        if np.any(arr < 0):
            raise NegativeEntryError(f"negative probability at index {int(np.argmin(arr))}")
        total = float(arr.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NotNormalizedError(f"probabilities sum to {total!r}, expected 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return self.probs.size

    def to_json(self) -> str:
        return json.dumps({"probs": self.probs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Distribution":
        return cls(np.asarray(json.loads(text)["probs"], dtype=np.float64))


def validate_distribution(probs) -> Distribution:
    """Validate a raw probability vector and wrap it as a Distribution."""
    return Distribution(np.asarray(probs, dtype=np.float64))


def uniform_distribution(k: int) -> Distribution:
    return Distribution(np.full(check_domain_size(k), 1.0 / k))


@dataclass(frozen=True)
class ChannelParams:
    """Pure-LDP channel pair (p*, q*) plus an optional mechanism auxiliary.

    aux is the hash range g (LH), the subset size omega (SS), or the
    threshold theta (THE); None for mechanisms without one.
    """

    p_star: float
    q_star: float
    aux: Union[int, float, None] = None

    def __post_init__(self):
        # boundaries are reachable in float at extreme eps (no-noise limit)
        if not (0 <= self.q_star < self.p_star <= 1):
            raise ValueError(
                f"pure LDP requires 0 <= q* < p* <= 1, got p*={self.p_star!r}, q*={self.q_star!r}"
            )


# --- Reports -----------------------------------------------------------------


@dataclass(frozen=True)
class ItemReport:
    """A single obfuscated item index (GRR family)."""

    index: int

    kind = "item"

    def __post_init__(self):
        if self.index < 0:
            raise IndexOutOfDomainError(f"negative item index {self.index!r}")


@dataclass(frozen=True)
class BitsReport:
    """A length-k obfuscated bit vector (UE family)."""

    bits: np.ndarray

    kind = "bits"

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=np.uint8)
        if arr.ndim != 1 or not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bits must be a 1-D binary vector")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)


@dataclass(frozen=True)
class HashedReport:
    """A (hash seed, obfuscated hash value) pair (LH family)."""

    seed: int
    value: int

    kind = "hashed"

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.value < 0:
            raise ValueError(f"hash value must be non-negative, got {self.value!r}")


@dataclass(frozen=True)
class SubsetReport:
    """A fixed-size subset of domain indices (SS)."""

    items: tuple

    kind = "subset"

    def __post_init__(self):
        items = tuple(sorted(int(v) for v in self.items))
        if len(set(items)) != len(items):
            raise ValueError("subset items must be unique")
        if items and items[0] < 0:
            raise IndexOutOfDomainError(f"negative item index {items[0]!r}")
        object.__setattr__(self, "items", items)


@dataclass(frozen=True)
class NoisyHistReport:
    """A length-k real-valued noisy histogram (THE)."""

    values: np.ndarray

    kind = "noisy_hist"

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a non-empty 1-D vector")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


Report = Union[ItemReport, BitsReport, HashedReport, SubsetReport, NoisyHistReport]


def report_to_json(report: Report) -> str:
    if isinstance(report, ItemReport):
        payload: dict[str, Any] = {"index": report.index}
    elif isinstance(report, BitsReport):
        payload = {"bits": report.bits.tolist()}
    elif isinstance(report, HashedReport):
        payload = {"seed": report.seed, "value": report.value}
    elif isinstance(report, SubsetReport):
        payload = {"items": list(report.items)}
    elif isinstance(report, NoisyHistReport):
        payload = {"values": report.values.tolist()}
    else:
        raise KindMismatchError(f"unknown report type {type(report).__name__}")
    return json.dumps({"kind": report.kind, **payload})


def report_from_json(text: str) -> Report:
    obj = json.loads(text)
    kind = obj.get("kind")
    if kind == "item":
        return ItemReport(obj["index"])
    if kind == "bits":
        return BitsReport(np.asarray(obj["bits"], dtype=np.uint8))
    if kind == "hashed":
        return HashedReport(obj["seed"], obj["value"])
    if kind == "subset":
        return SubsetReport(tuple(obj["items"]))
    if kind == "noisy_hist":
        return NoisyHistReport(np.asarray(obj["values"], dtype=np.float64))
    raise KindMismatchError(f"unknown report kind {kind!r}")


@dataclass(frozen=True)
class MechanismSpec:
    """Mechanism identifier plus domain size and budget; fully determines behavior."""

    id: str
    k: int
    budget: Union[PrivacyBudget, LongitudinalBudget]

    def __post_init__(self):
        if self.id not in ALL_MECHANISMS:
            raise ValueError(f"unknown mechanism id {self.id!r}")
        object.__setattr__(self, "k", check_domain_size(self.k))
        longitudinal = self.id in LONGITUDINAL_MECHANISMS
        if longitudinal and not isinstance(self.budget, LongitudinalBudget):
            raise ValueError(f"{self.id} requires a LongitudinalBudget")
        if not longitudinal and not isinstance(self.budget, PrivacyBudget):
            raise ValueError(f"{self.id} requires a PrivacyBudget")

    @property
    def is_longitudinal(self) -> bool:
        return self.id in LONGITUDINAL_MECHANISMS
