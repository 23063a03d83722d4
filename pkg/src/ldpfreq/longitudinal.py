"""Two-step memoization-based mechanisms and their effective channel parameters.

Each L-* mechanism first obfuscates the true value at eps_inf (memoized per
user), then re-obfuscates the memoized output so the released report satisfies
eps_1-LDP. `StepParams` carries both step channels, the effective (p*, q*)
pair used for budget certification, and the support-probability pair used by
the estimation pipeline.

The certification pair follows the published aggregation rules
(p* = p1 p2 + q1 q2, q* = p1 q2 + q1 p2 for the GRR/LH families, and the
per-bit composition for the UE family); for k-ary chains with k > 2 that
algebra differs from the support probabilities of the simulated two-step
channel, so the estimation-facing pair is derived from first principles:

    keep  = p1 p2 + (k - 1) q1 q2
    other = p1 q2 + q1 p2 + (k - 2) q1 q2

Both pairs coincide for the UE family and for k = 2 (and g = 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .core import (
    BitsReport,
    ChannelParams,
    HashedReport,
    ItemReport,
    LongitudinalBudget,
    MechanismSpec,
    Report,
    check_domain_size,
    check_item,
)
from .errors import DegenerateChainError
from .hashing import hash_values, random_seeds
from . import oneshot

L_UE_VARIANTS = ("L-SUE", "L-OUE", "L-SOUE", "L-OSUE")

# L-XY chains mechanism X at eps_inf with a Y-shaped second step
_UE_STEP_KINDS = {
    "L-SUE": ("S", "S"),
    "L-OUE": ("O", "O"),
    "L-SOUE": ("S", "O"),
    "L-OSUE": ("O", "S"),
}
L_LH_VARIANTS = ("L-BLH", "L-OLH")

_COLLAPSE_TOL = 0.0  # eps_1 == eps_inf collapses the second step exactly


@dataclass(frozen=True)
class StepParams:
    """Channel parameters of a chained two-step mechanism.

    step1/step2 are the per-step (p, q) pairs, `effective` is the certified
    pure-LDP pair at eps_1, and `support` is the support-probability pair the
    estimators must use. aux is the hash range g for the L-LH variants.
    """

    step1: Tuple[float, float]
    step2: Tuple[float, float]
    effective: ChannelParams
    support: ChannelParams
    aux: Optional[int] = None

    def to_json_dict(self) -> dict:
        return {
            "step1": list(self.step1),
            "step2": list(self.step2),
            "effective": [self.effective.p_star, self.effective.q_star],
            "support": [self.support.p_star, self.support.q_star],
            "aux": self.aux,
        }


def _check_step2(p2: float, q2: float, budget: LongitudinalBudget, what: str) -> None:
    if not (0 <= q2 < p2 <= 1) or not np.isfinite(p2):
        raise DegenerateChainError(
            f"{what}: second step infeasible for eps_inf={budget.eps_inf}, "
            f"eps_1={budget.eps_1} (p2={p2!r}, q2={q2!r})"
        )


def _grr_step2(eps_inf: float, eps_1: float, k: int) -> float:
    """Keep probability of the second k-ary randomized-response step."""
    a = math.exp(eps_inf)
    b = math.exp(eps_1)
    return (a * b - 1) / (-k * b + (k - 1) * a + b + b * a - 1)


def _kary_chain(p1: float, q1: float, p2: float, q2: float, k: int) -> Tuple[float, float]:
    """Support probabilities of two chained k-ary randomized responses."""
    keep = p1 * p2 + (k - 1) * q1 * q2
    other = p1 * q2 + q1 * p2 + (k - 2) * q1 * q2
    return keep, other


def l_grr_params(budget: LongitudinalBudget, k: int) -> StepParams:
    """Chained randomized response: GRR at eps_inf, then a GRR-type second step."""
    k = check_domain_size(k)
    a = math.exp(budget.eps_inf)
    p1 = a / (a + k - 1)
    q1 = (1 - p1) / (k - 1)
    if budget.eps_1 == budget.eps_inf:
        p2, q2 = 1.0, 0.0
    else:
        p2 = _grr_step2(budget.eps_inf, budget.eps_1, k)
        q2 = (1 - p2) / (k - 1)
    _check_step2(p2, q2, budget, "L-GRR")
    effective = ChannelParams(p1 * p2 + q1 * q2, p1 * q2 + q1 * p2)
    support = ChannelParams(*_kary_chain(p1, q1, p2, q2, k))
    return StepParams((p1, q1), (p2, q2), effective, support)


def _ue_effective(p1: float, q1: float, p2: float, q2: float) -> Tuple[float, float]:
    return p1 * p2 + (1 - p1) * q2, q1 * p2 + (1 - q1) * q2


def _ue_identity_gap(p1: float, q1: float, p2: float, q2: float, eps_1: float) -> float:
    p, q = _ue_effective(p1, q1, p2, q2)
    return p * (1 - q) - math.exp(eps_1) * q * (1 - p)


def l_ue_params(budget: LongitudinalBudget, variant: str) -> StepParams:
    """Chained unary encoding.

    The first step is SUE or OUE at eps_inf per the variant name (L-XY means
    X then Y). Second-step bit probabilities are pinned by the step-2 family
    shape (symmetric q2 = 1 - p2 for a SUE step; the line through the identity
    channel and OUE(eps_inf) for an OUE step) and solved so the effective
    channel meets the eps_1 identity exactly. Either shape passes through the
    identity channel, so eps_1 = eps_inf collapses the second step.
    """
    try:
        step1_kind, step2_kind = _UE_STEP_KINDS[variant]
    except KeyError:
        raise ValueError(f"unknown longitudinal UE variant {variant!r}") from None

    s1 = oneshot.ue_params(budget.eps_inf, "SUE" if step1_kind == "S" else "OUE")
    p1, q1 = s1.p_star, s1.q_star

    if budget.eps_1 == budget.eps_inf:
        p2, q2 = 1.0, 0.0
    elif step2_kind == "S":

        def gap(p2):
            return _ue_identity_gap(p1, q1, p2, 1 - p2, budget.eps_1)

        p2 = brentq(gap, 0.5 + 1e-12, 1.0, xtol=1e-15, rtol=8.9e-16)
        q2 = 1 - p2
    else:
        gamma = 2.0 / (math.exp(budget.eps_inf) + 1)

        def gap(p2):
            return _ue_identity_gap(p1, q1, p2, gamma * (1 - p2), budget.eps_1)

        p2 = brentq(gap, 1e-9, 1.0, xtol=1e-15, rtol=8.9e-16)
        q2 = gamma * (1 - p2)
    _check_step2(p2, q2, budget, variant)
    eff = ChannelParams(*_ue_effective(p1, q1, p2, q2))
    return StepParams((p1, q1), (p2, q2), eff, eff)


def l_lh_g(budget: LongitudinalBudget, variant: str) -> int:
    """Hash range for longitudinal local hashing; closed form for L-OLH."""
    if variant == "L-BLH":
        return 2
    if variant != "L-OLH":
        raise ValueError(f"unknown longitudinal LH variant {variant!r}")
    a = math.exp(budget.eps_inf)
    b = math.exp(budget.eps_1)
    radicand = a**4 - 14 * a**2 + 12 * a * b * (1 - a * b) + 12 * a**3 * b + 1
    if radicand < 0 or a == b:
        return 2
    g = 1 + max(1, round((1 - a**2 + math.sqrt(radicand)) / (6 * (a - b))))
    return max(2, g)


def l_lh_params(budget: LongitudinalBudget, variant: str) -> StepParams:
    """Longitudinal local hashing: L-GRR chain on the hash domain of size g."""
    g = l_lh_g(budget, variant)
    a = math.exp(budget.eps_inf)
    p1 = a / (a + g - 1)
    if budget.eps_1 == budget.eps_inf:
        p2, q2 = 1.0, 0.0
    else:
        p2 = _grr_step2(budget.eps_inf, budget.eps_1, g)
        q2 = (1 - p2) / (g - 1)
    _check_step2(p2, q2, budget, variant)
    effective = ChannelParams(p1 * p2 + q2 / g, p1 * q2 + p2 / g)
    # a fresh random hash sends any v' != v to the released hash value with
    # probability exactly 1/g, independent of the chain
    keep = p1 * p2 + (1 - p1) * q2
    support = ChannelParams(keep, 1.0 / g, aux=g)
    return StepParams((p1, 1.0 / g), (p2, q2), effective, support, aux=g)


def step_params(spec: MechanismSpec) -> StepParams:
    """StepParams for any longitudinal mechanism spec."""
    if not spec.is_longitudinal:
        raise ValueError(f"{spec.id} is not a longitudinal mechanism")
    budget = spec.budget
    if spec.id == "L-GRR":
        return l_grr_params(budget, spec.k)
    if spec.id in L_UE_VARIANTS:
        return l_ue_params(budget, spec.id)
    return l_lh_params(budget, spec.id)


def certified_epsilon(sp: StepParams, mechanism_id: str) -> float:
    """Privacy level implied by the family identity on the certified channel.

    GRR family: ln(p*/q*). UE family: ln(p*(1-q*) / (q*(1-p*))). LH family:
    ln(keep/other) of the chained g-ary randomized response.
    """
    p, q = sp.effective.p_star, sp.effective.q_star
    if mechanism_id in ("L-GRR", "GRR"):
        return math.log(p / q)
    if mechanism_id in L_UE_VARIANTS or mechanism_id in ("SUE", "OUE"):
        return math.log(p * (1 - q) / (q * (1 - p)))
    if mechanism_id in L_LH_VARIANTS:
        g = sp.aux
        p1 = sp.step1[0]
        q1 = (1 - p1) / (g - 1)
        p2, q2 = sp.step2
        return math.log((p1 * p2 + q1 * q2) / (p1 * q2 + q1 * p2))
    raise ValueError(f"no certification identity for {mechanism_id!r}")


def step1_epsilon(sp: StepParams, mechanism_id: str) -> float:
    """Privacy level of the first (memoized) step alone."""
    p1, q1 = sp.step1
    if mechanism_id == "L-GRR":
        return math.log(p1 / q1)
    if mechanism_id in L_UE_VARIANTS:
        return math.log(p1 * (1 - q1) / (q1 * (1 - p1)))
    if mechanism_id in L_LH_VARIANTS:
        g = sp.aux
        q = (1 - p1) / (g - 1)
        return math.log(p1 / q)
    raise ValueError(f"{mechanism_id!r} is not a longitudinal mechanism")


# --- Clients -----------------------------------------------------------------


class MemoTable:
    """Per-user cache of first-step outputs; an entry never changes once set."""

    def __init__(self):
        self._memo = {}

    def first_step(self, v: int, compute):
        if v not in self._memo:
            self._memo[v] = compute()
        return self._memo[v]

    def __len__(self) -> int:
        return len(self._memo)


def _kary_second_step(memoized: np.ndarray, p2: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Apply the GRR-type second step (keep with p2, else uniform other)."""
    if p2 == 1.0:
        return memoized.copy()
    keep = rng.random(memoized.size) < p2
    other = rng.integers(0, k - 1, size=memoized.size)
    other += (other >= memoized).astype(np.int64)
    return np.where(keep, memoized, other)


def _bits_second_step(bits: np.ndarray, p2: float, q2: float, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(bits.shape)
    return np.where(bits == 1, u < p2, u < q2).astype(np.uint8)


def l_client(v: int, spec: MechanismSpec, memo: MemoTable, rng: np.random.Generator) -> Report:
    """One longitudinal report: memoized first step at eps_inf, fresh second step."""
    if not spec.is_longitudinal:
        raise ValueError(f"{spec.id} is not a longitudinal mechanism")
    v = check_item(v, spec.k)
    sp = step_params(spec)
    p2, q2 = sp.step2

    if spec.id == "L-GRR":
        y = memo.first_step(v, lambda: _grr_step1(v, spec, rng))
        out = _kary_second_step(np.asarray([y]), p2, spec.k, rng)
        return ItemReport(int(out[0]))
    if spec.id in L_UE_VARIANTS:
        y = memo.first_step(v, lambda: _ue_step1(v, spec, sp, rng))
        return BitsReport(_bits_second_step(y[None, :], p2, q2, rng)[0])
    # L-LH: the memoized object is the (seed, first-step hash) pair; only the
    # hash value is re-obfuscated
    seed, y = memo.first_step(v, lambda: _lh_step1(v, spec, sp, rng))
    out = _kary_second_step(np.asarray([y]), p2, sp.aux, rng)
    return HashedReport(seed, int(out[0]))


def _grr_step1(v: int, spec: MechanismSpec, rng: np.random.Generator) -> int:
    rep = oneshot.grr_client(v, spec.budget.eps_inf, spec.k, rng)
    return rep.index


def _ue_step1(v: int, spec: MechanismSpec, sp: StepParams, rng: np.random.Generator) -> np.ndarray:
    p1, q1 = sp.step1
    u = rng.random(spec.k)
    bits = (u < q1).astype(np.uint8)
    bits[v] = u[v] < p1
    return bits


def _lh_step1(v: int, spec: MechanismSpec, sp: StepParams, rng: np.random.Generator):
    g = sp.aux
    seeds = random_seeds(rng, 1)
    hashed = hash_values(seeds, np.asarray([v]), g)
    p1 = sp.step1[0]
    keep = rng.random() < p1
    if keep:
        y = int(hashed[0])
    else:
        y = int(rng.integers(0, g - 1))
        if y >= hashed[0]:
            y += 1
    return int(seeds[0]), y


def l_client_batch(values, spec: MechanismSpec, rng: np.random.Generator):
    """Batch of longitudinal reports, one independent user (and memo) per value.

    Returns the same payload shapes as the matching one-shot batch client.
    """
    if not spec.is_longitudinal:
        raise ValueError(f"{spec.id} is not a longitudinal mechanism")
    values = np.asarray(values, dtype=np.int64)
    bad = (values < 0) | (values >= spec.k)
    if bad.any():
        check_item(int(values[bad][0]), spec.k)
    sp = step_params(spec)
    p1, q1 = sp.step1
    p2, q2 = sp.step2

    if spec.id == "L-GRR":
        keep = rng.random(values.size) < p1
        other = rng.integers(0, spec.k - 1, size=values.size)
        other += (other >= values).astype(np.int64)
        first = np.where(keep, values, other)
        return _kary_second_step(first, p2, spec.k, rng)
    if spec.id in L_UE_VARIANTS:
        out = np.empty((values.size, spec.k), dtype=np.uint8)
        for lo, hi in oneshot._chunks(values.size, spec.k):
            u = rng.random((hi - lo, spec.k))
            bits = (u < q1).astype(np.uint8)
            rows = np.arange(hi - lo)
            bits[rows, values[lo:hi]] = (u[rows, values[lo:hi]] < p1).astype(np.uint8)
            out[lo:hi] = _bits_second_step(bits, p2, q2, rng)
        return out
    g = sp.aux
    seeds = random_seeds(rng, values.size)
    hashed = hash_values(seeds, values, g)
    keep = rng.random(values.size) < p1
    other = rng.integers(0, g - 1, size=values.size)
    other += (other >= hashed).astype(np.int64)
    first = np.where(keep, hashed, other)
    return seeds, _kary_second_step(first, p2, g, rng)
