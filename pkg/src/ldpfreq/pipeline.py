"""Glue between client batches and the server estimators.

The benchmark harness goes through these helpers so the n-user obfuscation
loop stays vectorized; the per-report API (`oneshot.*_client`,
`longitudinal.l_client`, `estimation.estimate`) shares the same underlying
sampling code.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import ChannelParams, MechanismSpec
from . import estimation, longitudinal, oneshot
from .estimation import EstimateResult, IbuConfig, SupportCounts


def mechanism_params(spec: MechanismSpec) -> ChannelParams:
    """Channel pair (p*, q*) the estimators must use for this mechanism."""
    if spec.is_longitudinal:
        return longitudinal.step_params(spec).support
    eps = spec.budget.epsilon
    if spec.id == "GRR":
        return oneshot.grr_params(eps, spec.k)
    if spec.id in oneshot.UE_VARIANTS:
        return oneshot.ue_params(eps, spec.id)
    if spec.id in oneshot.LH_VARIANTS:
        return oneshot.lh_params(eps, spec.id)
    if spec.id == "SS":
        return oneshot.ss_params(eps, spec.k)
    if spec.id == "THE":
        return oneshot.the_params(eps)
    raise ValueError(f"unknown mechanism id {spec.id!r}")


def obfuscate_batch(spec: MechanismSpec, values: np.ndarray, rng: np.random.Generator):
    """Obfuscate one value per simulated user; returns mechanism-native payloads."""
    if spec.is_longitudinal:
        return longitudinal.l_client_batch(values, spec, rng)
    eps = spec.budget.epsilon
    if spec.id == "GRR":
        return oneshot.grr_client_batch(values, eps, spec.k, rng)
    if spec.id in oneshot.UE_VARIANTS:
        return oneshot.ue_client_batch(values, eps, spec.k, spec.id, rng)
    if spec.id in oneshot.LH_VARIANTS:
        return oneshot.lh_client_batch(values, eps, spec.k, rng, spec.id)
    if spec.id == "SS":
        return oneshot.ss_client_batch(values, eps, spec.k, rng)
    if spec.id == "THE":
        return oneshot.the_client_batch(values, eps, spec.k, rng)
    raise ValueError(f"unknown mechanism id {spec.id!r}")


def batch_support_counts(spec: MechanismSpec, payload, params: Optional[ChannelParams] = None) -> SupportCounts:
    """Support counts straight from batch payloads."""
    params = params or mechanism_params(spec)
    k = spec.k
    if spec.id in ("GRR", "L-GRR"):
        counts = estimation.counts_from_items(payload, k)
        n = np.asarray(payload).shape[0]
    elif spec.id in oneshot.UE_VARIANTS or spec.id in longitudinal.L_UE_VARIANTS:
        counts = estimation.counts_from_bits(payload, k)
        n = payload.shape[0]
    elif spec.id in oneshot.LH_VARIANTS or spec.id in longitudinal.L_LH_VARIANTS:
        seeds, values = payload
        counts = estimation.counts_from_hashed(seeds, values, k, int(params.aux))
        n = seeds.shape[0]
    elif spec.id == "SS":
        counts = estimation.counts_from_subsets(payload, k)
        n = payload.shape[0]
    elif spec.id == "THE":
        counts = estimation.counts_from_noisy(payload, k, float(params.aux))
        n = payload.shape[0]
    else:
        raise ValueError(f"unknown mechanism id {spec.id!r}")
    return SupportCounts(counts, int(n))


def simulate_counts(spec: MechanismSpec, values: np.ndarray, rng: np.random.Generator) -> SupportCounts:
    """Obfuscate all users and count supports in one step."""
    params = mechanism_params(spec)
    payload = obfuscate_batch(spec, values, rng)
    return batch_support_counts(spec, payload, params)


def estimate_batch(
    spec: MechanismSpec,
    values: np.ndarray,
    rng: np.random.Generator,
    estimators: tuple = ("MI", "IBU"),
    cfg: Optional[IbuConfig] = None,
) -> dict:
    """Run one simulated collection and estimate with each requested estimator.

    All estimators see the same report set (paired comparison).
    """
    params = mechanism_params(spec)
    counts = simulate_counts(spec, values, rng)
    return {
        name: estimation.estimate_from_counts(counts, spec, params, name, cfg)
        for name in estimators
    }
