"""Server-side aggregation: support counts, matrix-inversion and iterative
Bayesian update estimators.

The matrix-inversion estimator debiases support counts in counting form
(never inverting the channel explicitly), clips negatives to zero and
renormalizes. The iterative estimator runs the expectation-maximization
fixed point on the square k-by-k support channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from .core import (
    BitsReport,
    ChannelParams,
    Distribution,
    HashedReport,
    ItemReport,
    MechanismSpec,
    NoisyHistReport,
    Report,
    SubsetReport,
    check_domain_size,
)
from .errors import (
    DegenerateChannelError,
    EmptyCountsError,
    KindMismatchError,
    ZeroDenominatorError,
)
from .hashing import hash_values
from .oneshot import _chunks


@dataclass(frozen=True)
class IbuConfig:
    """Stopping parameters for the iterative estimator.

    Defaults: at most 10000 iterations, tolerance 1e-12 on the maximum
    absolute difference between successive iterates, uniform start.
    """

    max_iter: int = 10000
    tol: float = 1e-12
    err_func: str = "max_abs"
    init: Union[str, Distribution] = "uniform"

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.err_func != "max_abs":
            raise ValueError(f"unsupported err_func {self.err_func!r}")
        if not (self.init == "uniform" or isinstance(self.init, Distribution)):
            raise ValueError("init must be 'uniform' or a Distribution")


@dataclass(frozen=True)
class SupportCounts:
    """Per-value support counts c[v] over n reports."""

    counts: np.ndarray
    n: int

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.ndim != 1 or np.any(arr < 0):
            raise ValueError("counts must be a 1-D non-negative integer vector")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)
        if self.n < 0:
            raise ValueError("n must be non-negative")


@dataclass(frozen=True)
class EstimateResult:
    """Estimated distribution plus convergence metadata (zero for MI)."""

    distribution: Distribution
    iterations: int = 0
    final_error: float = 0.0


# --- Support counting --------------------------------------------------------


def counts_from_items(items: np.ndarray, k: int) -> np.ndarray:
    items = np.asarray(items, dtype=np.int64)
    if items.size and (items.min() < 0 or items.max() >= k):
        raise KindMismatchError("item report outside domain")
    return np.bincount(items, minlength=k).astype(np.int64)


def counts_from_bits(bits: np.ndarray, k: int) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[1] != k:
        raise KindMismatchError(f"bit vectors must have length {k}")
    return bits.sum(axis=0, dtype=np.int64)


def counts_from_hashed(seeds: np.ndarray, values: np.ndarray, k: int, g: int) -> np.ndarray:
    seeds = np.asarray(seeds, dtype=np.uint64)
    values = np.asarray(values, dtype=np.int64)
    domain = np.arange(k, dtype=np.uint64)
    counts = np.zeros(k, dtype=np.int64)
    for lo, hi in _chunks(seeds.size, k):
        hashed = hash_values(seeds[lo:hi, None], domain[None, :], g)
        counts += (hashed == values[lo:hi, None]).sum(axis=0, dtype=np.int64)
    return counts


def counts_from_subsets(subsets: np.ndarray, k: int) -> np.ndarray:
    subsets = np.asarray(subsets, dtype=np.int64)
    return np.bincount(subsets.ravel(), minlength=k).astype(np.int64)


def counts_from_noisy(hists: np.ndarray, k: int, theta: float) -> np.ndarray:
    hists = np.asarray(hists, dtype=np.float64)
    if hists.ndim != 2 or hists.shape[1] != k:
        raise KindMismatchError(f"noisy histograms must have length {k}")
    return (hists > theta).sum(axis=0, dtype=np.int64)


def count_supports(reports: List[Report], spec: MechanismSpec, params: ChannelParams) -> SupportCounts:
    """Count, per domain value v, how many reports' support sets contain v."""
    n = len(reports)
    k = spec.k
    if n == 0:
        return SupportCounts(np.zeros(k, dtype=np.int64), 0)
    first = reports[0]
    if any(type(r) is not type(first) for r in reports):
        raise KindMismatchError("mixed report kinds")
    if isinstance(first, ItemReport):
        counts = counts_from_items(np.asarray([r.index for r in reports]), k)
    elif isinstance(first, BitsReport):
        counts = counts_from_bits(np.stack([r.bits for r in reports]), k)
    elif isinstance(first, HashedReport):
        if not isinstance(params.aux, (int, np.integer)):
            raise KindMismatchError("hashed reports require params with aux = g")
        counts = counts_from_hashed(
            np.asarray([r.seed for r in reports], dtype=np.uint64),
            np.asarray([r.value for r in reports]),
            k,
            int(params.aux),
        )
    elif isinstance(first, SubsetReport):
        lengths = {len(r.items) for r in reports}
        if len(lengths) != 1:
            raise KindMismatchError("subset reports must share one subset size")
        counts = counts_from_subsets(np.asarray([r.items for r in reports]), k)
    elif isinstance(first, NoisyHistReport):
        if not isinstance(params.aux, float):
            raise KindMismatchError("noisy histogram reports require params with aux = theta")
        counts = counts_from_noisy(np.stack([r.values for r in reports]), k, params.aux)
    else:
        raise KindMismatchError(f"unsupported report type {type(first).__name__}")
    return SupportCounts(counts, n)


# --- Estimators --------------------------------------------------------------


def mi_estimate(counts: SupportCounts, params: ChannelParams) -> Distribution:
    """Debias support counts, clip negatives to zero, renormalize."""
    if counts.n < 1:
        raise EmptyCountsError("no reports to estimate from")
    p, q = params.p_star, params.q_star
    if p == q:
        raise DegenerateChannelError("p* == q*")
    raw = (counts.counts - counts.n * q) / (counts.n * (p - q))
    clipped = np.clip(raw, 0.0, None)
    total = clipped.sum()
    if total == 0.0:
        # all mass clipped away; fall back to the max-entropy answer
        return Distribution(np.full(len(raw), 1.0 / len(raw)))
    return Distribution(clipped / total)


def mi_estimate_raw(counts: SupportCounts, params: ChannelParams) -> np.ndarray:
    """Pre-clip debiased estimate; may leave the simplex. Used by bias tests."""
    if counts.n < 1:
        raise EmptyCountsError("no reports to estimate from")
    p, q = params.p_star, params.q_star
    if p == q:
        raise DegenerateChannelError("p* == q*")
    return (counts.counts - counts.n * q) / (counts.n * (p - q))


def build_channel(params: ChannelParams, k: int) -> np.ndarray:
    """Square channel matrix: p* on the diagonal, q* elsewhere."""
    k = check_domain_size(k)
    a = np.full((k, k), params.q_star)
    np.fill_diagonal(a, params.p_star)
    return a


def observed_distribution(counts: SupportCounts) -> Distribution:
    """Support counts normalized to total mass one."""
    total = counts.counts.sum()
    if total <= 0:
        raise EmptyCountsError("support counts sum to zero")
    return Distribution(counts.counts / total)


def ibu_estimate(
    f_tilde: Distribution,
    channel: np.ndarray,
    cfg: Optional[IbuConfig] = None,
) -> Tuple[Distribution, int, float]:
    """Expectation-maximization fixed point for the observed distribution.

    Returns (estimate, iterations used, last successive-iterate error).
    """
    cfg = cfg or IbuConfig()
    a = np.asarray(channel, dtype=np.float64)
    k = a.shape[0]
    if a.shape != (k, k):
        raise ValueError("channel must be square")
    obs = f_tilde.probs
    if obs.size != k:
        raise ValueError("observed distribution length does not match channel")
    f = np.full(k, 1.0 / k) if cfg.init == "uniform" else cfg.init.probs.copy()

    iterations = 0
    err = np.inf
    for iterations in range(1, cfg.max_iter + 1):
        denom = a.T @ f
        dead = denom <= 0.0
        if np.any(dead & (obs > 0)):
            raise ZeroDenominatorError("observed symbol has zero model probability")
        ratio = np.divide(obs, denom, out=np.zeros_like(obs), where=~dead)
        f_next = f * (a @ ratio)
        err = float(np.max(np.abs(f_next - f)))
        f = f_next
        if err < cfg.tol:
            break
    return Distribution(f / f.sum()), iterations, err


def ibu_log_likelihood(f_hat: np.ndarray, f_tilde: np.ndarray, channel: np.ndarray) -> float:
    """Average log-likelihood of the observed distribution under the model."""
    mix = np.asarray(channel).T @ np.asarray(f_hat)
    mask = np.asarray(f_tilde) > 0
    return float(np.sum(f_tilde[mask] * np.log(mix[mask])))


def estimate(
    reports: List[Report],
    spec: MechanismSpec,
    estimator: str,
    cfg: Optional[IbuConfig] = None,
) -> EstimateResult:
    """Full server pipeline: count supports, then run the chosen estimator."""
    from .pipeline import mechanism_params

    params = mechanism_params(spec)
    counts = count_supports(reports, spec, params)
    return estimate_from_counts(counts, spec, params, estimator, cfg)


def estimate_from_counts(
    counts: SupportCounts,
    spec: MechanismSpec,
    params: ChannelParams,
    estimator: str,
    cfg: Optional[IbuConfig] = None,
) -> EstimateResult:
    if counts.n == 0:
        raise EmptyCountsError("no reports to estimate from")
    if estimator == "MI":
        return EstimateResult(mi_estimate(counts, params))
    if estimator == "IBU":
        f_tilde = observed_distribution(counts)
        channel = build_channel(params, spec.k)
        dist, iters, err = ibu_estimate(f_tilde, channel, cfg)
        return EstimateResult(dist, iters, err)
    raise ValueError(f"unknown estimator {estimator!r}")
