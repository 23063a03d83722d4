"""Client-side obfuscation and channel parameters for the seven one-time mechanisms.

Each mechanism exposes three things: a `*_params` function returning the pure
channel pair (p*, q*), a scalar `*_client` producing one report, and a
`*_client_batch` producing the raw payloads for many users at once (the batch
path is the single source of truth; scalar clients wrap it). `support_contains`
evaluates the server-side support set S(y) for any report kind.

Reproducibility contract: identical rng state and identical call sequence
produce bit-identical reports.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .core import (
    BitsReport,
    ChannelParams,
    HashedReport,
    ItemReport,
    NoisyHistReport,
    SubsetReport,
    check_domain_size,
    check_item,
)
from .errors import KindMismatchError
from .hashing import hash_value, hash_values, random_seeds

UE_VARIANTS = ("SUE", "OUE")
LH_VARIANTS = ("BLH", "OLH")

# Keeps peak memory of the (n, k) scratch matrices bounded during large
# Monte Carlo batches.
_BATCH_CELLS = 8_000_000


def _check_eps(eps: float) -> float:
    if not (np.isfinite(eps) and eps > 0):
        raise ValueError(f"epsilon must be a positive finite real, got {eps!r}")
    return float(eps)


def _chunks(n: int, k: int):
    step = max(1, _BATCH_CELLS // max(k, 1))
    for lo in range(0, n, step):
        yield lo, min(lo + step, n)


# --- GRR ---------------------------------------------------------------------


def grr_params(eps: float, k: int) -> ChannelParams:
    """Channel pair for generalized randomized response on a k-ary domain."""
    eps = _check_eps(eps)
    k = check_domain_size(k)
    denom = math.exp(eps) + k - 1
    return ChannelParams(math.exp(eps) / denom, 1.0 / denom)


def grr_client_batch(values: np.ndarray, eps: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Obfuscate many item indices with GRR; returns the output indices."""
    eps = _check_eps(eps)
    k = check_domain_size(k)
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >= k):
        raise_check = int(values[(values < 0) | (values >= k)][0])
        check_item(raise_check, k)
    p = grr_params(eps, k).p_star
    keep = rng.random(values.size) < p
    # uniform over D \ {v}: draw in 0..k-2 and skip the true value
    other = rng.integers(0, k - 1, size=values.size)
    other += (other >= values).astype(np.int64)
    return np.where(keep, values, other)


def grr_client(v: int, eps: float, k: int, rng: np.random.Generator) -> ItemReport:
    v = check_item(v, check_domain_size(k))
    out = grr_client_batch(np.asarray([v]), eps, k, rng)
    return ItemReport(int(out[0]))


# --- Unary encoding ----------------------------------------------------------


def ue_params(eps: float, variant: str) -> ChannelParams:
    """Channel pair for unary encoding; SUE is symmetric, OUE fixes p = 1/2."""
    eps = _check_eps(eps)
    if variant == "SUE":
        e2 = math.exp(eps / 2)
        return ChannelParams(e2 / (e2 + 1), 1 / (e2 + 1))
    if variant == "OUE":
        return ChannelParams(0.5, 1 / (math.exp(eps) + 1))
    raise ValueError(f"unknown UE variant {variant!r}")


def ue_client_batch(values, eps: float, k: int, variant: str, rng: np.random.Generator) -> np.ndarray:
    """One-hot encode and perturb each bit independently; returns an (n, k) 0/1 matrix."""
    k = check_domain_size(k)
    values = np.asarray(values, dtype=np.int64)
    params = ue_params(eps, variant)
    out = np.empty((values.size, k), dtype=np.uint8)
    for lo, hi in _chunks(values.size, k):
        u = rng.random((hi - lo, k))
        bits = (u < params.q_star).astype(np.uint8)
        rows = np.arange(hi - lo)
        v = values[lo:hi]
        check = (v < 0) | (v >= k)
        if check.any():
            check_item(int(v[check][0]), k)
        bits[rows, v] = (u[rows, v] < params.p_star).astype(np.uint8)
        out[lo:hi] = bits
    return out


def ue_client(v: int, eps: float, k: int, variant: str, rng: np.random.Generator) -> BitsReport:
    v = check_item(v, check_domain_size(k))
    return BitsReport(ue_client_batch([v], eps, k, variant, rng)[0])


# --- Local hashing -----------------------------------------------------------


def lh_g(eps: float, variant: str) -> int:
    """Hash range size: 2 for BLH, nearest integer (ties-to-even) to e^eps + 1 for OLH."""
    eps = _check_eps(eps)
    if variant == "BLH":
        return 2
    if variant == "OLH":
        return max(2, round(math.exp(eps) + 1))
    raise ValueError(f"unknown LH variant {variant!r}")


def lh_params(eps: float, variant: str) -> ChannelParams:
    eps = _check_eps(eps)
    g = lh_g(eps, variant)
    p = math.exp(eps) / (math.exp(eps) + g - 1)
    return ChannelParams(p, 1.0 / g, aux=g)


def lh_client_batch(values, eps: float, k: int, rng: np.random.Generator, variant: str):
    """Hash each value under a fresh random seed, then GRR the hash on domain g.

    Returns (seeds, obfuscated hash values).
    """
    k = check_domain_size(k)
    values = np.asarray(values, dtype=np.int64)
    bad = (values < 0) | (values >= k)
    if bad.any():
        check_item(int(values[bad][0]), k)
    g = lh_g(eps, variant)
    seeds = random_seeds(rng, values.size)
    hashed = hash_values(seeds, values, g)
    return seeds, grr_client_batch(hashed, eps, g, rng)


def lh_client(v: int, eps: float, k: int, variant: str, rng: np.random.Generator) -> HashedReport:
    check_item(v, check_domain_size(k))
    seeds, out = lh_client_batch([v], eps, k, rng, variant)
    return HashedReport(int(seeds[0]), int(out[0]))


# --- Subset selection --------------------------------------------------------


def ss_omega(eps: float, k: int) -> int:
    """Subset size: nearest integer (ties-to-even) to k / (e^eps + 1), clamped to [1, k-1]."""
    eps = _check_eps(eps)
    k = check_domain_size(k)
    return min(k - 1, max(1, round(k / (math.exp(eps) + 1))))


def ss_params(eps: float, k: int) -> ChannelParams:
    eps = _check_eps(eps)
    k = check_domain_size(k)
    omega = ss_omega(eps, k)
    we = omega * math.exp(eps)
    p = we / (we + k - omega)
    q = (we * (omega - 1) + (k - omega) * omega) / ((k - 1) * (we + k - omega))
    return ChannelParams(p, q, aux=omega)


def ss_client_batch(values, eps: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one size-omega subset per user; returns an (n, omega) index matrix."""
    k = check_domain_size(k)
    values = np.asarray(values, dtype=np.int64)
    bad = (values < 0) | (values >= k)
    if bad.any():
        check_item(int(values[bad][0]), k)
    omega = ss_omega(eps, k)
    p = ss_params(eps, k).p_star
    out = np.empty((values.size, omega), dtype=np.int64)
    for lo, hi in _chunks(values.size, k):
        n = hi - lo
        v = values[lo:hi]
        include = rng.random(n) < p
        # rank the other k-1 values uniformly at random per user; the true
        # value is pushed to the end so it is never drawn as a filler
        keys = rng.random((n, k))
        keys[np.arange(n), v] = 2.0
        # fillers: omega-1 others when v is in, omega others when it is not
        order = np.argpartition(keys, omega, axis=1)[:, : omega + 1]
        ordered_keys = np.take_along_axis(keys, order, axis=1)
        rank = np.argsort(ordered_keys, axis=1, kind="stable")
        smallest = np.take_along_axis(order, rank, axis=1)
        chunk = np.where(include[:, None], np.concatenate([v[:, None], smallest[:, : omega - 1]], axis=1), smallest[:, :omega])
        out[lo:hi] = chunk
    return out


def ss_client(v: int, eps: float, k: int, rng: np.random.Generator) -> SubsetReport:
    check_item(v, check_domain_size(k))
    return SubsetReport(tuple(ss_client_batch([v], eps, k, rng)[0]))


# --- Thresholding with histogram encoding ------------------------------------


def the_mse_objective(theta: float, eps: float) -> float:
    """Estimation error of thresholded histogram encoding as a function of theta."""
    num = 2 * math.exp(eps * theta / 2) - 1
    den = 1 + math.exp(eps * (theta - 0.5)) - 2 * math.exp(eps * theta / 2)
    return num / den**2


@lru_cache(maxsize=None)
def the_theta(eps: float) -> float:
    """Threshold in (0.5, 1) minimizing the estimation error, via golden section."""
    eps = _check_eps(eps)
    invphi = (math.sqrt(5) - 1) / 2
    a, b = 0.5, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = the_mse_objective(c, eps)
    fd = the_mse_objective(d, eps)
    while b - a > 1e-6:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = the_mse_objective(c, eps)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = the_mse_objective(d, eps)
    return (a + b) / 2


def the_params(eps: float) -> ChannelParams:
    eps = _check_eps(eps)
    theta = the_theta(eps)
    p = 1 - 0.5 * math.exp(eps / 2 * (theta - 1))
    q = 0.5 * math.exp(-eps * theta / 2)
    return ChannelParams(p, q, aux=theta)


def the_client_batch(values, eps: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """One-hot encode and add iid Laplace(2/eps) noise per coordinate."""
    eps = _check_eps(eps)
    k = check_domain_size(k)
    values = np.asarray(values, dtype=np.int64)
    bad = (values < 0) | (values >= k)
    if bad.any():
        check_item(int(values[bad][0]), k)
    out = np.empty((values.size, k), dtype=np.float64)
    for lo, hi in _chunks(values.size, k):
        n = hi - lo
        hist = rng.laplace(0.0, 2.0 / eps, size=(n, k))
        hist[np.arange(n), values[lo:hi]] += 1.0
        out[lo:hi] = hist
    return out


def the_client(v: int, eps: float, k: int, rng: np.random.Generator) -> NoisyHistReport:
    check_item(v, check_domain_size(k))
    return NoisyHistReport(the_client_batch([v], eps, k, rng)[0])


# --- Support sets ------------------------------------------------------------


def support_contains(report, v: int, params: ChannelParams) -> bool:
    """Whether the report's support set S(y) contains domain value v."""
    if isinstance(report, ItemReport):
        return report.index == v
    if isinstance(report, BitsReport):
        return bool(report.bits[v])
    if isinstance(report, HashedReport):
        if not isinstance(params.aux, (int, np.integer)):
            raise KindMismatchError("hashed reports require params with aux = g")
        return hash_value(report.seed, v, int(params.aux)) == report.value
    if isinstance(report, SubsetReport):
        return v in report.items
    if isinstance(report, NoisyHistReport):
        if not isinstance(params.aux, float):
            raise KindMismatchError("noisy histogram reports require params with aux = theta")
        return bool(report.values[v] > params.aux)
    raise KindMismatchError(f"unsupported report type {type(report).__name__}")
