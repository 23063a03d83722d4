"""Flat, Listing-style function API over the ldpfreq core.

Every mechanism gets a `<ID>_Client(user_data, k, eps..., seed)` function and
an `<ID>_Aggregator_MI` / `<ID>_Aggregator_IBU` pair. Reports cross the
boundary as plain values (ints, lists, (seed, value) tuples) and round-trip
losslessly to the core report types. The layer holds no state: each call
builds its inputs, delegates to the core, and returns plain Python values.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ldpfreq import estimation, longitudinal, oneshot
from ldpfreq.core import (
    ALL_MECHANISMS,
    LONGITUDINAL_MECHANISMS,
    BitsReport,
    HashedReport,
    ItemReport,
    LongitudinalBudget,
    MechanismSpec,
    NoisyHistReport,
    PrivacyBudget,
    Report,
    SubsetReport,
)
from ldpfreq.errors import (
    DegenerateChainError,
    EmptyCountsError,
    IndexOutOfDomainError,
    KindMismatchError,
    LdpError,
)

__version__ = "0.1.0"

BoundReport = Union[int, List[int], List[float], Tuple[int, int]]


def encode_report(report: Report) -> BoundReport:
    """Core report to a plain-value payload."""
    if isinstance(report, ItemReport):
        return report.index
    if isinstance(report, BitsReport):
        return [int(b) for b in report.bits]
    if isinstance(report, HashedReport):
        return (report.seed, report.value)
    if isinstance(report, SubsetReport):
        return list(report.items)
    if isinstance(report, NoisyHistReport):
        return [float(x) for x in report.values]
    raise KindMismatchError(f"unsupported report type {type(report).__name__}")


def decode_report(payload: BoundReport, mechanism: str) -> Report:
    """Plain-value payload back to the core report type for `mechanism`."""
    family = mechanism[2:] if mechanism.startswith("L-") else mechanism
    if family == "GRR":
        return ItemReport(int(payload))
    if family in ("SUE", "OUE", "SOUE", "OSUE"):
        return BitsReport(np.asarray(payload, dtype=np.uint8))
    if family in ("BLH", "OLH"):
        seed, value = payload
        return HashedReport(int(seed), int(value))
    if family == "SS":
        return SubsetReport(tuple(payload))
    if family == "THE":
        return NoisyHistReport(np.asarray(payload, dtype=np.float64))
    raise KindMismatchError(f"unknown mechanism {mechanism!r}")


def _spec(mechanism: str, k: int, eps, eps_inf, eps_1) -> MechanismSpec:
    if mechanism not in ALL_MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    if mechanism in LONGITUDINAL_MECHANISMS:
        if eps_inf is None or eps_1 is None:
            raise ValueError(f"{mechanism} needs eps_inf and eps_1")
        return MechanismSpec(mechanism, k, LongitudinalBudget(eps_inf, eps_1))
    if eps is None:
        raise ValueError(f"{mechanism} needs eps")
    return MechanismSpec(mechanism, k, PrivacyBudget(eps))


def client(
    mechanism: str,
    user_data: int,
    k: int,
    eps: Optional[float] = None,
    eps_inf: Optional[float] = None,
    eps_1: Optional[float] = None,
    seed: int = 0,
) -> BoundReport:
    """Obfuscate one value; deterministic for a fixed seed."""
    spec = _spec(mechanism, k, eps, eps_inf, eps_1)
    rng = np.random.default_rng(seed)
    if spec.is_longitudinal:
        report = longitudinal.l_client(user_data, spec, longitudinal.MemoTable(), rng)
    elif mechanism == "GRR":
        report = oneshot.grr_client(user_data, eps, k, rng)
    elif mechanism in ("SUE", "OUE"):
        report = oneshot.ue_client(user_data, eps, k, mechanism, rng)
    elif mechanism in ("BLH", "OLH"):
        report = oneshot.lh_client(user_data, eps, k, mechanism, rng)
    elif mechanism == "SS":
        report = oneshot.ss_client(user_data, eps, k, rng)
    else:
        report = oneshot.the_client(user_data, eps, k, rng)
    return encode_report(report)


def aggregate(
    mechanism: str,
    reports: Sequence[BoundReport],
    k: int,
    eps: Optional[float] = None,
    eps_inf: Optional[float] = None,
    eps_1: Optional[float] = None,
    estimator: str = "IBU",
    nb_iter: int = 10000,
    tol: float = 1e-12,
    err_func: str = "max_abs",
) -> List[float]:
    """Estimate the value distribution from bound reports.

    Bit-for-bit identical to running the core estimate on the same reports.
    """
    if not reports:
        raise EmptyCountsError("no reports to aggregate")
    spec = _spec(mechanism, k, eps, eps_inf, eps_1)
    decoded = [decode_report(r, mechanism) for r in reports]
    cfg = estimation.IbuConfig(max_iter=nb_iter, tol=tol, err_func=err_func)
    result = estimation.estimate(decoded, spec, estimator, cfg)
    return [float(x) for x in result.distribution.probs]


def _make_client(mechanism: str):
    if mechanism in LONGITUDINAL_MECHANISMS:

        def fn(user_data, k, eps_inf, eps_1, seed=0):
            return client(mechanism, user_data, k, eps_inf=eps_inf, eps_1=eps_1, seed=seed)

    else:

        def fn(user_data, k, eps, seed=0):
            return client(mechanism, user_data, k, eps=eps, seed=seed)

    fn.__name__ = f"{mechanism.replace('-', '_')}_Client"
    fn.__doc__ = f"Obfuscate one value with {mechanism}; deterministic under `seed`."
    return fn


def _make_aggregator(mechanism: str, estimator: str):
    if mechanism in LONGITUDINAL_MECHANISMS:

        def fn(reports, k, eps_inf, eps_1, nb_iter=10000, tol=1e-12, err_func="max_abs"):
            return aggregate(
                mechanism, reports, k, eps_inf=eps_inf, eps_1=eps_1,
                estimator=estimator, nb_iter=nb_iter, tol=tol, err_func=err_func,
            )

    else:

        def fn(reports, k, eps, nb_iter=10000, tol=1e-12, err_func="max_abs"):
            return aggregate(
                mechanism, reports, k, eps=eps,
                estimator=estimator, nb_iter=nb_iter, tol=tol, err_func=err_func,
            )

    fn.__name__ = f"{mechanism.replace('-', '_')}_Aggregator_{estimator}"
    fn.__doc__ = f"Estimate a distribution from {mechanism} reports with the {estimator} estimator."
    return fn


__all__ = [
    "BoundReport",
    "aggregate",
    "client",
    "decode_report",
    "encode_report",
    "DegenerateChainError",
    "EmptyCountsError",
    "IndexOutOfDomainError",
    "KindMismatchError",
    "LdpError",
]

for _mech in ALL_MECHANISMS:
    _client_fn = _make_client(_mech)
    globals()[_client_fn.__name__] = _client_fn
    __all__.append(_client_fn.__name__)
    for _est in ("MI", "IBU"):
        _agg_fn = _make_aggregator(_mech, _est)
        globals()[_agg_fn.__name__] = _agg_fn
        __all__.append(_agg_fn.__name__)
del _mech, _est, _client_fn, _agg_fn
