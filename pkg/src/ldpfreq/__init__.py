"""Locally differentially private frequency estimation.

Client-side obfuscation mechanisms (one-shot and memoization-based
longitudinal variants), server-side estimators (matrix inversion and the
iterative Bayesian update), synthetic data generation, and a seeded
benchmark harness comparing estimator utility.
"""

from .core import (
    ALL_MECHANISMS,
    LONGITUDINAL_MECHANISMS,
    ONESHOT_MECHANISMS,
    BitsReport,
    ChannelParams,
    Distribution,
    HashedReport,
    ItemReport,
    LongitudinalBudget,
    MechanismSpec,
    NoisyHistReport,
    PrivacyBudget,
    Report,
    SubsetReport,
    uniform_distribution,
    validate_distribution,
)
from .errors import LdpError
from .estimation import (
    EstimateResult,
    IbuConfig,
    SupportCounts,
    build_channel,
    estimate,
    estimate_from_counts,
    ibu_estimate,
    mi_estimate,
)
from .evaluation import ExperimentResult, GainRecord, aggregate, mae, mse, utility_gain
from .longitudinal import MemoTable, StepParams, certified_epsilon, l_client, step_params
from .oneshot import (
    grr_client,
    grr_params,
    lh_client,
    lh_params,
    ss_client,
    ss_params,
    support_contains,
    the_client,
    the_params,
    ue_client,
    ue_params,
)
from .pipeline import estimate_batch, mechanism_params, obfuscate_batch, simulate_counts

__version__ = "0.1.0"

__all__ = [
    "ALL_MECHANISMS",
    "LONGITUDINAL_MECHANISMS",
    "ONESHOT_MECHANISMS",
    "BitsReport",
    "ChannelParams",
    "Distribution",
    "EstimateResult",
    "ExperimentResult",
    "GainRecord",
    "HashedReport",
    "IbuConfig",
    "ItemReport",
    "LdpError",
    "LongitudinalBudget",
    "MechanismSpec",
    "MemoTable",
    "NoisyHistReport",
    "PrivacyBudget",
    "Report",
    "StepParams",
    "SubsetReport",
    "SupportCounts",
    "aggregate",
    "build_channel",
    "certified_epsilon",
    "estimate",
    "estimate_batch",
    "estimate_from_counts",
    "grr_client",
    "grr_params",
    "ibu_estimate",
    "l_client",
    "lh_client",
    "lh_params",
    "mae",
    "mechanism_params",
    "mi_estimate",
    "mse",
    "obfuscate_batch",
    "simulate_counts",
    "ss_client",
    "ss_params",
    "step_params",
    "support_contains",
    "the_client",
    "the_params",
    "ue_client",
    "ue_params",
    "uniform_distribution",
    "utility_gain",
    "validate_distribution",
]
