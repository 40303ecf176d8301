"""Occupation times of Brownian motion outside (-1, 1).

Tools around the event that a Brownian path spends at most a fixed budget s
of time outside the interval (-1, 1) up to a horizon T: exact spectral
formulas for the never-exited case, the Laplace transform of the occupation
law and its small-argument asymptotics, numerical transform inversion,
saddle-point asymptotics of the budget probability, Monte Carlo estimators
and conditioned-path samplers, and reproducible named experiments tying the
pieces together.

The conditioned paths concentrate on the cosine-profile quasi-stationary
law and move like the drifted taboo process; the budget probability decays
at the survival rate pi^2/8 times a stretched-exponential correction of
order exp(c s^{1/3} T^{2/3}).
"""

from .analytic import (
    DEFAULT_TOL,
    LAMBDA0,
    SeriesTolerance,
    absorbed_density,
    eigen_lambda,
    eigen_phi,
    exit_prob_zero,
    exit_time_density,
    qsd_cdf,
    qsd_density,
    qsd_sample,
    taboo_drift,
    taboo_transition_density,
)
from .asymptotic import (
    EPS_SADDLE,
    AsympValue,
    asymp_prob_leq_s,
    asymp_snu,
    saddle_T0,
    saddle_V,
    saddle_Vp,
    saddle_Vpp,
    saddle_exponent,
    saddle_h,
)
from .errors import (
    AccuracyError,
    ConfigError,
    DomainError,
    OcculabError,
    PartialResultError,
    PoleError,
    TruncationError,
)
from .experiments import EXPERIMENTS, ExperimentReport, taboo_marginal_cdf
from .inversion import (
    DEFAULT_INVERSION,
    InversionConfig,
    InversionResult,
    invert,
    snu_from_transform,
)
from .laplace import (
    TransformValue,
    expansion_residual_v,
    expansion_residual_w,
    fn_S_hat,
    fn_u,
    fn_v,
    fn_w,
    ingham_equivalent,
    laplace_R,
    laplace_R_mp,
    laplace_R_raw,
    survival_transform_mp,
)
from .montecarlo import (
    TAU_INF,
    ConditionedSample,
    EventCounts,
    McEstimate,
    OccupationSample,
    PathGrid,
    chunk_rng,
    estimate_event,
    occupation_event_counts,
    occupation_outside,
    sample_conditioned,
    sample_sigma,
    sample_sigma_batch,
    simulate_bm,
    simulate_taboo,
    simulate_taboo_ensemble,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_INVERSION",
    "DEFAULT_TOL",
    "EXPERIMENTS",
    "EPS_SADDLE",
    "LAMBDA0",
    "AccuracyError",
    "AsympValue",
    "ConditionedSample",
    "ConfigError",
    "DomainError",
    "EventCounts",
    "ExperimentReport",
    "InversionConfig",
    "InversionResult",
    "McEstimate",
    "OccupationSample",
    "OcculabError",
    "PartialResultError",
    "PathGrid",
    "PoleError",
    "SeriesTolerance",
    "TAU_INF",
    "TransformValue",
    "TruncationError",
    "absorbed_density",
    "asymp_prob_leq_s",
    "asymp_snu",
    "chunk_rng",
    "eigen_lambda",
    "eigen_phi",
    "estimate_event",
    "exit_prob_zero",
    "exit_time_density",
    "expansion_residual_v",
    "expansion_residual_w",
    "fn_S_hat",
    "fn_u",
    "fn_v",
    "fn_w",
    "ingham_equivalent",
    "invert",
    "laplace_R",
    "laplace_R_mp",
    "laplace_R_raw",
    "occupation_event_counts",
    "occupation_outside",
    "qsd_cdf",
    "qsd_density",
    "qsd_sample",
    "saddle_T0",
    "saddle_V",
    "saddle_Vp",
    "saddle_Vpp",
    "saddle_exponent",
    "saddle_h",
    "sample_conditioned",
    "sample_sigma",
    "sample_sigma_batch",
    "simulate_bm",
    "simulate_taboo",
    "simulate_taboo_ensemble",
    "snu_from_transform",
    "survival_transform_mp",
    "taboo_drift",
    "taboo_marginal_cdf",
    "taboo_transition_density",
]
