"""Simulation and verification toolkit for coupled Hodgkin-Huxley-Wilson
neuron networks and their Caputo-fractional memristive extension.

The package integrates the coupled dynamics, evaluates every closed-form
dissipativity bound and synchronization threshold of the underlying
theory, and checks the guaranteed behavior numerically at desk scale.
"""

from .analysis import (
    AnalysisReport,
    CheckResult,
    ClassicalBounds,
    FractionalBounds,
    GapSeries,
    absorbing_bound_G,
    absorbing_entry_time,
    classical_bounds,
    compute_Q,
    fractional_bounds,
    gap_series,
    rate_mu,
    rate_mu_alpha,
    sync_degree_estimate,
    threshold_P_star,
    transient_bound,
    transient_constant_M,
    transient_time_T0,
    verify_dissipativity,
    verify_frac_sync,
    verify_memristive_dissipativity,
    verify_sync_envelope,
)
from .errors import (
    BlowUpError,
    ConfigError,
    ConvergenceError,
    DomainError,
    HHWError,
    HypothesisViolationError,
    MemoryBudgetError,
    StepSizeUnderflowError,
    TrajectoryTooShortError,
)
from .integrate import IntegratorSpec, integrate_caputo, integrate_classical
from .model import (
    MemristiveParams,
    ModelParams,
    NetworkState,
    Trajectory,
    hhw_rhs,
    m_inf,
    memristive_rhs,
    psi,
    r_inf,
    wilson_memristive_params,
    wilson_params,
)
from .special import (
    MLConfig,
    fractional_gronwall_envelope,
    gamma,
    mittag_leffler,
    mittag_leffler2,
)

__version__ = "0.1.0"
