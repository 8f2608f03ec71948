"""Stripe patterns, phase modulation and pinned defects in 1D Swift-Hohenberg."""

__version__ = "0.1.0"

from .bloch import (
    conjugacy_check,
    dispersion_branch,
    lambda2_from_family,
    lambda2_from_jet,
    verify_hypotheses,
)
from .defect import (
    DefectSolution,
    SolverConfig,
    epsilon_sweep,
    measure_farfield,
    solve_defect,
    truncation_study,
)
from .errors import ConfigError, NumericalFailure, StripelabError
from .farfield import FarFieldParams, cokernel_pairings, modulated_stripe
from .fredholm import (
    WeightSpec,
    WeightedOperator,
    borderline_range_test,
    discrete_weighted_operator,
    integral_inverse_bound,
    kernel_cokernel_dims,
    polynomial_kernel_check,
    proposition_dims,
    sh_linearization_index_scan,
)
from .partition import PartitionGeometry, build_partition
from .response import (
    ImpuritySpec,
    ResponseCurve,
    phase_sweep,
    pinning_phases,
    response_coefficients,
)
from .stripes import (
    StripeSolution,
    continue_family,
    partial_k,
    solve_stripe,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DefectSolution",
    "FarFieldParams",
    "ImpuritySpec",
    "NumericalFailure",
    "PartitionGeometry",
    "ResponseCurve",
    "SolverConfig",
    "StripeSolution",
    "StripelabError",
    "WeightSpec",
    "WeightedOperator",
    "borderline_range_test",
    "build_partition",
    "cokernel_pairings",
    "conjugacy_check",
    "continue_family",
    "discrete_weighted_operator",
    "dispersion_branch",
    "epsilon_sweep",
    "integral_inverse_bound",
    "kernel_cokernel_dims",
    "lambda2_from_family",
    "lambda2_from_jet",
    "measure_farfield",
    "modulated_stripe",
    "partial_k",
    "phase_sweep",
    "pinning_phases",
    "polynomial_kernel_check",
    "proposition_dims",
    "response_coefficients",
    "sh_linearization_index_scan",
    "solve_defect",
    "solve_stripe",
    "truncation_study",
    "verify_hypotheses",
]
