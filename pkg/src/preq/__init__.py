"""Covariance and density-operator dynamics for open quantum systems, with
Monte Carlo checks of their Gaussian random-field interpretation."""
from .dynamics import (
    OperatorTrajectory,
    StepSizeError,
    TimeGrid,
    brownian_density,
    check_trace_preserving,
    closed_form_similarity,
    propagate_covariance,
    propagate_density_nonlinear,
)
from .generators import (
    AffineGenerator,
    CoefficientTensor,
    DriftSchedule,
    GKSLSpec,
    Superoperator,
    apply,
    build_affine,
    build_commutator,
    build_gksl,
    build_similarity,
    coefficient_tensor,
)
from .kernels import BACKEND
from .operators import hs_inner, is_positive, normalize_trace, sqrt_psd
from .prequantum import (
    EstimateWithError,
    GaussianEnsemble,
    classical_average,
    density_pde_residual_1d,
    dispersion,
    empirical_covariance,
    moment_evolution_residual,
    quantum_average,
    sample_gaussian,
    scaling_bridge,
)
from .stochastic import (
    PathEnsemble,
    SDESpec,
    empirical_covariance_at,
    ou_covariance_ode,
    simulate_brownian,
    simulate_linear_sde,
)

__version__ = "0.1.0"

__all__ = [
    "AffineGenerator",
    "BACKEND",
    "CoefficientTensor",
    "DriftSchedule",
    "EstimateWithError",
    "GKSLSpec",
    "GaussianEnsemble",
    "OperatorTrajectory",
    "PathEnsemble",
    "SDESpec",
    "StepSizeError",
    "Superoperator",
    "TimeGrid",
    "apply",
    "brownian_density",
    "build_affine",
    "build_commutator",
    "build_gksl",
    "build_similarity",
    "hs_inner",
    "is_positive",
    "normalize_trace",
    "sqrt_psd",
    "check_trace_preserving",
    "classical_average",
    "closed_form_similarity",
    "coefficient_tensor",
    "density_pde_residual_1d",
    "dispersion",
    "empirical_covariance",
    "empirical_covariance_at",
    "moment_evolution_residual",
    "ou_covariance_ode",
    "propagate_covariance",
    "propagate_density_nonlinear",
    "quantum_average",
    "sample_gaussian",
    "scaling_bridge",
    "simulate_brownian",
    "simulate_linear_sde",
]
