"""Wave speeds and wave profiles for nonlocal delayed reaction-diffusion equations."""

from .charspec import (
    CharParams,
    CharReport,
    RootPair,
    char_identity_residual,
    char_report,
    classify_speed,
    eval_R,
    find_positive_roots,
    minimal_speed,
    speed_lower_bound,
)
from .config import RunConfig
from .errors import ConfigError, ModelError, WavefrontError
from .kernels import (
    Exponential,
    Gaussian,
    Hypoexponential,
    Mixture,
    OneSidedExponential,
    PointMass,
    SeparableDeltaTime,
    SeparableProduct,
    SpatialPointMass,
    TemporalMixture,
    TemporalPointMass,
    TwoSidedExponential,
    build_k2,
    convergence_abscissa,
    first_moments,
    kernel_mass,
    laplace_moment,
)
from .nonlinear import Nonlinearity, WaveModel
from .systems import EpidemicModel, PopulationModel, epidemic_solve, population_solve
from .wavesolve import (
    Collapsed,
    NotConverged,
    Profile,
    SolverConfig,
    align_translate,
    fixed_point_solve,
    verify_hypotheses,
)

__version__ = "0.1.0"

__all__ = [
    "CharParams", "CharReport", "RootPair", "char_identity_residual", "char_report",
    "classify_speed", "eval_R", "find_positive_roots", "minimal_speed", "speed_lower_bound",
    "RunConfig", "ConfigError", "ModelError", "WavefrontError",
    "Exponential", "Gaussian", "Hypoexponential", "Mixture", "OneSidedExponential", "PointMass",
    "SeparableDeltaTime", "SeparableProduct", "SpatialPointMass", "TemporalMixture",
    "TemporalPointMass", "TwoSidedExponential", "build_k2", "convergence_abscissa",
    "first_moments", "kernel_mass", "laplace_moment",
    "Nonlinearity", "WaveModel", "EpidemicModel", "PopulationModel", "epidemic_solve",
    "population_solve", "Collapsed", "NotConverged", "Profile", "SolverConfig",
    "align_translate", "fixed_point_solve", "verify_hypotheses",
]
