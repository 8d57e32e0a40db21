"""Pressure functions of symbolic and interval dynamics, and the multifractal
spectra obtained from them by Legendre transforms."""

from .config import AnalysisConfig, ConfigError, load, loads
from .expressions import Formula, FormulaError
from .legendre import (
    PhaseTransition,
    SampledConvexFunction,
    alpha_bounds,
    concave_hull,
    default_q_grid,
    is_concave,
    one_sided_derivatives,
    phase_transitions,
    subdifferential,
    transform_L1,
    transform_L2,
    transform_L3,
    transform_L4,
)
from .potentials import (
    Combination,
    Discontinuities,
    Geometric,
    LocallyConstant,
    Pointwise,
    RegularityClass,
    RegularityTag,
    avg_bracket_on_cylinder,
    birkhoff_sum,
    center,
    classify,
)
from .spectra import (
    SpectrumCurve,
    Status,
    birkhoff_spectrum_direct,
    birkhoff_spectrum_legendre,
    bowen_root,
    dimension_spectrum,
    dimension_T,
    entropy_spectrum,
    glued_spectrum,
    high_entropy_window,
    local_dimension_estimate,
    lyapunov_spectra,
    pressure_samples,
    singular_spectrum,
    strip_smoothness,
    weak_gibbs_check,
)
from .systems import (
    Branch,
    BudgetExceeded,
    GluedSystem,
    PiecewiseConformalMap,
    SymbolicSystem,
    cylinders,
    log_word_count,
    topological_entropy_exact,
    validate,
    word_count,
)
from .thermo import (
    MarkovMeasure,
    Method,
    PressureCurve,
    SingularityError,
    pressure_bracketed,
    pressure_curve,
    pressure_derivative_check,
    pressure_exact_sft,
    rpf_equilibrium,
    two_parameter_pressure,
    variational_lower_bound,
)

__version__ = "0.1.0"
