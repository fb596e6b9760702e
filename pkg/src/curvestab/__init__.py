"""Higher curvatures of linear time-invariant trajectories and the stability
verdicts that follow from their long-time limits."""

from .classify import (Basis, ExponentAnalysis, LimitClass, LimitTag, StabilityVerdict,
                       VerdictTag, classify_limit, equivalence_bounds, exponent_analysis,
                       predict_limit_symbolic, sample_initial_values, spectral_stability,
                       theorem_verdict)
from .curvature import (CurvatureTrace, DerivativeStack, VolumeVector, curvatures,
                        curvatures_from_volumes, derivative_stack, gram_volumes,
                        sample_trace, uniform_grid)
from .errors import (CurvestabError, EigenSolverError, ExpmOverflowError, InputFormatError,
                     SingularTransformError, UndefinedCurvatureError)
from .jordan import (JordanBlock, JordanSpec, block_exponential, closed_form_trajectory,
                     materialize, spectrum_summary)
from .linalg import apply_power, eigenvalues, expm, singular_values

__version__ = "0.1.0"

__all__ = [
    "Basis", "CurvatureTrace", "CurvestabError", "DerivativeStack", "EigenSolverError",
    "ExpmOverflowError", "ExponentAnalysis", "InputFormatError", "JordanBlock", "JordanSpec",
    "LimitClass", "LimitTag", "SingularTransformError", "StabilityVerdict",
    "UndefinedCurvatureError", "VerdictTag", "VolumeVector", "apply_power",
    "block_exponential", "classify_limit", "closed_form_trajectory", "curvatures",
    "curvatures_from_volumes", "derivative_stack", "eigenvalues", "equivalence_bounds",
    "exponent_analysis", "expm", "gram_volumes", "materialize", "predict_limit_symbolic",
    "sample_initial_values", "sample_trace", "singular_values", "spectral_stability",
    "spectrum_summary", "theorem_verdict", "uniform_grid",
]
