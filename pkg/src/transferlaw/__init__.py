"""Transfer scaling laws: fitting learning curves and simulating ASGD transfer learning."""

__version__ = "0.1.0"

from .complexity import EntropyReport, gaussian_negative_entropy
from .exceptions import (
    AdmissibilityWarning,
    NonIdentifiableError,
    NonIdentifiableWarning,
    TransferLawError,
    ValidationError,
)
from .fit import (
    FitOptions,
    FitReport,
    fit_full,
    fit_loglog_linear,
    fit_simple,
    landscape,
    linearize,
    stabilize_D,
    standard_errors,
)
from .law import (
    FullLawParams,
    Observation,
    SimpleLawParams,
    full_law_eval,
    reduce_full_to_simple,
    simple_law_eval,
)

__all__ = [
    "__version__",
    "Observation", "SimpleLawParams", "FullLawParams", "simple_law_eval", "full_law_eval",
    "reduce_full_to_simple", "FitOptions", "FitReport", "fit_simple", "fit_full",
    "stabilize_D", "landscape", "standard_errors", "linearize", "fit_loglog_linear",
    "EntropyReport", "gaussian_negative_entropy", "TransferLawError", "ValidationError",
    "NonIdentifiableError", "NonIdentifiableWarning", "AdmissibilityWarning",
]
