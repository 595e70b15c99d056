from .report import (
    FRAMING,
    AcceptanceThresholds,
    CriterionResult,
    StudyReport,
    write_report,
    strictly_monotone,
)
from .common import BUMP, GAUSSIAN, KernelLadder, paired_energy, fitted_exponent
from .variational import (
    study_monotonicity,
    study_energy_identity,
    study_recovery,
    study_liminf,
    study_slope_scaling,
    study_convexity,
)
from .flows import study_minimizer_convergence, study_figure1, study_dissipation, annular_profile, flatness

STUDY_NAMES = (
    "monotonicity", "recovery", "minimizers", "figure1", "liminf",
    "identity", "dissipation", "slope", "convexity",
)

__all__ = [
    "FRAMING", "AcceptanceThresholds", "CriterionResult", "StudyReport", "write_report", "strictly_monotone",
    "BUMP", "GAUSSIAN", "KernelLadder", "paired_energy", "fitted_exponent",
    "study_monotonicity", "study_energy_identity", "study_recovery", "study_liminf",
    "study_slope_scaling", "study_convexity",
    "study_minimizer_convergence", "study_figure1", "study_dissipation", "annular_profile", "flatness",
    "STUDY_NAMES",
]
