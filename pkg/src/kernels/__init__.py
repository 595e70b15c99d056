from .profiles import RadialProfile, power_profile, log_profile, exponential_profile, constant_profile
from .spec import (
    LOG,
    KernelFamily,
    MorseParams,
    GeneralRadial,
    KernelSpec,
    eval_kernel,
    eval_kernel_grad,
    radial_derivative,
    split_kernel,
    spherical_mean,
)
from .hypotheses import (
    HypothesisStatus,
    HypothesisResult,
    HypothesisReport,
    check_hypotheses,
    ensure_admissible,
)

__all__ = [
    "RadialProfile", "power_profile", "log_profile", "exponential_profile", "constant_profile",
    "LOG", "KernelFamily", "MorseParams", "GeneralRadial", "KernelSpec",
    "eval_kernel", "eval_kernel_grad", "radial_derivative", "split_kernel", "spherical_mean",
    "HypothesisStatus", "HypothesisResult", "HypothesisReport", "check_hypotheses", "ensure_admissible",
]
