from .mollifiers import (
    MollifierKind,
    MollifierSpec,
    AutocorrelationProfile,
    autocorrelation,
    mollifier_eval,
    sphere_area,
    bump_normalization,
    bump_second_moment,
)
from .tabulation import (
    TabulationParams,
    MollifiedKernel,
    build_mollified_kernel,
    eval_mollified,
    critical_radius,
)

__all__ = [
    "MollifierKind", "MollifierSpec", "AutocorrelationProfile", "autocorrelation", "mollifier_eval",
    "sphere_area", "bump_normalization", "bump_second_moment",
    "TabulationParams", "MollifiedKernel", "build_mollified_kernel", "eval_mollified", "critical_radius",
]
