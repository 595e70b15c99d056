from .solver import (
    TransportPlan,
    check_plan,
    w2_exact,
    w2_brute,
    w2_entropic,
    displacement_interpolation,
)

__all__ = ["TransportPlan", "check_plan", "w2_exact", "w2_brute", "w2_entropic", "displacement_interpolation"]
