from .interaction import (
    DiagonalPolicy,
    EnergyBreakdown,
    energy_particles,
    velocity_field,
    metric_slope,
    omega,
    pairwise_sums,
    part_functions,
)
from .reference import energy_density_reference

__all__ = [
    "DiagonalPolicy", "EnergyBreakdown", "energy_particles", "velocity_field", "metric_slope", "omega",
    "pairwise_sums", "part_functions", "energy_density_reference",
]
