from .particles import (
    ParticleMeasure,
    second_moment,
    center_of_mass,
    centered_second_moment,
    support_radius,
)
from .densities import DensityKind, DensitySpec, InitMode, ball_volume, init_particles
from .smoothing import SmoothingMode, mollify_measure, sample_mollifier

__all__ = [
    "ParticleMeasure", "second_moment", "center_of_mass", "centered_second_moment", "support_radius",
    "DensityKind", "DensitySpec", "InitMode", "ball_volume", "init_particles",
    "SmoothingMode", "mollify_measure", "sample_mollifier",
]
