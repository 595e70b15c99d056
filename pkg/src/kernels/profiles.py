"""
Radial profiles
Scalar functions of the radius with analytic derivatives and Laplacians
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RadialProfile:
    """
    A radial function f(|x|) in dimension d

    Laplacian and its radial derivative are optional; the tabulation tail uses
    them for the second-moment shift when present.
    """
    label: str
    value: ArrayFn
    derivative: Optional[ArrayFn] = None
    laplacian: Optional[ArrayFn] = None
    laplacian_derivative: Optional[ArrayFn] = None
    is_zero: bool = False

    def __call__(self, r) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self.value(np.asarray(r, dtype=float))

    def grad(self, r) -> np.ndarray:
        """Radial derivative; central differences when no closed form is given"""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.derivative is not None:
                return self.derivative(r)
            h = 1e-6 * np.maximum(r, 1e-3)
            lo = np.maximum(r - h, 0.0)
            return (self.value(r + h) - self.value(lo)) / (r + h - lo)

    @property
    def has_laplacian(self) -> bool:
        return self.laplacian is not None and self.laplacian_derivative is not None


def power_profile(coef: float, a: float, d: int, label: str) -> RadialProfile:
    """coef * r**a with closed-form derivative and Laplacian"""
    lap = coef * a * (a + d - 2)
    return RadialProfile(
        label=label,
        value=lambda r: coef * r ** a,
        derivative=lambda r: coef * a * r ** (a - 1),
        laplacian=lambda r: lap * r ** (a - 2),
        laplacian_derivative=lambda r: lap * (a - 2) * r ** (a - 3),
    )


def log_profile(d: int, label: str = "-log r") -> RadialProfile:
    """-log r"""
    return RadialProfile(
        label=label,
        value=lambda r: -np.log(r),
        derivative=lambda r: -1.0 / r,
        laplacian=lambda r: -(d - 2) / r ** 2,
        laplacian_derivative=lambda r: 2.0 * (d - 2) / r ** 3,
    )


def exponential_profile(amplitude: float, length: float, d: int, label: str) -> RadialProfile:
    """amplitude * exp(-r / length)"""

    def lap(r):
        return amplitude * np.exp(-r / length) * (1.0 / length ** 2 - (d - 1) / (length * r))

    def lap_derivative(r):
        return -lap(r) / length + amplitude * np.exp(-r / length) * (d - 1) / (length * r ** 2)

    return RadialProfile(
        label=label,
        value=lambda r: amplitude * np.exp(-r / length),
        derivative=lambda r: -amplitude / length * np.exp(-r / length),
        laplacian=lap,
        laplacian_derivative=lap_derivative,
    )


def constant_profile(c: float = 0.0, label: str = "0") -> RadialProfile:
    return RadialProfile(
        label=label,
        value=lambda r: np.full_like(r, c, dtype=float),
        derivative=lambda r: np.zeros_like(r, dtype=float),
        laplacian=lambda r: np.zeros_like(r, dtype=float),
        laplacian_derivative=lambda r: np.zeros_like(r, dtype=float),
        is_zero=(c == 0.0),
    )
