"""
Mollifiers and their autocorrelations
Gaussian heat kernel and compact smooth bump, both unit mass and radial
"""
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from scipy.special import gamma

from src.exceptions import DomainError
from src.mollification.quadrature import compact_transfer, gauss_legendre_panels


class MollifierKind(str, Enum):
    GAUSSIAN_HEAT = "gaussian_heat"
    COMPACT_BUMP = "compact_bump"


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1}"""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


def _check_dimension(d: int):
    if d not in (1, 2, 3):
        raise DomainError(f"dimension must be 1, 2 or 3, got d={d}")


@lru_cache(maxsize=None)
def bump_normalization(d: int) -> float:
    """C_d such that C_d exp(-1/(1-|x|^2)) has unit mass on the unit ball"""
    _check_dimension(d)
    mass, _ = quad(lambda r: r ** (d - 1) * math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return 1.0 / (sphere_area(d) * mass)


@lru_cache(maxsize=None)
def bump_second_moment(d: int) -> float:
    """Integral of |x|^2 against the unit bump"""
    m2, _ = quad(lambda r: r ** (d + 1) * math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return sphere_area(d) * bump_normalization(d) * m2


def _unit_bump(r: np.ndarray, d: int) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    inside = r < 1.0
    out = np.zeros_like(r)
    ri = r[inside]
    out[inside] = bump_normalization(d) * np.exp(-1.0 / (1.0 - ri * ri))
    return out


def _unit_bump_derivative(r: np.ndarray, d: int) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    inside = r < 1.0
    out = np.zeros_like(r)
    ri = r[inside]
    out[inside] = bump_normalization(d) * np.exp(-1.0 / (1.0 - ri * ri)) * (-2.0 * ri / (1.0 - ri * ri) ** 2)
    return out


@dataclass(frozen=True)
class MollifierSpec:
    """
    Radial unit-mass mollifier of spatial width sigma

    GaussianHeat is the heat kernel at time sigma**2; CompactBump is the smooth
    bump on the ball of radius sigma.
    """
    kind: MollifierKind = MollifierKind.GAUSSIAN_HEAT
    width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MollifierKind(self.kind))
        if not self.width > 0:
            raise DomainError(f"mollifier width must be positive, got {self.width}")

    @property
    def heat_time(self) -> float:
        return self.width ** 2

    @property
    def decay_exponent(self) -> Optional[float]:
        """+inf for the Gaussian; None for the bump, which reports support_radius instead"""
        return math.inf if self.kind == MollifierKind.GAUSSIAN_HEAT else None

    @property
    def support_radius(self) -> float:
        return math.inf if self.kind == MollifierKind.GAUSSIAN_HEAT else self.width

    def scaled(self, eps: float) -> "MollifierSpec":
        """phi_eps(x) = eps^-d phi(x/eps)"""
        if not eps > 0:
            raise DomainError(f"eps must be positive, got {eps}")
        return MollifierSpec(self.kind, self.width * eps)

    def second_moment(self, d: int) -> float:
        """Integral of |x|^2 against the mollifier"""
        if self.kind == MollifierKind.GAUSSIAN_HEAT:
            return 2.0 * d * self.width ** 2
        return self.width ** 2 * bump_second_moment(d)

    def radial(self, r, d: int) -> np.ndarray:
        """Mollifier density as a function of |x|"""
        _check_dimension(d)
        r = np.asarray(r, dtype=float)
        s = self.width
        if self.kind == MollifierKind.GAUSSIAN_HEAT:
            t = s * s
            return (4.0 * math.pi * t) ** (-d / 2.0) * np.exp(-r * r / (4.0 * t))
        return s ** (-d) * _unit_bump(r / s, d)


def mollifier_eval(m: MollifierSpec, x, d: int):
    """
    Evaluate the mollifier density at x

    Args:
        m: Mollifier specification
        x: Point of shape (d,) or stack (..., d)
        d: Dimension

    Returns:
        Density value(s), non-negative
    """
    _check_dimension(d)
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != d:
        raise DomainError(f"expected points in R^{d}, got shape {x.shape}")
    values = m.radial(np.linalg.norm(x, axis=-1), d)
    return float(values) if np.ndim(values) == 0 else values


@dataclass(frozen=True)
class AutocorrelationProfile:
    """
    Phi = phi * phi for a radial mollifier phi of width sigma

    For the Gaussian, Phi is the heat kernel at time 2 sigma**2. For the bump,
    Phi is tabulated at unit width and rescaled.
    """
    kind: MollifierKind
    width: float
    d: int

    @property
    def heat_time(self) -> Optional[float]:
        return 2.0 * self.width ** 2 if self.kind == MollifierKind.GAUSSIAN_HEAT else None

    @property
    def support_radius(self) -> float:
        return math.inf if self.kind == MollifierKind.GAUSSIAN_HEAT else 2.0 * self.width

    @property
    def second_moment(self) -> float:
        return 2.0 * MollifierSpec(self.kind, self.width).second_moment(self.d)

    def value(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == MollifierKind.GAUSSIAN_HEAT:
            t = self.heat_time
            return (4.0 * math.pi * t) ** (-self.d / 2.0) * np.exp(-r * r / (4.0 * t))
        s = self.width
        return s ** (-self.d) * _unit_bump_autocorrelation_eval(r / s, self.d, 0)

    def derivative(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == MollifierKind.GAUSSIAN_HEAT:
            t = self.heat_time
            return -r / (2.0 * t) * self.value(r)
        s = self.width
        return s ** (-self.d - 1) * _unit_bump_autocorrelation_eval(r / s, self.d, 1)


def autocorrelation(m: MollifierSpec, d: int) -> AutocorrelationProfile:
    """Autocorrelation Phi = phi * phi of a mollifier in dimension d"""
    _check_dimension(d)
    return AutocorrelationProfile(kind=m.kind, width=m.width, d=d)


@lru_cache(maxsize=None)
def _unit_bump_autocorrelation(d: int, n_nodes: int = 401) -> Tuple[CubicHermiteSpline, float]:
    """
    Tabulate Phi = phi * phi for the unit bump on [0, 2]

    Phi(s) = int_0^1 phi(u) W(s, u) du with W the spherical transfer density of
    phi itself; the table is renormalized to unit mass.
    """
    s = np.linspace(0.0, 2.0, n_nodes)
    u, w = gauss_legendre_panels(np.zeros_like(s), np.ones_like(s), n_panels=8, order=16)
    base = _unit_bump(u, d)
    transfer_value, transfer_derivative = compact_transfer(
        lambda r: _unit_bump(r, d), lambda r: _unit_bump_derivative(r, d), 1.0, s[:, None], u, d, order=48
    )
    values = np.sum(w * base * transfer_value, axis=1)
    derivatives = np.sum(w * base * transfer_derivative, axis=1)
    values[-1] = 0.0
    derivatives[0] = 0.0
    derivatives[-1] = 0.0

    spline = CubicHermiteSpline(s, values, derivatives)
    ru, rw = gauss_legendre_panels(np.zeros(1), np.full(1, 2.0), n_panels=32, order=16)
    mass = float(np.sum(rw * spline(ru) * sphere_area(d) * ru ** (d - 1)))
    logger.debug(f"Bump autocorrelation d={d}: raw mass {mass:.12f}, Phi(0)={values[0]:.6g}")
    spline = CubicHermiteSpline(s, values / mass, derivatives / mass)
    return spline, mass


def _unit_bump_autocorrelation_eval(s: np.ndarray, d: int, nu: int) -> np.ndarray:
    spline, _ = _unit_bump_autocorrelation(d)
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = s < 2.0
    out[inside] = spline(s[inside], nu)
    return out
