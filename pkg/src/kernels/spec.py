"""
Interaction kernels
Power-law, Morse and general radial kernels with values, gradients and the attractive/repulsive split
"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np

from src.exceptions import DomainError, InputError, KernelSingularityError
from src.kernels.profiles import (
    RadialProfile,
    constant_profile,
    exponential_profile,
    log_profile,
    power_profile,
)

LOG = "log"


class KernelFamily(str, Enum):
    POWER_LAW = "power_law"
    MORSE = "morse"
    GENERAL_RADIAL = "general"


@dataclass(frozen=True)
class MorseParams:
    """K(r) = c_r exp(-r/l_r) - c_a exp(-r/l_a)"""
    c_r: float = 2.0
    c_a: float = 1.0
    l_r: float = 0.5
    l_a: float = 1.0


@dataclass(frozen=True)
class GeneralRadial:
    """
    User supplied radial kernel

    Exponents describe K ~ r**singularity_exponent near 0 (0 means bounded,
    use a negative number for a singularity; -inf is not accepted) and
    K ~ r**growth_exponent at infinity.
    """
    profile: RadialProfile
    singularity_exponent: float = 0.0
    growth_exponent: float = 2.0
    attractive: Optional[RadialProfile] = None


@dataclass(frozen=True)
class KernelSpec:
    """
    Radial interaction kernel K(|x|)

    Construction checks structure only. Whether the parameters sit in a
    supported regime is answered by check_hypotheses / ensure_admissible, so
    out-of-regime kernels can still be built and diagnosed.
    """
    family: KernelFamily = KernelFamily.POWER_LAW
    d: int = 3
    p: Union[float, str] = -1.0
    q: float = 2.0
    morse: Optional[MorseParams] = None
    general: Optional[GeneralRadial] = None
    hypothesis_radius: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if self.d not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got d={self.d}")
        if self.hypothesis_radius <= 1.0:
            raise InputError(f"hypothesis radius must exceed 1, got {self.hypothesis_radius}")
        if self.family == KernelFamily.POWER_LAW:
            p = self.p
            if isinstance(p, str):
                if p.strip().lower() != LOG:
                    raise InputError(f"repulsion exponent must be a number or 'log', got {p!r}")
                p = LOG
            else:
                p = float(p)
                if p == 0.0:
                    raise InputError("repulsion exponent p=0 is undefined; use p='log'")
            if float(self.q) == 0.0:
                raise InputError("attraction exponent q=0 is undefined")
            object.__setattr__(self, "p", p)
            object.__setattr__(self, "q", float(self.q))
        elif self.family == KernelFamily.MORSE:
            if self.morse is None:
                object.__setattr__(self, "morse", MorseParams())
        elif self.general is None:
            raise InputError("GeneralRadial kernel needs a radial profile")

    @classmethod
    def power_law(cls, d: int, p: Union[float, str], q: float, **kwargs) -> "KernelSpec":
        return cls(family=KernelFamily.POWER_LAW, d=d, p=p, q=q, **kwargs)

    @classmethod
    def morse_potential(cls, d: int, c_r: float, c_a: float, l_r: float, l_a: float, **kwargs) -> "KernelSpec":
        return cls(family=KernelFamily.MORSE, d=d, morse=MorseParams(c_r, c_a, l_r, l_a), **kwargs)

    @classmethod
    def general_radial(cls, d: int, general: GeneralRadial, **kwargs) -> "KernelSpec":
        return cls(family=KernelFamily.GENERAL_RADIAL, d=d, general=general, **kwargs)

    @property
    def is_log(self) -> bool:
        return self.family == KernelFamily.POWER_LAW and self.p == LOG

    @property
    def is_singular(self) -> bool:
        """True when K(0) = +inf"""
        if self.family == KernelFamily.POWER_LAW:
            return self.is_log or self.p < 0
        if self.family == KernelFamily.GENERAL_RADIAL:
            return self.general.singularity_exponent < 0
        return False

    @property
    def has_quadratic_attraction(self) -> bool:
        return self.family == KernelFamily.POWER_LAW and self.q == 2.0

    @property
    def label(self) -> str:
        if self.family == KernelFamily.POWER_LAW:
            return f"PowerLaw(d={self.d}, p={self.p}, q={self.q:g})"
        if self.family == KernelFamily.MORSE:
            m = self.morse
            return f"Morse(d={self.d}, C_r={m.c_r:g}, C_a={m.c_a:g}, l_r={m.l_r:g}, l_a={m.l_a:g})"
        return f"GeneralRadial(d={self.d}, {self.general.profile.label})"


def _as_radius(r) -> Tuple[np.ndarray, bool]:
    scalar = np.ndim(r) == 0
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("kernel radius must be non-negative")
    return arr, scalar


def _restore(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


@lru_cache(maxsize=128)
def split_kernel(spec: KernelSpec) -> Tuple[RadialProfile, RadialProfile]:
    """
    Split K into attractive and repulsive radial profiles

    Args:
        spec: Kernel specification

    Returns:
        (attractive, repulsive) with attractive + repulsive = K
    """
    d = spec.d
    if spec.family == KernelFamily.POWER_LAW:
        attractive = power_profile(1.0 / spec.q, spec.q, d, f"r^{spec.q:g}/{spec.q:g}")
        if spec.is_log:
            repulsive = log_profile(d)
        else:
            repulsive = power_profile(-1.0 / spec.p, spec.p, d, f"-r^{spec.p:g}/{spec.p:g}")
        return attractive, repulsive

    if spec.family == KernelFamily.MORSE:
        m = spec.morse
        attractive = exponential_profile(-m.c_a, m.l_a, d, f"-{m.c_a:g} exp(-r/{m.l_a:g})")
        repulsive = exponential_profile(m.c_r, m.l_r, d, f"{m.c_r:g} exp(-r/{m.l_r:g})")
        return attractive, repulsive

    general = spec.general
    if general.attractive is None:
        return constant_profile(0.0), general.profile
    attractive = general.attractive
    full = general.profile

    def rep_derivative(r):
        return full.grad(r) - attractive.grad(r)

    repulsive = RadialProfile(
        label=f"{full.label} - ({attractive.label})",
        value=lambda r: full.value(r) - attractive.value(r),
        derivative=rep_derivative,
    )
    return attractive, repulsive


def eval_kernel(spec: KernelSpec, r):
    """
    Evaluate K at radius r (scalar or array)

    Returns +inf at r = 0 for singular kernels.
    """
    arr, scalar = _as_radius(r)
    if spec.family == KernelFamily.GENERAL_RADIAL:
        values = spec.general.profile(arr)
    else:
        attractive, repulsive = split_kernel(spec)
        values = attractive(arr) + repulsive(arr)
    return _restore(np.asarray(values, dtype=float), scalar)


def radial_derivative(spec: KernelSpec, r):
    """dK/dr at radius r"""
    arr, scalar = _as_radius(r)
    if spec.family == KernelFamily.GENERAL_RADIAL:
        values = spec.general.profile.grad(arr)
    else:
        attractive, repulsive = split_kernel(spec)
        values = attractive.grad(arr) + repulsive.grad(arr)
    return _restore(np.asarray(values, dtype=float), scalar)


def eval_kernel_grad(spec: KernelSpec, x) -> np.ndarray:
    """
    Gradient of K at a point (or stack of points) in R^d

    Args:
        spec: Kernel specification
        x: Array of shape (d,) or (..., d)

    Returns:
        Array of the same shape as x
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.d:
        raise DomainError(f"expected points in R^{spec.d}, got shape {x.shape}")
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise KernelSingularityError("kernel gradient is undefined at x = 0")
    dr = np.asarray(radial_derivative(spec, r))
    return (dr / r)[..., None] * x


def spherical_mean(profile, x, rho: float, d: int, n: int = 200) -> float:
    """
    Average of a radial profile over the sphere of radius rho about x

    Deterministic nodes: two points in d=1, equispaced angles in d=2 and a
    Fibonacci lattice in d=3.
    """
    x = np.asarray(x, dtype=float).reshape(d)
    if d == 1:
        directions = np.array([[1.0], [-1.0]])
    elif d == 2:
        theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        directions = np.column_stack([np.cos(theta), np.sin(theta)])
    else:
        k = np.arange(n) + 0.5
        z = 1.0 - 2.0 * k / n
        phi = np.pi * (1.0 + 5 ** 0.5) * k
        s = np.sqrt(1.0 - z ** 2)
        directions = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    points = x[None, :] + rho * directions
    return float(np.mean(profile(np.linalg.norm(points, axis=1))))
