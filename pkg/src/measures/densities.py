"""
Analytic densities and particle initialization
Uniform ball, the compactly supported polynomial C(1-|x|^2)_+^2, boxes and custom profiles
"""
import math
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Callable, Optional

import numpy as np
from loguru import logger
from scipy.integrate import quad
from scipy.special import gamma

from src.exceptions import InputError
from src.measures.particles import ParticleMeasure

GRID_SUBSAMPLES = 4
MIN_NODE_MASS = 1e-16


class DensityKind(str, Enum):
    UNIFORM_BALL = "uniform_ball"
    FIGURE1_POLYNOMIAL = "figure1_polynomial"
    UNIFORM_BOX = "uniform_box"
    CUSTOM = "custom"


class InitMode(str, Enum):
    GRID_WEIGHTED = "grid_weighted"
    MONTE_CARLO = "monte_carlo"


def ball_volume(d: int, radius: float = 1.0) -> float:
    return math.pi ** (d / 2.0) / gamma(d / 2.0 + 1.0) * radius ** d


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """
    Probability density on R^d with bounded support

    Attributes:
        kind: Density family
        d: Dimension
        radius: Ball radius (UniformBall, Figure1Polynomial scales to the unit ball)
        bounds: Array (d, 2) of box bounds (UniformBox, Custom)
        profile: Unnormalized density x -> rho(x) on arrays (..., d) (Custom)
    """
    kind: DensityKind = DensityKind.UNIFORM_BALL
    d: int = 3
    radius: float = 1.0
    bounds: Optional[np.ndarray] = None
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DensityKind(self.kind))
        if self.d not in (1, 2, 3):
            raise InputError(f"dimension must be 1, 2 or 3, got d={self.d}")
        if self.kind in (DensityKind.UNIFORM_BOX, DensityKind.CUSTOM):
            if self.bounds is None:
                raise InputError(f"{self.kind.value} density needs bounds")
            bounds = np.asarray(self.bounds, dtype=float).reshape(self.d, 2)
            if np.any(bounds[:, 1] <= bounds[:, 0]):
                raise InputError("box bounds must satisfy lo < hi on every axis")
            object.__setattr__(self, "bounds", bounds)
        if self.kind == DensityKind.CUSTOM and self.profile is None:
            raise InputError("custom density needs a profile")
        if self.radius <= 0:
            raise InputError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "_normalization", self._compute_normalization())

    @classmethod
    def uniform_ball(cls, d: int, radius: float = 1.0) -> "DensitySpec":
        return cls(DensityKind.UNIFORM_BALL, d, radius=radius)

    @classmethod
    def figure1_polynomial(cls, d: int = 2) -> "DensitySpec":
        return cls(DensityKind.FIGURE1_POLYNOMIAL, d)

    @classmethod
    def uniform_box(cls, bounds) -> "DensitySpec":
        bounds = np.asarray(bounds, dtype=float)
        return cls(DensityKind.UNIFORM_BOX, bounds.shape[0], bounds=bounds)

    @classmethod
    def custom(cls, profile: Callable, bounds) -> "DensitySpec":
        bounds = np.asarray(bounds, dtype=float)
        return cls(DensityKind.CUSTOM, bounds.shape[0], bounds=bounds, profile=profile)

    @property
    def is_radial(self) -> bool:
        return self.kind in (DensityKind.UNIFORM_BALL, DensityKind.FIGURE1_POLYNOMIAL)

    @property
    def normalization(self) -> float:
        """Constant multiplying the unnormalized profile; C = 3/pi for the polynomial in d=2"""
        return self._normalization

    def _unnormalized_radial(self, r: np.ndarray) -> np.ndarray:
        if self.kind == DensityKind.UNIFORM_BALL:
            return np.where(r <= self.radius, 1.0, 0.0)
        return np.clip(1.0 - r * r, 0.0, None) ** 2

    def _compute_normalization(self) -> float:
        d = self.d
        if self.kind == DensityKind.UNIFORM_BALL:
            return 1.0 / ball_volume(d, self.radius)
        if self.kind == DensityKind.FIGURE1_POLYNOMIAL:
            mass, _ = quad(lambda r: (1.0 - r * r) ** 2 * r ** (d - 1), 0.0, 1.0, epsabs=0.0, epsrel=1e-14)
            c = 1.0 / (_sphere_area(d) * mass)
            logger.debug(f"Polynomial density normalization C={c:.15g} (d={d})")
            return c
        volume = float(np.prod(self.bounds[:, 1] - self.bounds[:, 0]))
        if self.kind == DensityKind.UNIFORM_BOX:
            return 1.0 / volume
        points, weights = _box_rule(self.bounds, 48)
        values = np.asarray(self.profile(points), dtype=float)
        if np.any(values < 0):
            raise InputError("custom density evaluates negative")
        mass = float(np.dot(weights, values))
        if not mass > 0:
            raise InputError("custom density has zero mass on its bounds")
        return 1.0 / mass

    def radial(self, r) -> np.ndarray:
        """Density as a function of |x| (radial kinds only)"""
        if not self.is_radial:
            raise InputError(f"{self.kind.value} density is not radial")
        return self._normalization * self._unnormalized_radial(np.asarray(r, dtype=float))

    def density(self, x) -> np.ndarray:
        """Density at points x of shape (..., d)"""
        x = np.asarray(x, dtype=float)
        if self.is_radial:
            return self.radial(np.linalg.norm(x, axis=-1))
        if self.kind == DensityKind.UNIFORM_BOX:
            inside = np.all((x >= self.bounds[:, 0]) & (x <= self.bounds[:, 1]), axis=-1)
            return np.where(inside, self._normalization, 0.0)
        values = self._normalization * np.asarray(self.profile(x), dtype=float)
        inside = np.all((x >= self.bounds[:, 0]) & (x <= self.bounds[:, 1]), axis=-1)
        return np.where(inside, values, 0.0)

    def support_box(self) -> np.ndarray:
        """Axis-aligned box (d, 2) containing the support"""
        if self.is_radial:
            r = self.radius if self.kind == DensityKind.UNIFORM_BALL else 1.0
            return np.tile([-r, r], (self.d, 1)).astype(float)
        return self.bounds.copy()

    def density_bound(self) -> float:
        """Upper bound on the density used as the rejection envelope"""
        if self.kind in (DensityKind.UNIFORM_BALL, DensityKind.FIGURE1_POLYNOMIAL, DensityKind.UNIFORM_BOX):
            return self._normalization
        points, _ = _box_rule(self.bounds, 48)
        return 1.5 * float(np.max(self.density(points)))

    def second_moment(self) -> float:
        """Integral of |x|^2 rho(x) dx by quadrature"""
        d = self.d
        if self.is_radial:
            hi = self.radius if self.kind == DensityKind.UNIFORM_BALL else 1.0
            m2, _ = quad(lambda r: float(self.radial(r)) * r ** (d + 1), 0.0, hi, epsabs=0.0, epsrel=1e-13)
            return _sphere_area(d) * m2
        points, weights = _box_rule(self.bounds, 64)
        return float(np.dot(weights, self.density(points) * np.sum(points ** 2, axis=-1)))


def _box_rule(bounds: np.ndarray, order: int):
    """Tensor Gauss-Legendre rule on a box"""
    x, w = np.polynomial.legendre.leggauss(order)
    axes, axis_weights = [], []
    for lo, hi in bounds:
        axes.append(0.5 * (hi - lo) * (x + 1.0) + lo)
        axis_weights.append(0.5 * (hi - lo) * w)
    points = np.array(list(product(*axes)))
    weights = np.prod(np.array(list(product(*axis_weights))), axis=1)
    return points, weights


def _grid_weighted(rho: DensitySpec, n_target: int) -> ParticleMeasure:
    d = rho.d
    cells = max(1, int(round(n_target ** (1.0 / d))))
    box = rho.support_box()
    h = (box[:, 1] - box[:, 0]) / cells
    axes = [box[i, 0] + h[i] * (np.arange(cells) + 0.5) for i in range(d)]
    centers = np.array(list(product(*axes)))

    sub = (np.arange(GRID_SUBSAMPLES) + 0.5) / GRID_SUBSAMPLES - 0.5
    offsets = np.array(list(product(sub, repeat=d))) * h
    samples = centers[:, None, :] + offsets[None, :, :]
    values = rho.density(samples)
    if np.any(values < 0):
        raise InputError("density evaluates negative")
    masses = values.mean(axis=1) * float(np.prod(h))
    keep = masses >= MIN_NODE_MASS
    logger.debug(f"Grid init: {cells}^{d} cells, {int(keep.sum())} carry mass")
    return ParticleMeasure.normalized(centers[keep], masses[keep])


def _monte_carlo(rho: DensitySpec, n: int, seed: int) -> ParticleMeasure:
    rng = np.random.default_rng(seed)
    box = rho.support_box()
    bound = rho.density_bound()
    accepted = []
    count = 0
    batch = max(1024, 4 * n)
    while count < n:
        candidates = rng.uniform(box[:, 0], box[:, 1], size=(batch, rho.d))
        values = rho.density(candidates)
        if np.any(values < 0):
            raise InputError("density evaluates negative")
        if np.any(values > bound):
            raise InputError("density exceeds its rejection envelope")
        keep = rng.uniform(0.0, bound, size=batch) < values
        accepted.append(candidates[keep])
        count += int(keep.sum())
    positions = np.concatenate(accepted)[:n]
    return ParticleMeasure.uniform(positions)


def init_particles(rho: DensitySpec, n: int, mode: InitMode = InitMode.GRID_WEIGHTED,
                   seed: Optional[int] = None) -> ParticleMeasure:
    """
    Discretize a density by particles

    Args:
        rho: Density specification
        n: Target particle count (GridWeighted uses round(n^(1/d)) cells per axis)
        mode: GridWeighted (deterministic) or MonteCarlo (i.i.d., equal weights)
        seed: Generator seed for MonteCarlo (numpy PCG64)

    Returns:
        ParticleMeasure
    """
    if n < 1:
        raise InputError(f"particle count must be at least 1, got {n}")
    mode = InitMode(mode)
    if mode == InitMode.GRID_WEIGHTED:
        mu = _grid_weighted(rho, n)
    else:
        mu = _monte_carlo(rho, n, 0 if seed is None else seed)
    logger.info(f"✅ Initialized {mu.n} particles from {rho.kind.value} ({mode.value})")
    return mu
