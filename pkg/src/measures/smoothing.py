"""
Measure mollification
mu * phi_eps either as i.i.d. samples or as a lazily evaluated density
"""
import math
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np
from loguru import logger

from src.exceptions import DomainError, InputError
from src.measures.particles import ParticleMeasure
from src.mollification import MollifierKind, MollifierSpec

DensityFn = Callable[[np.ndarray], np.ndarray]


class SmoothingMode(str, Enum):
    SAMPLED = "sampled"
    DENSITY_EVALUATOR = "density_evaluator"


def _unit_ball_uniform(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.uniform(0.0, 1.0, size=n) ** (1.0 / d)
    return directions * radii[:, None]


def sample_mollifier(m: MollifierSpec, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw n points from the mollifier density

    The heat kernel at time sigma**2 is normal with standard deviation
    sqrt(2) sigma per coordinate. The bump uses rejection from the uniform
    ball with acceptance exp(1 - 1/(1 - r^2)).
    """
    if m.kind == MollifierKind.GAUSSIAN_HEAT:
        return rng.standard_normal((n, d)) * (math.sqrt(2.0) * m.width)
    out = np.empty((0, d))
    while out.shape[0] < n:
        batch = max(64, 2 * (n - out.shape[0]))
        y = _unit_ball_uniform(rng, batch, d)
        r2 = np.sum(y * y, axis=1)
        with np.errstate(divide="ignore"):
            accept = rng.uniform(size=batch) < np.exp(1.0 - 1.0 / (1.0 - r2))
        out = np.concatenate([out, y[accept]])
    return out[:n] * m.width


def mollify_measure(mu: ParticleMeasure, m: MollifierSpec, eps: float,
                    mode: SmoothingMode = SmoothingMode.SAMPLED, n_samples: int = 10_000,
                    seed: Optional[int] = None,
                    rng: Optional[np.random.Generator] = None) -> Union[ParticleMeasure, DensityFn]:
    """
    Convolve a particle measure with phi_eps

    Args:
        mu: Particle measure
        m: Unit-width mollifier; phi_eps = m scaled by eps
        eps: Mollification length
        mode: Sampled returns an equal-weight ParticleMeasure of n_samples points;
            DensityEvaluator returns x -> sum_i m_i phi_eps(x - x_i)
        n_samples: Sample count for Sampled mode
        seed: Seed of a fresh generator (ignored when rng is given)
        rng: Explicit generator state; concurrent callers need independent streams

    Returns:
        ParticleMeasure or density callable on arrays (..., d)
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    phi_eps = m.scaled(eps)
    d = mu.d
    mode = SmoothingMode(mode)

    if mode == SmoothingMode.DENSITY_EVALUATOR:
        centers = mu.positions
        weights = mu.weights

        def density(x):
            x = np.asarray(x, dtype=float)
            if x.shape[-1] != d:
                raise DomainError(f"expected points in R^{d}, got shape {x.shape}")
            flat = x.reshape(-1, d)
            total = np.zeros(flat.shape[0])
            for c, w in zip(centers, weights):
                if w > 0:
                    total += w * phi_eps.radial(np.linalg.norm(flat - c, axis=1), d)
            return total.reshape(x.shape[:-1])

        return density

    if n_samples < 1:
        raise InputError(f"sample count must be at least 1, got {n_samples}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    owners = rng.choice(mu.n, size=n_samples, p=mu.weights)
    noise = sample_mollifier(phi_eps, n_samples, d, rng)
    logger.debug(f"Sampled {n_samples} points of mu * phi_eps ({m.kind.value}, eps={eps:g})")
    return ParticleMeasure.uniform(mu.positions[owners] + noise)
