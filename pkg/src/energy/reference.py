"""
Reference energies of analytic densities
Midpoint grid quadrature with a closed-form singular cell, and an exact radial double integral
"""
import math
from itertools import product

import numpy as np
from loguru import logger

from src.energy.interaction import pairwise_sums
from src.exceptions import InputError
from src.kernels import KernelFamily, KernelSpec, eval_kernel, split_kernel
from src.measures import DensitySpec, ball_volume
from src.measures.densities import GRID_SUBSAMPLES
from src.mollification import sphere_area
from src.mollification.quadrature import compact_transfer, gauss_legendre_panels

RADIAL_CHUNK = 64


def _ball_average_power(a: float, radius: float, d: int) -> float:
    """Mean of r^a over the ball of the given radius"""
    return d / (a + d) * radius ** a


def _self_cell(k: KernelSpec, radius: float) -> tuple:
    """Mean of (K^a, K^r) over a ball with the cell's volume"""
    d = k.d
    attractive = _ball_average_power(k.q, radius, d) / k.q
    if k.is_log:
        repulsive = -math.log(radius) + 1.0 / d
    else:
        repulsive = -_ball_average_power(k.p, radius, d) / k.p
    return attractive, repulsive


def _check_integrable(k: KernelSpec):
    if k.family == KernelFamily.POWER_LAW and not k.is_log and k.p <= -k.d:
        raise InputError(f"repulsion r^{k.p:g} is not locally integrable in d={k.d}")


def _grid_reference(rho: DensitySpec, k: KernelSpec, resolution: int) -> float:
    if k.family != KernelFamily.POWER_LAW:
        raise InputError("grid reference energy needs a power-law kernel; use method='radial'")
    d = rho.d
    box = rho.support_box()
    h = (box[:, 1] - box[:, 0]) / resolution
    axes = [box[i, 0] + h[i] * (np.arange(resolution) + 0.5) for i in range(d)]
    centers = np.array(list(product(*axes)))
    sub = (np.arange(GRID_SUBSAMPLES) + 0.5) / GRID_SUBSAMPLES - 0.5
    offsets = np.array(list(product(sub, repeat=d))) * h
    cell_volume = float(np.prod(h))
    masses = rho.density(centers[:, None, :] + offsets[None, :, :]).mean(axis=1) * cell_volume
    if np.any(masses < 0):
        raise InputError("density evaluates negative")
    keep = masses > 0
    centers, masses = centers[keep], masses[keep]

    off = pairwise_sums(centers, masses, split_kernel(k))
    radius = (cell_volume / ball_volume(d)) ** (1.0 / d)
    self_a, self_r = _self_cell(k, radius)
    self_mass = float(np.dot(masses, masses))
    energy = float(off.sum()) + self_mass * (self_a + self_r)
    logger.debug(f"Grid reference: {resolution}^{d} cells, {centers.shape[0]} with mass, E={energy:.12g}")
    return energy


def _radial_reference(rho: DensitySpec, k: KernelSpec, resolution: int) -> float:
    """
    int_0^{2R} K(u) |S^{d-1}| u^{d-1} (rho * rho)(u) du

    The self-convolution uses the spherical transfer density of rho; its
    inner integral is split where the sphere leaves the support.
    """
    if not rho.is_radial:
        raise InputError("radial reference energy needs a radial density")
    d = rho.d
    support = rho.support_box()[0, 1]
    value = rho.radial

    def derivative(r):
        return np.zeros_like(r)

    u, wu = gauss_legendre_panels(np.zeros(1), np.full(1, 2.0 * support), n_panels=resolution, order=16, graded=True)
    u, wu = u[0], wu[0]
    g = np.empty_like(u)
    for start in range(0, u.size, RADIAL_CHUNK):
        uc = u[start:start + RADIAL_CHUNK]
        split = np.clip(support - uc, 0.0, support)
        total = np.zeros_like(uc)
        for lo, hi in ((np.zeros_like(uc), split), (split, np.full_like(uc, support))):
            s, ws = gauss_legendre_panels(lo, hi, n_panels=max(4, resolution // 4), order=16)
            w, _ = compact_transfer(value, derivative, support, uc[:, None], s, d, order=32)
            total += np.sum(ws * value(s) * w, axis=1)
        g[start:start + RADIAL_CHUNK] = total
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.asarray(eval_kernel(k, u), dtype=float)
    energy = float(np.sum(wu * kernel * sphere_area(d) * u ** (d - 1) * g))
    logger.debug(f"Radial reference: {u.size} outer nodes, E={energy:.12g}")
    return energy


def energy_density_reference(rho: DensitySpec, k: KernelSpec, resolution: int = 64, method: str = "grid") -> float:
    """
    E(rho) = double integral of K(x - y) rho(x) rho(y)

    Args:
        rho: Density with bounded support
        k: Kernel (power law for the grid method)
        resolution: Cells per axis (grid) or outer panels (radial)
        method: 'grid' (midpoint cells, equal-volume ball on the singular cell)
            or 'radial' (exact radial double integral, radial densities only)

    Returns:
        Energy value
    """
    if rho.d != k.d:
        raise InputError(f"density dimension {rho.d} differs from kernel dimension {k.d}")
    if resolution < 1:
        raise InputError(f"resolution must be positive, got {resolution}")
    _check_integrable(k)
    if method == "grid":
        return _grid_reference(rho, k, resolution)
    if method == "radial":
        return _radial_reference(rho, k, resolution)
    raise InputError(f"unknown reference method {method!r}")
