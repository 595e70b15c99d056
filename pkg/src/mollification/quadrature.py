"""
Radial convolution quadrature
Composite Gauss-Legendre rules and the spherical transfer densities used to evaluate
(K * Phi)(r) = int_0^inf K(u) W(r, u) du for radial K and Phi
"""
import math
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.special import i0e, i1e

from src.exceptions import TabulationError

ArrayFn = Callable[[np.ndarray], np.ndarray]
GRADED_FRACTION = 0.125
GRADED_LEVELS = 30


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]"""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def fraction_rule(n_panels: int, graded: bool, level: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite rule on [0, 1]

    Graded rules add geometric panels toward 0 for integrands singular at the
    lower end. Every panel is split into 2**level equal parts.
    """
    if graded:
        geometric = GRADED_FRACTION * 2.0 ** -np.arange(GRADED_LEVELS, 0, -1)
        edges = np.concatenate([[0.0], geometric, np.linspace(GRADED_FRACTION, 1.0, n_panels + 1)])
    else:
        edges = np.linspace(0.0, 1.0, n_panels + 1)
    if level > 0:
        parts = 2 ** level
        steps = np.linspace(0.0, 1.0, parts + 1)[:-1]
        widths = np.diff(edges)
        edges = np.concatenate([(edges[:-1, None] + widths[:, None] * steps[None, :]).ravel(), [1.0]])
    x, w = gauss_legendre(order)
    widths = np.diff(edges)
    t = (edges[:-1, None] + widths[:, None] * x[None, :]).ravel()
    wt = (widths[:, None] * w[None, :]).ravel()
    return t, wt


def gauss_legendre_panels(lo, hi, n_panels: int = 8, order: int = 16, graded: bool = False, level: int = 0):
    """Nodes u (R, M) and weights w (R, M) of the composite rule mapped to [lo_i, hi_i]"""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    t, wt = fraction_rule(n_panels, graded, level, order)
    span = (hi - lo)[:, None]
    return lo[:, None] + span * t[None, :], span * wt[None, :]


def gaussian_transfer(r: np.ndarray, u: np.ndarray, t: float, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Transfer density W(r, u) and dW/dr for the heat kernel at time t

    r must be strictly positive.
    """
    c = 1.0 / math.sqrt(4.0 * math.pi * t)
    if d == 1:
        gm = c * np.exp(-(r - u) ** 2 / (4.0 * t))
        gp = c * np.exp(-(r + u) ** 2 / (4.0 * t))
        w = gm + gp
        dw = -(r - u) / (2.0 * t) * gm - (r + u) / (2.0 * t) * gp
        return w, dw
    if d == 2:
        a = r * u / (2.0 * t)
        base = u / (2.0 * t) * np.exp(-(r - u) ** 2 / (4.0 * t))
        b0 = i0e(a)
        w = base * b0
        dw = base * (u / (2.0 * t) * i1e(a) - r / (2.0 * t) * b0)
        return w, dw
    near = np.exp(-(r - u) ** 2 / (4.0 * t))
    gap = -np.expm1(-r * u / t)  # 1 - exp(-(r+u)^2/4t) / exp(-(r-u)^2/4t)
    w = (u / r) * c * near * gap
    dw = (u / r) * c * near * ((2.0 * u - (r + u) * gap) / (2.0 * t) - gap / r)
    return w, dw


def gaussian_origin_transfer(u: np.ndarray, t: float, d: int) -> np.ndarray:
    """W(0, u) for the heat kernel at time t"""
    g = np.exp(-u * u / (4.0 * t))
    if d == 1:
        return 2.0 * g / math.sqrt(4.0 * math.pi * t)
    if d == 2:
        return u / (2.0 * t) * g
    return u * u / t * g / math.sqrt(4.0 * math.pi * t)


def compact_transfer(value: ArrayFn, derivative: ArrayFn, support: float, r: np.ndarray, u: np.ndarray,
                     d: int, order: int = 32) -> Tuple[np.ndarray, np.ndarray]:
    """
    Transfer density W(r, u) and dW/dr for a radial profile supported in [0, support)

    d=1 is exact, d=2 integrates over the angle and d=3 over the chord length,
    both restricted to the part of the sphere inside the support. Entries with
    r = 0 use the origin form.
    """
    r, u = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(u, dtype=float))
    at_origin = r == 0.0
    rs = np.where(at_origin, 1.0, r)
    if d == 1:
        diff = r - u
        w = value(np.abs(diff)) + value(r + u)
        dw = derivative(np.abs(diff)) * np.sign(diff) + derivative(r + u)
        return w, dw

    x, wx = gauss_legendre(order)
    if d == 2:
        cos_max = np.clip((rs * rs + u * u - support * support) / (2.0 * rs * u + 1e-300), -1.0, 1.0)
        theta_max = np.where(np.abs(r - u) >= support, 0.0, np.arccos(cos_max))
        theta = theta_max[..., None] * x
        rho = np.sqrt(np.maximum(rs[..., None] ** 2 + u[..., None] ** 2 - 2.0 * rs[..., None] * u[..., None] * np.cos(theta), 0.0))
        weights = theta_max[..., None] * wx
        w = 2.0 * u * np.sum(weights * value(rho), axis=-1)
        cosine_part = (rs[..., None] - u[..., None] * np.cos(theta)) / np.where(rho > 0, rho, 1.0)
        dw = 2.0 * u * np.sum(weights * derivative(rho) * cosine_part, axis=-1)
        w = np.where(at_origin, 2.0 * math.pi * u * value(u), w)
        dw = np.where(at_origin, 0.0, dw)
        return w, dw

    a = np.abs(rs - u)
    b = np.minimum(rs + u, support)
    span = np.maximum(b - a, 0.0)
    rho = a[..., None] + span[..., None] * x
    inner = np.sum(span[..., None] * wx * value(rho) * rho, axis=-1)
    w = 2.0 * math.pi * u / rs * inner
    edge = (rs + u) * value(rs + u) - (rs - u) * value(a)
    dw = -w / rs + 2.0 * math.pi * u / rs * edge
    w = np.where(at_origin, 4.0 * math.pi * u * u * value(u), w)
    dw = np.where(at_origin, 0.0, dw)
    return w, dw


def radial_convolution(profile: ArrayFn, radii: np.ndarray, transfer, half_width: float, *, rtol: float,
                       max_refinements: int, base_panels: int, order: int = 16, inner: int = 1,
                       budget: int = 2_000_000) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate profile(u) * W(r, u) and profile(u) * dW/dr(r, u) over u >= 0

    Windows [max(0, r - L), r + L] with L = half_width. Each radius refines its
    panels until successive estimates agree to rtol relative to the integral of
    the absolute integrand.

    Args:
        profile: Radial function K(u)
        radii: Positive radii
        transfer: Callable (r[:, None], u) -> (W, dW/dr)
        half_width: Window half width L
        inner: Inner quadrature size of the transfer (memory budgeting only)

    Returns:
        (values, derivatives) at each radius

    Raises:
        TabulationError: if some radius has not converged after max_refinements
    """
    radii = np.asarray(radii, dtype=float)
    lo = np.maximum(radii - half_width, 0.0)
    hi = radii + half_width
    values = np.empty_like(radii)
    derivatives = np.empty_like(radii)

    for graded in (True, False):
        group = np.flatnonzero((lo == 0.0) == graded)
        if group.size == 0:
            continue
        prev_v = prev_d = None
        active = group
        for level in range(max_refinements + 1):
            t, wt = fraction_rule(base_panels, graded, level, order)
            cur_v = np.empty(active.size)
            cur_d = np.empty(active.size)
            scale_v = np.empty(active.size)
            scale_d = np.empty(active.size)
            step = max(1, budget // (t.size * inner))
            for start in range(0, active.size, step):
                sl = slice(start, start + step)
                idx = active[sl]
                span = (hi[idx] - lo[idx])[:, None]
                u = lo[idx][:, None] + span * t[None, :]
                w = span * wt[None, :]
                f = profile(u)
                kernel_w, kernel_dw = transfer(radii[idx][:, None], u)
                fw = w * f * kernel_w
                fdw = w * f * kernel_dw
                cur_v[sl] = fw.sum(axis=1)
                cur_d[sl] = fdw.sum(axis=1)
                scale_v[sl] = np.abs(fw).sum(axis=1)
                scale_d[sl] = np.abs(fdw).sum(axis=1)
            if prev_v is not None:
                err = np.maximum(np.abs(cur_v - prev_v) / np.maximum(scale_v, 1e-300),
                                 np.abs(cur_d - prev_d) / np.maximum(scale_d, 1e-300))
                done = err <= rtol
                values[active[done]] = cur_v[done]
                derivatives[active[done]] = cur_d[done]
                if np.all(done):
                    active = active[:0]
                    break
                worst_err = err[~done]
                worst_radius = radii[active[~done]]
                active = active[~done]
                prev_v, prev_d = cur_v[~done], cur_d[~done]
            else:
                prev_v, prev_d = cur_v, cur_d
        if active.size:
            i = int(np.argmax(worst_err))
            raise TabulationError(
                f"radial quadrature did not converge at r={worst_radius[i]:.6g} "
                f"(relative change {worst_err[i]:.3g} > {rtol:g}) after {max_refinements} refinements",
                radius=float(worst_radius[i]),
            )
    return values, derivatives


def origin_convolution(profile: ArrayFn, origin_transfer: Callable[[np.ndarray], np.ndarray], half_width: float,
                       *, rtol: float, max_refinements: int, base_panels: int, order: int = 16) -> float:
    """int_0^L profile(u) W(0, u) du with the same refinement rule"""
    prev = None
    for level in range(max_refinements + 1):
        u, w = gauss_legendre_panels(np.zeros(1), np.full(1, half_width), base_panels, order, graded=True, level=level)
        integrand = w * profile(u) * origin_transfer(u)
        value = float(integrand.sum())
        scale = float(np.abs(integrand).sum())
        if prev is not None and abs(value - prev) <= rtol * max(scale, 1e-300):
            return value
        prev = value
    raise TabulationError(f"origin quadrature did not converge (last value {prev:.12g})", radius=0.0)
