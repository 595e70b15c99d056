"""
Mollified kernel tabulation
Builds K_eps = phi_eps * K * phi_eps = K * Phi_eps on a log-spaced radial grid and
interpolates it with exact-derivative cubic Hermite splines in log radius
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from tqdm import tqdm

from src.config.settings import settings
from src.exceptions import DomainError, InputError, NumericalError
from src.kernels import KernelSpec, RadialProfile, ensure_admissible, split_kernel
from src.mollification.mollifiers import AutocorrelationProfile, MollifierKind, MollifierSpec, autocorrelation
from src.mollification.quadrature import (
    compact_transfer,
    gaussian_origin_transfer,
    gaussian_transfer,
    origin_convolution,
    radial_convolution,
)

PARTS = ("total", "attractive", "repulsive")
GAUSSIAN_WINDOW = 12.0  # half window in units of sqrt(heat time)


class TabulationParams(BaseModel):
    """Grid and quadrature controls for build_mollified_kernel"""
    model_config = ConfigDict(frozen=True)

    n_tab: int = Field(default_factory=lambda: settings.n_tab, ge=16)
    r_min_factor: float = Field(default_factory=lambda: settings.r_min_factor, gt=0)
    r_max: float = Field(default_factory=lambda: settings.r_max, gt=0)
    quad_rtol: float = Field(default_factory=lambda: settings.quad_rtol, gt=0)
    max_refinements: int = Field(default_factory=lambda: settings.quad_max_refinements, ge=1)
    tail_factor: float = Field(default_factory=lambda: settings.tail_factor, gt=0)
    tail_rtol: float = Field(default_factory=lambda: settings.tail_rtol, gt=0)
    base_panels: int = Field(default=8, ge=1)
    angular_order: int = Field(default=32, ge=4)
    chunk_size: int = Field(default=256, ge=1)
    threads: int = Field(default_factory=lambda: settings.threads, ge=1)
    require_admissible: bool = True


@dataclass(frozen=True)
class _PartTable:
    """One tabulated radial part with its interpolation and extension rules"""
    label: str
    values: np.ndarray
    dvalues: np.ndarray
    origin_value: float
    exact: Optional[Tuple[Callable, Callable]] = None  # closed form valid at every radius
    tail: Optional[Tuple[Callable, Callable]] = None
    spline: Optional[CubicHermiteSpline] = None
    inner_coefficients: Tuple[float, float, float] = (0.0, 0.0, 0.0)


def _limited_log_slopes(s: np.ndarray, y: np.ndarray, dyds: np.ndarray) -> np.ndarray:
    """Fritsch-Carlson limiting of Hermite slopes so monotone cells stay monotone"""
    m = dyds.copy()
    secant = np.diff(y) / np.diff(s)
    n = len(y)
    for k in range(n - 1):
        if secant[k] == 0.0:
            m[k] = 0.0
            m[k + 1] = 0.0
    for k in range(1, n - 1):
        if secant[k - 1] * secant[k] < 0:
            m[k] = 0.0
    for k in range(n - 1):
        if secant[k] == 0.0:
            continue
        if m[k] * secant[k] < 0:
            m[k] = 0.0
        if m[k + 1] * secant[k] < 0:
            m[k + 1] = 0.0
        alpha = m[k] / secant[k]
        beta = m[k + 1] / secant[k]
        radius = alpha * alpha + beta * beta
        if radius > 9.0:
            tau = 3.0 / math.sqrt(radius)
            m[k] = tau * alpha * secant[k]
            m[k + 1] = tau * beta * secant[k]
    return m


@dataclass(frozen=True, eq=False)
class MollifiedKernel:
    """
    Tabulated regularized kernel K_eps with its radial derivative

    Attributes:
        base: Unmollified kernel
        mollifier: Unit-width mollifier profile (scaled by eps)
        eps: Regularization length
        radii: Log-spaced grid from r_min to r_max
        values, dvalues: K_eps and dK_eps/dr on the grid (attractive + repulsive)
        origin_value: K_eps(0)
        lambda_estimate: Sampled lower bound on the Hessian of K_eps (<= 0)
        tail_switch_radius: Beyond it the analytic tail is used
    """
    base: KernelSpec
    mollifier: MollifierSpec
    eps: float
    radii: np.ndarray
    values: np.ndarray
    dvalues: np.ndarray
    origin_value: float
    lambda_estimate: float
    tail_switch_radius: float
    attractive: _PartTable
    repulsive: _PartTable
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def r_min(self) -> float:
        return float(self.radii[0])

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def lambda_constant(self) -> float:
        """C with lambda_estimate = -C eps^-d"""
        return -self.lambda_estimate * self.eps ** self.d

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"r": self.radii, "K_eps": self.values, "dK_eps_dr": self.dvalues})


def _eval_part(mk: MollifiedKernel, part: _PartTable, r: np.ndarray, derivative: bool) -> np.ndarray:
    if part.exact is not None:
        fn = part.exact[1] if derivative else part.exact[0]
        return fn(r)
    out = np.empty_like(r)
    inner = r < mk.r_min
    outer = r > mk.tail_switch_radius
    middle = ~inner & ~outer

    if np.any(middle):
        rm = r[middle]
        s = np.log(rm)
        out[middle] = part.spline(s, 1) / rm if derivative else part.spline(s)
    if np.any(inner):
        c0, a, b = part.inner_coefficients
        x = r[inner] / mk.r_min
        out[inner] = (2 * a * x + 4 * b * x ** 3) / mk.r_min if derivative else c0 + a * x * x + b * x ** 4
    if np.any(outer):
        fn = part.tail[1] if derivative else part.tail[0]
        out[outer] = fn(r[outer])
    return out


def eval_mollified(mk: MollifiedKernel, r, derivative: bool = False, part: str = "total"):
    """
    Evaluate K_eps (or dK_eps/dr) at radius r

    Regimes: even polynomial below r_min (zero slope at 0), Hermite spline in
    log r up to the tail switch, analytic tail beyond. The derivative is the
    exact derivative of the interpolant.

    Args:
        mk: Tabulated kernel
        r: Radius or array of radii (>= 0)
        derivative: Return dK_eps/dr instead of K_eps
        part: 'total', 'attractive' or 'repulsive'
    """
    if part not in PARTS:
        raise DomainError(f"part must be one of {PARTS}, got {part!r}")
    scalar = np.ndim(r) == 0
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("radius must be non-negative")
    if part == "attractive":
        out = _eval_part(mk, mk.attractive, arr, derivative)
    elif part == "repulsive":
        out = _eval_part(mk, mk.repulsive, arr, derivative)
    else:
        out = _eval_part(mk, mk.attractive, arr, derivative) + _eval_part(mk, mk.repulsive, arr, derivative)
    return float(out[0]) if scalar else out.reshape(np.shape(r))


def _tail_functions(profile: RadialProfile, shift: float) -> Tuple[Callable, Callable]:
    """K + shift * Laplacian(K), the second-moment expansion of K * Phi"""
    if profile.is_zero:
        return (lambda r: np.zeros_like(r), lambda r: np.zeros_like(r))
    if profile.has_laplacian:
        return (lambda r: profile(r) + shift * profile.laplacian(r),
                lambda r: profile.grad(r) + shift * profile.laplacian_derivative(r))
    return (lambda r: profile(r), lambda r: profile.grad(r))


def _inner_coefficients(origin: float, value: float, slope: float, r_min: float) -> Tuple[float, float, float]:
    """c0 + a x^2 + b x^4 (x = r / r_min) matching origin, value and slope at r_min"""
    big_a = value - origin
    big_d = slope * r_min
    b = (big_d - 2.0 * big_a) / 2.0
    a = (4.0 * big_a - big_d) / 2.0
    return origin, a, b


class _Convolver:
    """K * Phi_eps for one kernel part, dispatching on the mollifier kind"""

    def __init__(self, phi: AutocorrelationProfile, params: TabulationParams):
        self.phi = phi
        self.params = params
        d = phi.d
        if phi.kind == MollifierKind.GAUSSIAN_HEAT:
            t = phi.heat_time
            self.half_width = GAUSSIAN_WINDOW * math.sqrt(t)
            self.transfer = lambda r, u: gaussian_transfer(r, u, t, d)
            self.origin_transfer = lambda u: gaussian_origin_transfer(u, t, d)
            self.inner = 1
            self.base_panels = params.base_panels
        else:
            support = phi.support_radius
            order = params.angular_order
            self.half_width = support
            self.transfer = lambda r, u: compact_transfer(phi.value, phi.derivative, support, r, u, d, order=order)
            self.origin_transfer = lambda u: compact_transfer(phi.value, phi.derivative, support, np.zeros_like(u), u, d, order=order)[0]
            self.inner = 1 if d == 1 else order
            self.base_panels = max(2, params.base_panels // 2)

    def at_radii(self, profile: RadialProfile, radii: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        p = self.params
        chunks = [radii[i:i + p.chunk_size] for i in range(0, len(radii), p.chunk_size)]

        def run(chunk):
            return radial_convolution(profile, chunk, self.transfer, self.half_width, rtol=p.quad_rtol,
                                      max_refinements=p.max_refinements, base_panels=self.base_panels,
                                      inner=self.inner)

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if p.threads > 1:
                with ThreadPoolExecutor(max_workers=p.threads) as pool:
                    results = list(tqdm(pool.map(run, chunks), total=len(chunks), desc=f"K_eps {profile.label}",
                                        disable=not settings.show_progress, leave=False))
            else:
                results = [run(c) for c in tqdm(chunks, desc=f"K_eps {profile.label}",
                                                disable=not settings.show_progress, leave=False)]
        if not results:
            return np.empty(0), np.empty(0)
        return np.concatenate([v for v, _ in results]), np.concatenate([dv for _, dv in results])

    def at_origin(self, profile: RadialProfile) -> float:
        p = self.params
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return origin_convolution(profile, self.origin_transfer, self.half_width, rtol=p.quad_rtol,
                                      max_refinements=p.max_refinements, base_panels=self.base_panels)


def _tabulate_part(profile: RadialProfile, radii: np.ndarray, switch_index: int, convolver: _Convolver,
                   shift: float, tail_rtol: float) -> Tuple[np.ndarray, np.ndarray, float, Tuple, int, float]:
    """
    Quadrature up to the tail switch, analytic tail beyond

    Returns values, dvalues, origin value, tail functions, the switch index in
    force and the measured tail mismatch at the switch.
    """
    tail = _tail_functions(profile, shift)
    if profile.is_zero:
        zeros = np.zeros_like(radii)
        return zeros, zeros.copy(), 0.0, tail, switch_index, 0.0

    values = np.empty_like(radii)
    dvalues = np.empty_like(radii)
    head = radii[:switch_index + 1]
    values[:switch_index + 1], dvalues[:switch_index + 1] = convolver.at_radii(profile, head)

    r_switch = radii[switch_index]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tail_value = float(tail[0](np.array([r_switch]))[0])
        tail_slope = float(tail[1](np.array([r_switch]))[0])
    mismatch = max(abs(values[switch_index] - tail_value) / max(1.0, abs(tail_value)),
                   abs(dvalues[switch_index] - tail_slope) / max(1.0, abs(tail_slope)))
    if mismatch > tail_rtol and switch_index < len(radii) - 1:
        logger.warning(f"Tail of {profile.label} misses quadrature by {mismatch:.3g} at r={r_switch:.4g}; "
                       f"tabulating the full grid")
        rest = radii[switch_index + 1:]
        values[switch_index + 1:], dvalues[switch_index + 1:] = convolver.at_radii(profile, rest)
        switch_index = len(radii) - 1
    else:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            values[switch_index + 1:] = tail[0](radii[switch_index + 1:])
            dvalues[switch_index + 1:] = tail[1](radii[switch_index + 1:])
    origin = convolver.at_origin(profile)
    return values, dvalues, origin, tail, switch_index, mismatch


def _finish_part(label: str, radii: np.ndarray, values: np.ndarray, dvalues: np.ndarray, origin: float,
                 switch_index: int, tail: Tuple) -> _PartTable:
    head = slice(0, switch_index + 1)
    s = np.log(radii[head])
    slopes = _limited_log_slopes(s, values[head], radii[head] * dvalues[head])
    spline = CubicHermiteSpline(s, values[head], slopes)
    inner = _inner_coefficients(origin, values[0], dvalues[0], radii[0])
    return _PartTable(label=label, values=values, dvalues=dvalues, origin_value=origin, tail=tail,
                      spline=spline, inner_coefficients=inner)


def _lambda_estimate(radii: np.ndarray, dvalues: np.ndarray) -> float:
    """min(0, min K'', min K'/r) sampled on the grid; K'/r at r_min stands in for the origin"""
    second = np.gradient(dvalues, radii)
    tangential = dvalues / radii
    return float(min(0.0, np.min(second), np.min(tangential)))


def build_mollified_kernel(k: KernelSpec, m: MollifierSpec, eps: float,
                           tab: Optional[TabulationParams] = None) -> MollifiedKernel:
    """
    Tabulate K_eps = K * Phi_eps

    Args:
        k: Kernel specification
        m: Unit-width mollifier profile; phi_eps = m scaled by eps
        eps: Regularization length (> 0)
        tab: Grid and quadrature controls

    Returns:
        MollifiedKernel

    Raises:
        KernelHypothesisError: kernel outside every supported regime
        InputError: mollifier not allowed for the kernel's regime
        TabulationError: quadrature did not converge
    """
    tab = tab or TabulationParams()
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")

    regime = None
    if tab.require_admissible:
        regime = ensure_admissible(k).regime
        if regime == "H" and m.kind != MollifierKind.COMPACT_BUMP:
            raise InputError(f"{k.label} satisfies only the general hypotheses; use a compact_bump mollifier")

    phi_eps = m.scaled(eps)
    phi = autocorrelation(phi_eps, k.d)
    convolver = _Convolver(phi, tab)
    shift = phi.second_moment / (2.0 * k.d)

    r_min = tab.r_min_factor * eps
    if not tab.r_max > r_min:
        raise InputError(f"r_max={tab.r_max} must exceed r_min={r_min}")
    radii = np.geomspace(r_min, tab.r_max, tab.n_tab)
    switch_index = int(min(np.searchsorted(radii, tab.tail_factor * eps), len(radii) - 1))

    attractive_profile, repulsive_profile = split_kernel(k)
    logger.info(f"Building K_eps for {k.label}, {m.kind.value} eps={eps:g}, n_tab={tab.n_tab}")

    tables = {}
    mismatches = {}
    switches = {}
    if k.has_quadratic_attraction:
        half_m2 = 0.5 * phi.second_moment
        exact = (lambda r: 0.5 * r * r + half_m2, lambda r: np.array(r, dtype=float, copy=True))
        tables["attractive"] = _PartTable(label=attractive_profile.label, values=0.5 * radii ** 2 + half_m2,
                                          dvalues=radii.copy(), origin_value=half_m2, exact=exact)
        mismatches["attractive"] = 0.0
        switches["attractive"] = len(radii) - 1
    for name, profile in (("attractive", attractive_profile), ("repulsive", repulsive_profile)):
        if name in tables:
            continue
        values, dvalues, origin, tail, idx, mismatch = _tabulate_part(
            profile, radii, switch_index, convolver, shift, tab.tail_rtol)
        switches[name] = idx
        mismatches[name] = mismatch
        tables[name] = (values, dvalues, origin, tail)

    # one switch radius for both parts
    profiles = {"attractive": attractive_profile, "repulsive": repulsive_profile}
    final_switch = switches["repulsive"] if k.has_quadratic_attraction else max(switches.values())
    for name, profile in profiles.items():
        if isinstance(tables[name], _PartTable):
            continue
        values, dvalues, origin, tail = tables[name]
        if switches[name] < final_switch and not profile.is_zero:
            extra = slice(switches[name] + 1, final_switch + 1)
            values[extra], dvalues[extra] = convolver.at_radii(profile, radii[extra])
        tables[name] = _finish_part(profile.label, radii, values, dvalues, origin, final_switch, tail)

    attractive, repulsive = tables["attractive"], tables["repulsive"]
    values = attractive.values + repulsive.values
    dvalues = attractive.dvalues + repulsive.dvalues
    origin_value = attractive.origin_value + repulsive.origin_value
    if not (np.all(np.isfinite(values)) and np.isfinite(origin_value)):
        raise NumericalError(f"non-finite K_eps values for {k.label} at eps={eps:g}")

    lam = _lambda_estimate(radii, dvalues)
    switch_radius = float(radii[final_switch])
    metadata = {
        "kernel": k.label,
        "family": k.family.value,
        "d": k.d,
        "p": k.p if isinstance(k.p, str) else float(k.p),
        "q": float(k.q),
        "regime": regime,
        "mollifier": m.kind.value,
        "mollifier_width": float(m.width),
        "eps": float(eps),
        "n_tab": tab.n_tab,
        "r_min": float(r_min),
        "r_max": float(tab.r_max),
        "quad_rtol": tab.quad_rtol,
        "max_refinements": tab.max_refinements,
        "tail_factor": tab.tail_factor,
        "tail_switch_radius": switch_radius,
        "tail_mismatch": {name: float(v) for name, v in mismatches.items()},
        "second_moment_phi_eps": float(phi_eps.second_moment(k.d)),
        "origin_value": float(origin_value),
        "lambda_estimate": lam,
        "lambda_constant": -lam * eps ** k.d,
        "code_version": settings.code_version,
    }
    mk = MollifiedKernel(base=k, mollifier=m, eps=float(eps), radii=radii, values=values, dvalues=dvalues,
                         origin_value=float(origin_value), lambda_estimate=lam, tail_switch_radius=switch_radius,
                         attractive=attractive, repulsive=repulsive, metadata=metadata)
    logger.info(f"✅ Built K_eps: K_eps(0)={origin_value:.10g}, lambda_eps={lam:.4g}, tail switch r={switch_radius:.4g}")
    return mk


def critical_radius(mk: MollifiedKernel, lo: Optional[float] = None, hi: Optional[float] = None) -> float:
    """
    Positive root r* of dK_eps/dr located on the tabulated derivative

    Brackets the first sign change of dvalues from negative to positive and
    refines it with Brent's method on the interpolant.
    """
    dv = mk.dvalues
    radii = mk.radii
    if lo is None or hi is None:
        change = np.flatnonzero((dv[:-1] < 0) & (dv[1:] >= 0))
        if change.size == 0:
            raise NumericalError("dK_eps/dr has no sign change on the grid")
        lo, hi = float(radii[change[0]]), float(radii[change[0] + 1])
    return float(brentq(lambda r: eval_mollified(mk, r, derivative=True), lo, hi, xtol=1e-15, rtol=4e-16, maxiter=200))
