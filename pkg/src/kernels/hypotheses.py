"""
Kernel hypothesis checker
Numeric witnesses for the power-law regime (E1)-(E2), the general hypotheses (H1)-(H5)
and the Morse parameter regime
"""
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Dict, List, Optional

import numpy as np
from loguru import logger

from src.exceptions import KernelHypothesisError
from src.kernels.profiles import RadialProfile
from src.kernels.spec import KernelFamily, KernelSpec, radial_derivative, spherical_mean, split_kernel

HYPOTHESES = ("E1", "E2", "H1", "H2", "H3", "H4", "H5", "MORSE")
SPHERE_RTOL = 1e-3  # quadrature slack of spherical_mean near the singularity
LAPLACIAN_RTOL = 1e-6


class HypothesisStatus(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    NOT_CHECKED = "not-checked"
    NOT_APPLICABLE = "not-applicable"


@dataclass
class HypothesisResult:
    """Outcome of a single hypothesis with the witness that decided it"""
    name: str
    status: HypothesisStatus
    witness: str


@dataclass
class HypothesisReport:
    """Per-hypothesis verdicts for one kernel"""
    kernel: str
    results: Dict[str, HypothesisResult] = field(default_factory=dict)

    def __getitem__(self, name: str) -> HypothesisStatus:
        return self.results[name].status

    def _all(self, names) -> bool:
        return all(self.results[n].status == HypothesisStatus.SATISFIED for n in names)

    @property
    def satisfies_power_law(self) -> bool:
        return self._all(("E1", "E2"))

    @property
    def satisfies_general(self) -> bool:
        return self._all(("H1", "H2", "H3", "H4", "H5"))

    @property
    def regime(self) -> Optional[str]:
        """'E', 'H', 'morse' or None"""
        if self.satisfies_power_law:
            return "E"
        if self.satisfies_general:
            return "H"
        if self["MORSE"] == HypothesisStatus.SATISFIED:
            return "morse"
        return None

    def violations(self) -> List[str]:
        return [r.witness for r in self.results.values() if r.status == HypothesisStatus.VIOLATED]

    def summary(self) -> str:
        lines = [f"Hypotheses for {self.kernel}"]
        for name in HYPOTHESES:
            r = self.results[name]
            lines.append(f"  ({name}) {r.status.value}: {r.witness}")
        return "\n".join(lines)


def _singularity_exponent(spec: KernelSpec) -> float:
    if spec.family == KernelFamily.POWER_LAW:
        if spec.is_log:
            return 0.0
        return min(spec.p, 0.0) if spec.q > 0 else min(spec.p, spec.q, 0.0)
    if spec.family == KernelFamily.GENERAL_RADIAL:
        return spec.general.singularity_exponent
    return 0.0


def _growth_exponent(spec: KernelSpec) -> float:
    """Exponent g with |K| ~ r**g at infinity (0 for bounded or logarithmic tails)"""
    if spec.family == KernelFamily.POWER_LAW:
        exponents = [spec.q] if spec.is_log else [spec.q, spec.p]
        return max(max(exponents), 0.0)
    if spec.family == KernelFamily.GENERAL_RADIAL:
        return spec.general.growth_exponent
    return 0.0


def _annulus_lattice(d: int, R: float, per_axis: int = 33) -> np.ndarray:
    """Deterministic lattice points with R < |x| < 4R"""
    axis = np.linspace(-4.0 * R, 4.0 * R, per_axis)
    points = np.array(list(product(axis, repeat=d)))
    radius = np.linalg.norm(points, axis=1)
    return points[(radius > R) & (radius < 4.0 * R)]


def _sampled_laplacian(profile: RadialProfile, r: np.ndarray, d: int) -> np.ndarray:
    if profile.laplacian is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            return profile.laplacian(r)
    h = 1e-3 * r
    f = profile
    second = (-f(r + 2 * h) + 16 * f(r + h) - 30 * f(r) + 16 * f(r - h) - f(r - 2 * h)) / (12 * h ** 2)
    return second + (d - 1) * profile.grad(r) / r


def _check_e1(spec: KernelSpec) -> HypothesisResult:
    if spec.family != KernelFamily.POWER_LAW or spec.is_log:
        return HypothesisResult("E1", HypothesisStatus.NOT_APPLICABLE, "kernel is not of the form r^q/q - r^p/p")
    return HypothesisResult("E1", HypothesisStatus.SATISFIED, f"K = r^{spec.q:g}/{spec.q:g} - r^{spec.p:g}/{spec.p:g}")


def _check_e2(spec: KernelSpec) -> HypothesisResult:
    if spec.family != KernelFamily.POWER_LAW or spec.is_log:
        return HypothesisResult("E2", HypothesisStatus.NOT_APPLICABLE, "no power-law exponents")
    p, q, d = spec.p, spec.q, spec.d
    if q <= 0:
        msg = f"(E2) requires q > 0, got q={q:g}"
    elif q > 2:
        msg = f"(E2) requires q <= 2, got q={q:g}"
    elif p >= 0:
        msg = f"(E2) requires p < 0, got p={p:g}"
    elif p < 2 - d:
        msg = f"(E2) requires p >= 2-d = {2 - d}, got p={p:g}"
    else:
        return HypothesisResult("E2", HypothesisStatus.SATISFIED, f"2-d = {2 - d} <= p={p:g} < 0 < q={q:g} <= 2")
    return HypothesisResult("E2", HypothesisStatus.VIOLATED, msg)


def _check_h2(spec: KernelSpec) -> HypothesisResult:
    s, g, d = _singularity_exponent(spec), _growth_exponent(spec), spec.d
    if s <= -d:
        return HypothesisResult("H2", HypothesisStatus.VIOLATED,
                                f"(H2) requires local integrability, singularity r^{s:g} with s <= -d = {-d}")
    R = spec.hypothesis_radius
    r = np.geomspace(R, 64.0 * R, 200)
    slope = np.abs(np.asarray(radial_derivative(spec, r))) / (1.0 + r)
    if not np.all(np.isfinite(slope)):
        return HypothesisResult("H2", HypothesisStatus.VIOLATED, "(H2) requires K in C^1 outside B_R")
    if g > 2:
        return HypothesisResult("H2", HypothesisStatus.VIOLATED,
                                f"(H2) requires |grad K| <= C(1+|x|), growth exponent {g:g} > 2")
    return HypothesisResult("H2", HypothesisStatus.SATISFIED,
                            f"s={s:g} > -d={-d}; sup |K'|/(1+r) on [R, 64R] = {slope.max():.4g}")


def _check_h3(spec: KernelSpec) -> HypothesisResult:
    R = spec.hypothesis_radius
    points = _annulus_lattice(spec.d, R)
    radius = np.linalg.norm(points, axis=1)
    dk = np.asarray(radial_derivative(spec, radius))
    # sign(x_i) * dK/dx_i = K'(r) |x_i| / r, so coordinate monotonicity reduces to K' > 0
    coordinate_slopes = (dk / radius)[:, None] * np.abs(points)
    nonzero = np.abs(points) > 0
    worst = float(coordinate_slopes[nonzero].min())
    if worst <= 0:
        return HypothesisResult("H3", HypothesisStatus.VIOLATED,
                                f"(H3) requires K increasing in each coordinate for |x| > R={R:g}; "
                                f"min sign(x_i) dK/dx_i = {worst:.4g} on {len(points)} lattice points")
    g = _growth_exponent(spec)
    growing = g > 0 or spec.is_log
    if not growing:
        return HypothesisResult("H3", HypothesisStatus.VIOLATED, "(H3) requires K(x) -> +inf as |x| -> inf")
    return HypothesisResult("H3", HypothesisStatus.SATISFIED,
                            f"min sign(x_i) dK/dx_i = {worst:.4g} > 0 on {len(points)} lattice points")


def _check_h4(spec: KernelSpec) -> HypothesisResult:
    attractive, repulsive = split_kernel(spec)
    d = spec.d
    r = np.geomspace(1e-2, 1e2, 120)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        att_values = attractive(np.concatenate([[0.0], r]))
    if not np.all(np.isfinite(att_values)):
        return HypothesisResult("H4", HypothesisStatus.VIOLATED, "(H4) requires a continuous attractive part")
    lap = _sampled_laplacian(repulsive, r, d)
    scale = np.abs(repulsive.grad(r)) / r + np.abs(repulsive(r)) / r ** 2
    excess = lap / np.maximum(scale, 1e-300)
    if np.any(excess > LAPLACIAN_RTOL):
        i = int(np.argmax(excess))
        return HypothesisResult("H4", HypothesisStatus.VIOLATED,
                                f"(H4) requires superharmonic repulsion; Laplacian {lap[i]:.4g} > 0 at r={r[i]:.4g}")
    # spherical mean witness at a few points away from the singularity; x on the lattice axis
    worst = -np.inf
    for radius, rho in ((1.0, 0.5), (2.0, 1.5), (0.3, 0.2)):
        x = np.zeros(d)
        x[-1] = radius
        centre = float(repulsive(radius))
        gap = spherical_mean(repulsive, x, rho, d) - centre
        if gap > SPHERE_RTOL * abs(centre) + 1e-12:
            return HypothesisResult("H4", HypothesisStatus.VIOLATED,
                                    f"(H4) requires superharmonic repulsion; sphere mean exceeds K^r by {gap:.3g} "
                                    f"at |x|={radius:g}, rho={rho:g}")
        worst = max(worst, gap)
    return HypothesisResult("H4", HypothesisStatus.SATISFIED,
                            f"max scaled Laplacian {excess.max():.3g} <= 0; max(sphere mean - K^r) = {worst:.3g}")


def _check_h5(spec: KernelSpec) -> HypothesisResult:
    g = _growth_exponent(spec)
    if g > 2:
        return HypothesisResult("H5", HypothesisStatus.VIOLATED, f"(H5) requires at most quadratic growth, got r^{g:g}")
    attractive, repulsive = split_kernel(spec)
    r = np.geomspace(spec.hypothesis_radius, 1e3 * spec.hypothesis_radius, 100)
    ratio = (np.abs(attractive(r)) + np.abs(repulsive(r))) / (1.0 + r ** 2)
    return HypothesisResult("H5", HypothesisStatus.SATISFIED, f"sup (|K^a|+|K^r|)/(1+r^2) = {ratio.max():.4g}")


def _check_morse(spec: KernelSpec) -> HypothesisResult:
    if spec.family != KernelFamily.MORSE:
        return HypothesisResult("MORSE", HypothesisStatus.NOT_APPLICABLE, "not a Morse kernel")
    m, d = spec.morse, spec.d
    if not 0 < m.l_r < m.l_a:
        msg = f"Morse requires 0 < l_r < l_a, got l_r={m.l_r:g}, l_a={m.l_a:g}"
    elif not 0 < m.c_a < m.c_r:
        msg = f"Morse requires 0 < C_a < C_r, got C_a={m.c_a:g}, C_r={m.c_r:g}"
    elif not m.c_r / m.c_a < (m.l_r / m.l_a) ** (-d):
        msg = f"Morse requires C_r/C_a < (l_r/l_a)^-d = {(m.l_r / m.l_a) ** (-d):.4g}"
    else:
        return HypothesisResult("MORSE", HypothesisStatus.SATISFIED,
                                f"C_r/C_a = {m.c_r / m.c_a:.4g} < {(m.l_r / m.l_a) ** (-d):.4g}")
    return HypothesisResult("MORSE", HypothesisStatus.VIOLATED, msg)


def check_hypotheses(spec: KernelSpec) -> HypothesisReport:
    """
    Evaluate every hypothesis for a kernel

    Args:
        spec: Kernel specification

    Returns:
        HypothesisReport; violations are reported, never raised
    """
    report = HypothesisReport(kernel=spec.label)
    report.results["E1"] = _check_e1(spec)
    report.results["E2"] = _check_e2(spec)
    report.results["H1"] = HypothesisResult("H1", HypothesisStatus.SATISFIED, "radial profile, K(x) = K(-x) exactly")
    for name, check in (("H2", _check_h2), ("H3", _check_h3), ("H4", _check_h4), ("H5", _check_h5)):
        try:
            report.results[name] = check(spec)
        except Exception as e:
            logger.warning(f"({name}) could not be checked for {spec.label}: {e}")
            report.results[name] = HypothesisResult(name, HypothesisStatus.NOT_CHECKED, str(e))
    report.results["MORSE"] = _check_morse(spec)
    logger.debug(report.summary())
    return report


def ensure_admissible(spec: KernelSpec) -> HypothesisReport:
    """Raise KernelHypothesisError unless the kernel sits in a supported regime"""
    report = check_hypotheses(spec)
    if report.regime is None:
        violations = report.violations()
        logger.error(f"Kernel {spec.label} rejected: {'; '.join(violations)}")
        raise KernelHypothesisError(violations)
    return report
