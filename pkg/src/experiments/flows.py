"""
Flow and minimizer studies
Convergence of regularized minimizers, flattening of the two-dimensional flow and energy dissipation
"""
import math
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from src.config.settings import settings
from src.dynamics import FlowConfig, Scheme, continuation_minimize, integrate_flow
from src.energy import energy_density_reference
from src.exceptions import InputError
from src.experiments.common import BUMP, GAUSSIAN, KernelLadder, sorted_schedule
from src.experiments.report import AcceptanceThresholds, CriterionResult, StudyReport, strictly_monotone
from src.kernels import KernelSpec
from src.measures import (
    DensitySpec,
    InitMode,
    ParticleMeasure,
    center_of_mass,
    init_particles,
    support_radius,
)
from src.mollification import MollifierSpec, TabulationParams
from src.transport import w2_exact

N_ANNULI = 10
INNER_ANNULI = 8


def study_minimizer_convergence(k: KernelSpec, eps_schedule: Sequence[float], n: int, seed: int = 0,
                                tol: float = 1e-6, max_iter: int = 2000, m: MollifierSpec = GAUSSIAN,
                                tab: Optional[TabulationParams] = None, target: Optional[DensitySpec] = None,
                                reference_energy: Optional[float] = None,
                                thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    """
    Continuation minimization compared with a known minimizing density

    The seed cloud is n uniform samples of [-1/2, 1/2]^d. Each minimizer is
    compared with target (default: the unit ball) by energy, by W2 to the
    grid-weighted discretization of target, and by support radius.
    """
    thresholds = thresholds or AcceptanceThresholds()
    d = k.d
    target = target or DensitySpec.uniform_ball(d, 1.0)
    if reference_energy is None:
        method = "radial" if target.is_radial else "grid"
        reference_energy = energy_density_reference(target, k, method=method)
    schedule = sorted_schedule(eps_schedule)

    box = DensitySpec.uniform_box(np.tile([-0.5, 0.5], (d, 1)))
    mu0 = init_particles(box, n, InitMode.MONTE_CARLO, seed=seed)
    reference = init_particles(target, n, InitMode.GRID_WEIGHTED)
    path = continuation_minimize(mu0, k, m, schedule, tol=tol, max_iter=max_iter, tab=tab)

    rows = []
    for step in path:
        mu = step.minimizer
        centered = mu.translate(-center_of_mass(mu))
        rows.append({"eps": step.eps, "E_eps": step.energy,
                     "energy_gap_rel": abs(step.energy - reference_energy) / abs(reference_energy),
                     "w2": w2_exact(centered, reference).distance, "support_radius": support_radius(mu),
                     "iterations": step.iterations})
    metrics = pd.DataFrame(rows, columns=["eps", "E_eps", "energy_gap_rel", "w2", "support_radius", "iterations"])
    last = metrics.iloc[-1] if len(metrics) else None

    report = StudyReport(
        name="minimizers",
        parameters={"kernel": k.label, "eps": schedule, "N": n, "seed": seed, "tol": tol,
                    "target": target.kind.value, "reference_energy": reference_energy,
                    "reference_particles": reference.n},
        metrics=metrics,
    )
    report.criteria.append(CriterionResult.check(
        "continuation_complete", len(path), "==", len(schedule), "eps values minimized before any failure"))
    report.criteria.append(CriterionResult.check(
        "minimizer_energy", math.nan if last is None else last["energy_gap_rel"], "<=",
        thresholds.minimizer_energy_rel, "relative gap to the reference energy at the smallest eps"))
    report.criteria.append(CriterionResult.check(
        "w2_decreasing", strictly_monotone(metrics["w2"]) if len(metrics) > 1 else math.nan, "<", 0.0,
        "largest increase of W2 to the discretized target along the schedule"))
    report.criteria.append(CriterionResult.check(
        "support_radius", math.nan if last is None else abs(last["support_radius"] - target.radius) / target.radius,
        "<=", thresholds.support_radius_rel, f"relative deviation from radius {target.radius:g}"))
    return report


def annular_profile(mu: ParticleMeasure, n_annuli: int = N_ANNULI) -> pd.DataFrame:
    """
    Mass density on equal-area annuli about the center of mass (d=2)

    The outer radius is the largest particle distance, so every annulus has
    area pi R^2 / n_annuli and a uniform disk gives equal densities.
    """
    com = center_of_mass(mu)
    r = np.linalg.norm(mu.positions - com, axis=1)
    outer = float(r.max())
    edges = outer * np.sqrt(np.arange(n_annuli + 1) / n_annuli)
    mass, _ = np.histogram(r, bins=edges, weights=mu.weights)
    area = math.pi * outer * outer / n_annuli
    return pd.DataFrame({"r_inner": edges[:-1], "r_outer": edges[1:], "mass": mass, "density": mass / area})


def flatness(profile: pd.DataFrame) -> float:
    """max |density - mean| / mean over the annuli"""
    density = profile["density"].to_numpy()
    mean = density.mean()
    return float(np.max(np.abs(density - mean)) / mean)


def study_figure1(n: int, eps_list: Sequence[float], t_end: float = 10.0, dt: float = 1e-2,
                  steady_tol: Optional[float] = 1e-4, k: Optional[KernelSpec] = None, m: MollifierSpec = BUMP,
                  tab: Optional[TabulationParams] = None,
                  thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    """
    Two-dimensional flow from C (1 - |x|^2)_+^2 under log repulsion and quadratic attraction

    The steady state is the uniform disk of radius 1 with density 1/pi.
    Log repulsion satisfies only the general hypotheses, so the mollifier
    must have compact support.
    """
    thresholds = thresholds or AcceptanceThresholds()
    k = k or KernelSpec.power_law(2, "log", 2.0)
    if k.d != 2:
        raise InputError(f"figure1 study runs in d=2, got d={k.d}")
    rho = DensitySpec.figure1_polynomial(2)
    mu0 = init_particles(rho, n, InitMode.GRID_WEIGHTED)
    ladder = KernelLadder(k, m, tab)
    schedule = sorted_schedule(eps_list)
    cfg = FlowConfig(scheme=Scheme.RK4, dt=dt, t_end=t_end, trace_every=50, steady_tol=steady_tol)

    rows = []
    for eps in tqdm(schedule, desc="figure1", disable=not settings.show_progress, leave=False):
        mu, trace = integrate_flow(mu0, ladder(eps), cfg)
        profile = annular_profile(mu)
        density = profile["density"].to_numpy()
        row = {"eps": eps, "flatness": flatness(profile), "support_radius": support_radius(mu),
               "inner_density": float(density[:INNER_ANNULI].mean()), "mass": float(mu.weights.sum()),
               "t_final": trace.info["t_final"], "status": trace.info["status"]}
        row.update({f"density_{i + 1}": value for i, value in enumerate(density)})
        rows.append(row)
        logger.info(f"✅ figure1 eps={eps:g}: flatness={row['flatness']:.4f}, radius={row['support_radius']:.4f}")
    metrics = pd.DataFrame(rows)
    last = metrics.iloc[-1]

    report = StudyReport(
        name="figure1",
        parameters={"kernel": k.label, "N": mu0.n, "eps": schedule, "t_end": t_end, "dt": dt,
                    "steady_tol": steady_tol, "initial_normalization": rho.normalization},
        metrics=metrics,
    )
    report.criteria.append(CriterionResult.check(
        "flatness_improving", strictly_monotone(metrics["flatness"]) if len(metrics) > 1 else math.nan, "<", 0.0,
        "largest increase of annular flatness as eps decreases"))
    report.criteria.append(CriterionResult.check(
        "inner_density", abs(last["inner_density"] * math.pi - 1.0), "<=", thresholds.figure1_density_rel,
        f"relative deviation from 1/pi over the inner {INNER_ANNULI} annuli at the smallest eps"))
    report.criteria.append(CriterionResult.check(
        "support_radius", abs(last["support_radius"] - 1.0), "<=", thresholds.figure1_radius_rel,
        "deviation of the support radius from 1 at the smallest eps"))
    return report


def study_dissipation(mu: ParticleMeasure, k: KernelSpec, eps: float, t_end: float = 0.5, dt: float = 1e-3,
                      scheme: Scheme = Scheme.RK4, m: MollifierSpec = GAUSSIAN, tab: Optional[TabulationParams] = None,
                      thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    """
    dE/dt = -slope^2 along the flow, checked per step

    Each interval compares the energy difference quotient with the
    trapezoidal average of slope^2 at its ends. Intervals whose average
    slope^2 is below dissipation_min_slope2 are reported but not judged.
    """
    thresholds = thresholds or AcceptanceThresholds()
    mk = KernelLadder(k, m, tab)(eps)
    cfg = FlowConfig(scheme=scheme, dt=dt, t_end=t_end, trace_every=1)
    _, trace = integrate_flow(mu, mk, cfg)

    rows = []
    for a, b in zip(trace.rows, trace.rows[1:]):
        rate = (b.energy - a.energy) / (b.t - a.t)
        average = 0.5 * (a.slope2 + b.slope2)
        judged = average > thresholds.dissipation_min_slope2
        rows.append({"t": 0.5 * (a.t + b.t), "dE_dt": rate, "slope2": average,
                     "rel_error": abs(rate + average) / average if average > 0 else math.nan, "judged": judged})
    metrics = pd.DataFrame(rows)
    judged = metrics[metrics["judged"]] if len(metrics) else metrics
    worst = float(judged["rel_error"].max()) if len(judged) else math.nan

    report = StudyReport(
        name="dissipation",
        parameters={"kernel": k.label, "eps": eps, "N": mu.n, "scheme": scheme.value, "dt": dt, "t_end": t_end},
        metrics=metrics,
    )
    report.criteria.append(CriterionResult.check(
        "energy_dissipation", worst, "<=", thresholds.dissipation_rel,
        f"max |dE/dt + slope^2| / slope^2 over intervals with slope^2 > {thresholds.dissipation_min_slope2:g}"))
    return report
