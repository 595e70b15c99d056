"""
Variational studies
Repulsive monotonicity, the mollified-energy identity, recovery sequences, liminf checks,
slope scaling and lambda-convexity along Wasserstein geodesics
"""
import math
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from src.config.settings import settings
from src.energy import DiagonalPolicy, energy_density_reference, energy_particles, metric_slope
from src.exceptions import InputError
from src.experiments.common import GAUSSIAN, KernelLadder, fitted_exponent, paired_energy, sorted_schedule
from src.experiments.report import AcceptanceThresholds, CriterionResult, StudyReport, strictly_monotone
from src.kernels import KernelSpec
from src.measures import DensitySpec, InitMode, ParticleMeasure, init_particles, mollify_measure
from src.mollification import MollifierKind, MollifierSpec, TabulationParams
from src.transport import displacement_interpolation, w2_exact


def _require_heat(m: MollifierSpec, study: str):
    if m.kind != MollifierKind.GAUSSIAN_HEAT:
        raise InputError(f"{study} needs the Gaussian heat mollifier")


def study_monotonicity(mu: ParticleMeasure, k: KernelSpec, eps_list: Sequence[float], m: MollifierSpec = GAUSSIAN,
                       tab: Optional[TabulationParams] = None,
                       thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    """E^r_eps(mu) must not decrease as eps decreases (heat mollifier)"""
    _require_heat(m, "monotonicity")
    thresholds = thresholds or AcceptanceThresholds()
    ladder = KernelLadder(k, m, tab)
    rows = []
    for eps in tqdm(sorted_schedule(eps_list), desc="monotonicity", disable=not settings.show_progress, leave=False):
        mk = ladder(eps)
        b = energy_particles(mu, mk, DiagonalPolicy.INCLUDE)
        rows.append({"eps": eps, "Er": b.repulsive, "Ea": b.attractive, "E": b.total,
                     "Kr_eps_0": mk.repulsive.origin_value})
    metrics = pd.DataFrame(rows)
    er = metrics["Er"].to_numpy()
    drops = [(a - b) / max(abs(a), 1e-300) for a, b in zip(er, er[1:])]
    worst = max(drops) if drops else -math.inf
    report = StudyReport(
        name="monotonicity",
        parameters={"kernel": k.label, "mollifier": m.kind.value, "N": mu.n, "eps": list(metrics["eps"])},
        metrics=metrics,
    )
    report.criteria.append(CriterionResult.check(
        "repulsive_energy_monotone", worst, "<=", thresholds.monotonicity_rel_slack,
        "largest relative decrease of E^r_eps as eps decreases"))
    return report


def study_energy_identity(mu: ParticleMeasure, k: KernelSpec, eps: float, seeds: Sequence[int] = tuple(range(20)),
                          n_samples: int = 100_000, m: MollifierSpec = GAUSSIAN,
                          tab: Optional[TabulationParams] = None,
                          thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    """
    E_eps(mu) with the diagonal against a paired Monte Carlo estimate of E(mu * phi_eps)

    Each seed draws 2 n_samples points of mu * phi_eps and averages K over
    independent pairs.
    """
    thresholds = thresholds or AcceptanceThresholds()
    mk = KernelLadder(k, m, tab)(eps)
    exact = energy_particles(mu, mk, DiagonalPolicy.INCLUDE).total
    rows = []
    for seed in tqdm(list(seeds), desc="identity", disable=not settings.show_progress, leave=False):
        rng = np.random.default_rng(seed)
        cloud = mollify_measure(mu, m, eps, n_samples=2 * n_samples, rng=rng).positions
        estimate, se = paired_energy(k, cloud[:n_samples], cloud[n_samples:])["total"]
        z = abs(estimate - exact) / se
        rows.append({"seed": seed, "E_mc": estimate, "se": se, "E_eps": exact, "z": z,
                     "passed": bool(z <= thresholds.identity_sigmas)})
    metrics = pd.DataFrame(rows)
    fraction = float(metrics["passed"].mean()) if len(metrics) else math.nan
    report = StudyReport(
        name="identity",
        parameters={"kernel": k.label, "mollifier": m.kind.value, "eps": eps, "N": mu.n,
                    "n_samples": n_samples, "seeds": list(seeds)},
        metrics=metrics,
    )
    report.criteria.append(CriterionResult.check(
        "identity_pass_fraction", fraction, ">=", thresholds.identity_min_pass_fraction,
        f"seeds with |E_mc - E_eps| <= {thresholds.identity_sigmas:g} standard errors"))
    return report


def _reference_energy(rho: DensitySpec, k: KernelSpec) -> float:
    if rho.is_radial:
        return energy_density_reference(rho, k, resolution=64, method="radial")
    return energy_density_reference(rho, k, resolution=48, method="grid")


def study_recovery(rho: DensitySpec, k: KernelSpec, eps_list: Sequence[float], n_samples: int = 200_000,
                   seed: int = 0, reference: Optional[float] = None,
                   thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    """
    Gap |E_eps(nu_eps) - E(rho)| for nu_eps = rho * psi_delta with heat mollifiers

    Two sequences share one pool of samples: delta = eps^(1/2d) as in the
    recovery construction (gap must decrease along the schedule) and the
    matched delta = eps (final gap must be under threshold). Both Gaussians
    combine into one normal perturbation of variance 2(delta^2 + eps^2) per
    coordinate. For q = 2 and radial rho the attractive part is exact,
    M2(rho) + d * variance, and the Monte Carlo attractive mean is checked
    against it.
    """
    thresholds = thresholds or AcceptanceThresholds()
    d = k.d
    if rho.d != d:
        raise InputError(f"density dimension {rho.d} differs from kernel dimension {d}")
    reference = _reference_energy(rho, k) if reference is None else float(reference)
    exact_attractive = k.has_quadratic_attraction and rho.is_radial
    base_m2 = rho.second_moment() if exact_attractive else math.nan

    pool = init_particles(rho, 2 * n_samples, InitMode.MONTE_CARLO, seed=seed).positions
    noise = np.random.default_rng(seed + 1).standard_normal(pool.shape)
    x_base, y_base = pool[:n_samples], pool[n_samples:]
    x_noise, y_noise = noise[:n_samples], noise[n_samples:]

    rows = []
    sequences = {"recovery": lambda e: e ** (1.0 / (2.0 * d)), "matched": lambda e: e}
    for name, delta_of in sequences.items():
        for eps in sorted_schedule(eps_list):
            delta = delta_of(eps)
            variance = 2.0 * (delta * delta + eps * eps)
            s = math.sqrt(variance)
            est = paired_energy(k, x_base + s * x_noise, y_base + s * y_noise)
            attractive_mc, attractive_se = est["attractive"]
            if exact_attractive:
                attractive = base_m2 + d * variance
                energy = attractive + est["repulsive"][0]
                se = est["repulsive"][1]
                z = abs(attractive_mc - attractive) / attractive_se
            else:
                attractive = math.nan
                energy, se = est["total"]
                z = math.nan
            rows.append({"eps": eps, "sequence": name, "delta": delta, "E_eps_nu": energy, "se": se,
                         "gap": abs(energy - reference), "Ea_mc": attractive_mc, "Ea_exact": attractive,
                         "Ea_z": z})
    metrics = pd.DataFrame(rows)
    recovery = metrics[metrics["sequence"] == "recovery"]
    matched = metrics[metrics["sequence"] == "matched"]

    report = StudyReport(
        name="recovery",
        parameters={"density": rho.kind.value, "kernel": k.label, "eps": sorted_schedule(eps_list),
                    "n_samples": n_samples, "seed": seed, "reference_energy": reference},
        metrics=metrics,
    )
    report.criteria.append(CriterionResult.check(
        "recovery_gap_decreasing", strictly_monotone(recovery["gap"]), "<", 0.0,
        "largest increase of the gap along the schedule, delta = eps^(1/2d)"))
    final_gap = float(matched["gap"].iloc[-1]) / abs(reference) if len(matched) else math.nan
    report.criteria.append(CriterionResult.check(
        "matched_final_gap", final_gap, "<=", thresholds.recovery_final_gap_rel,
        "relative gap at the smallest eps, delta = eps"))
    if exact_attractive:
        report.criteria.append(CriterionResult.check(
            "attractive_moment_form", float(metrics["Ea_z"].max()), "<=", thresholds.identity_sigmas,
            "largest z-score of the Monte Carlo attractive energy against M2 + d * variance"))
    report.notes.append("With delta = eps^(1/2d) the smoothing variance decays like eps^(1/d), so the "
                        "final-gap threshold is checked on the matched sequence.")
    return report


def study_liminf(mu_target: ParticleMeasure, k: KernelSpec, eps_list: Sequence[float], n_seeds: int = 50,
                 jitter: float = 1e-3, seed: int = 0, m: MollifierSpec = GAUSSIAN,
                 tab: Optional[TabulationParams] = None,
                 thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    """
    E_eps(mu_eps) against the off-diagonal energy of mu_target

    mu_eps jitters every particle by jitter * eps standard normal noise. The
    inequality is checked at the smallest eps; larger eps are reported only.
    """
    thresholds = thresholds or AcceptanceThresholds()
    ladder = KernelLadder(k, m, tab)
    target = energy_particles(mu_target, k, DiagonalPolicy.EXCLUDE).total
    rows = []
    for eps in sorted_schedule(eps_list):
        mk = ladder(eps)
        zero_gap = energy_particles(mu_target, mk, DiagonalPolicy.INCLUDE).total - target
        gaps = []
        for s in range(n_seeds):
            rng = np.random.default_rng(seed + s)
            moved = mu_target.with_positions(mu_target.positions + jitter * eps * rng.standard_normal(mu_target.positions.shape))
            gaps.append(energy_particles(moved, mk, DiagonalPolicy.INCLUDE).total - target)
        rows.append({"eps": eps, "gap_zero_jitter": zero_gap, "min_gap": min(gaps) if gaps else math.nan,
                     "max_gap": max(gaps) if gaps else math.nan, "E_target": target})
    metrics = pd.DataFrame(rows)
    last = metrics.iloc[-1]
    worst = float(np.nanmin([last["gap_zero_jitter"], last["min_gap"]]))
    report = StudyReport(
        name="liminf",
        parameters={"kernel": k.label, "N": mu_target.n, "eps": sorted_schedule(eps_list), "n_seeds": n_seeds,
                    "jitter": jitter, "seed": seed},
        metrics=metrics,
    )
    report.criteria.append(CriterionResult.check(
        "liminf_smallest_eps", worst, ">=", -thresholds.liminf_slack,
        "smallest E_eps(mu_eps) - E_offdiag(mu_target) at the smallest eps"))
    return report


def study_slope_scaling(mu: ParticleMeasure, k: KernelSpec, eps_list: Sequence[float], pair_scale: float = 1.0,
                        m: MollifierSpec = GAUSSIAN, tab: Optional[TabulationParams] = None,
                        thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    """
    Fitted exponent of the metric slope in eps

    The bound slope <= C eps^(1-d) is an upper bound: a fixed measure passes
    when its exponent is at least 1 - d - slack. A pair at separation
    pair_scale * eps attains the rate, so its exponent must match 1 - d.
    """
    thresholds = thresholds or AcceptanceThresholds()
    ladder = KernelLadder(k, m, tab)
    d = k.d
    schedule = sorted_schedule(eps_list)
    rows = []
    for eps in schedule:
        mk = ladder(eps)
        pair = ParticleMeasure(np.vstack([np.zeros(d), np.eye(d)[0] * pair_scale * eps]), np.full(2, 0.5))
        rows.append({"eps": eps, "slope": metric_slope(mu, mk), "pair_slope": metric_slope(pair, mk)})
    metrics = pd.DataFrame(rows)
    target = 1.0 - d
    exponent = fitted_exponent(metrics["eps"], metrics["slope"])
    pair_exponent = fitted_exponent(metrics["eps"], metrics["pair_slope"])
    report = StudyReport(
        name="slope",
        parameters={"kernel": k.label, "N": mu.n, "eps": schedule, "pair_scale": pair_scale,
                    "fitted_exponent": exponent, "pair_exponent": pair_exponent},
        metrics=metrics,
    )
    report.criteria.append(CriterionResult.check(
        "slope_exponent_bound", exponent, ">=", target - thresholds.slope_exponent_slack,
        f"fitted exponent of the slope of a fixed measure, bound 1-d={target:g}"))
    report.criteria.append(CriterionResult.check(
        "pair_exponent_rate", abs(pair_exponent - target), "<=", thresholds.slope_exponent_slack,
        f"|exponent - (1-d)| for pairs at separation {pair_scale:g}*eps"))
    report.notes.append("slope of the unmollified energy: not computed (undefined at coincident particles)")
    return report


def study_convexity(k: KernelSpec, eps: float, n_trials: int = 200, n_particles: int = 6, seed: int = 0,
                    box: float = 1.0, m: MollifierSpec = GAUSSIAN, tab: Optional[TabulationParams] = None,
                    thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    """
    Geodesic convexity defect of E_eps against its lambda estimate

    defect = E(mu_a) - (1-a) E(mu) - a E(nu) is compared with
    -lambda a (1-a) W2^2 (the bound implied by a Hessian lower bound lambda)
    and with half of it.
    """
    thresholds = thresholds or AcceptanceThresholds()
    mk = KernelLadder(k, m, tab)(eps)
    lam = mk.lambda_estimate
    d = k.d
    rng = np.random.default_rng(seed)
    rows = []
    for trial in tqdm(range(n_trials), desc="convexity", disable=not settings.show_progress, leave=False):
        mu = ParticleMeasure.uniform(rng.uniform(-box, box, size=(n_particles, d)))
        nu = ParticleMeasure.uniform(rng.uniform(-box, box, size=(n_particles, d)))
        alpha = float(rng.uniform(0.05, 0.95))
        plan = w2_exact(mu, nu)
        mid = displacement_interpolation(plan, mu, nu, alpha)
        e_mu = energy_particles(mu, mk, DiagonalPolicy.INCLUDE).total
        e_nu = energy_particles(nu, mk, DiagonalPolicy.INCLUDE).total
        e_mid = energy_particles(mid, mk, DiagonalPolicy.INCLUDE).total
        defect = e_mid - (1.0 - alpha) * e_mu - alpha * e_nu
        bound = -lam * alpha * (1.0 - alpha) * plan.cost
        tol = 1e-12 * (1.0 + abs(e_mu) + abs(e_nu))
        rows.append({"trial": trial, "alpha": alpha, "w2_sq": plan.cost, "defect": defect,
                     "bound_one": bound, "bound_half": 0.5 * bound,
                     "violates_one": bool(defect > bound + tol), "violates_half": bool(defect > 0.5 * bound + tol)})
    metrics = pd.DataFrame(rows)
    violations = int(metrics["violates_one"].sum())
    half_violations = int(metrics["violates_half"].sum())
    report = StudyReport(
        name="convexity",
        parameters={"kernel": k.label, "eps": eps, "lambda_estimate": lam, "lambda_constant": mk.lambda_constant,
                    "n_trials": n_trials, "n_particles": n_particles, "seed": seed},
        metrics=metrics,
    )
    report.criteria.append(CriterionResult.check(
        "convexity_violations", violations, "<=", thresholds.convexity_max_violations,
        "trials with defect > -lambda a(1-a) W2^2"))
    report.notes.append(f"Trials exceeding half of that bound: {half_violations} of {n_trials}")
    logger.info(f"Convexity: lambda_eps={lam:.4g}, {violations} violations (factor 1), {half_violations} (factor 1/2)")
    return report
