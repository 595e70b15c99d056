"""
Direct minimization of E_eps
Backtracking gradient descent on particle positions and warm-started continuation in eps
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from src.config.settings import settings
from src.dynamics.trace import EnergyTrace
from src.energy import DiagonalPolicy, energy_particles, velocity_field
from src.exceptions import DomainError, NumericalError, StagnationError
from src.kernels import KernelSpec
from src.measures import ParticleMeasure
from src.mollification import MollifiedKernel, MollifierSpec, TabulationParams, build_mollified_kernel

ARMIJO_C = 1e-4
MAX_STEP = 1e3
ROUNDOFF = 64 * np.finfo(float).eps  # relative energy noise floor


def _energy(mu: ParticleMeasure, mk: MollifiedKernel) -> float:
    return energy_particles(mu, mk, DiagonalPolicy.INCLUDE).total


def minimize_energy(mu0: ParticleMeasure, mk: MollifiedKernel, tol: float = 1e-7, max_iter: int = 2000,
                    step: float = 1.0, trace_every: int = 10) -> Tuple[ParticleMeasure, EnergyTrace]:
    """
    Gradient descent with Armijo backtracking

    The search direction is the blob velocity v_i = -(1/m_i) dE/dx_i, so the
    directional derivative is -sum_i m_i |v_i|^2 = -slope^2. The step halves
    on rejection and doubles after acceptance. Once energy changes reach
    roundoff, a step is accepted if it does not raise the energy and lowers
    the slope instead.

    Args:
        mu0: Starting particles
        mk: Mollified kernel
        tol: Stop once the metric slope is at most tol
        max_iter: Iteration cap
        step: Initial step length
        trace_every: Iterations between trace rows

    Returns:
        (minimizer, trace); trace.info holds iterations and status

    Raises:
        StagnationError: no step passes the Armijo test at machine precision
    """
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    mu = mu0
    x = mu.positions
    v = velocity_field(mu, mk)
    energy = _energy(mu, mk)
    slope2 = float(np.dot(mu.weights, np.sum(v * v, axis=1)))
    trace = EnergyTrace(d=mu.d, info={"eps": mk.eps})
    trace.record(0.0, mu, mk, v)

    tau = step
    pseudo_time = 0.0
    iterations = 0
    status = "max_iter"
    scale = max(1.0, float(np.max(np.abs(x))))
    bar = tqdm(total=max_iter, desc=f"descent eps={mk.eps:g}", disable=not settings.show_progress, leave=False)
    try:
        while iterations < max_iter:
            if math.sqrt(slope2) <= tol:
                status = "converged"
                break
            vmax = float(np.max(np.abs(v)))
            v_next = None
            while True:
                if tau * vmax <= np.finfo(float).eps * scale:
                    logger.error(f"Line search stalled after {iterations} iterations (E={energy:.15g}, "
                                 f"slope={math.sqrt(slope2):.3g})")
                    raise StagnationError("line search failed at machine precision", best=mu,
                                          energy=energy, iterations=iterations)
                candidate = mu.with_positions(x + tau * v)
                trial = _energy(candidate, mk)
                if trial <= energy - ARMIJO_C * tau * slope2:
                    break
                # energy differences below roundoff: fall back to a decrease of the slope
                if trial <= energy and abs(trial - energy) <= ROUNDOFF * max(1.0, abs(energy)):
                    v_next = velocity_field(candidate, mk)
                    if float(np.dot(candidate.weights, np.sum(v_next * v_next, axis=1))) < slope2:
                        break
                    v_next = None
                tau *= 0.5
            mu, x, energy = candidate, candidate.positions, trial
            pseudo_time += tau
            iterations += 1
            tau = min(2.0 * tau, MAX_STEP)
            v = velocity_field(mu, mk) if v_next is None else v_next
            slope2 = float(np.dot(mu.weights, np.sum(v * v, axis=1)))
            if iterations % trace_every == 0:
                trace.record(pseudo_time, mu, mk, v)
            bar.update(1)
    finally:
        bar.close()

    if trace.rows[-1].t != pseudo_time:
        trace.record(pseudo_time, mu, mk, v)
    trace.info.update({"iterations": iterations, "status": status, "slope": math.sqrt(slope2)})
    if status == "max_iter":
        logger.warning(f"Descent hit max_iter={max_iter} with slope {math.sqrt(slope2):.3g} > {tol:g}")
    else:
        logger.info(f"✅ Descent converged in {iterations} iterations, E_eps={energy:.12g}")
    return mu, trace


@dataclass(frozen=True)
class ContinuationStep:
    eps: float
    minimizer: ParticleMeasure
    energy: float
    iterations: int
    kernel: MollifiedKernel
    trace: EnergyTrace


def continuation_minimize(mu0: ParticleMeasure, k: KernelSpec, m: MollifierSpec, eps_schedule: Sequence[float],
                          tol: float = 1e-7, max_iter: int = 2000, tab: Optional[TabulationParams] = None,
                          raise_on_failure: bool = False) -> List[ContinuationStep]:
    """
    Minimize E_eps along a decreasing eps schedule, warm-starting each run

    On a numerical failure the path is truncated at the failing eps and
    returned, or the error is re-raised when raise_on_failure is set.
    """
    schedule = [float(e) for e in eps_schedule]
    if not schedule or any(e <= 0 for e in schedule) or any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError(f"eps schedule must be positive and strictly decreasing, got {schedule}")
    path: List[ContinuationStep] = []
    mu = mu0
    for eps in schedule:
        try:
            mk = build_mollified_kernel(k, m, eps, tab)
            mu, trace = minimize_energy(mu, mk, tol=tol, max_iter=max_iter)
        except NumericalError as e:
            logger.error(f"Continuation stopped at eps={eps:g}: {e}")
            if raise_on_failure:
                raise
            break
        path.append(ContinuationStep(eps=eps, minimizer=mu, energy=trace.rows[-1].energy,
                                     iterations=trace.info["iterations"], kernel=mk, trace=trace))
        logger.info(f"✅ eps={eps:g}: E_eps={path[-1].energy:.10g} after {path[-1].iterations} iterations")
    return path
