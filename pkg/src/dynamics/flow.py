"""
Blob-method gradient flow
Explicit integration of dx_i/dt = -2 sum_j grad K_eps(x_i - x_j) m_j
"""
import math
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field
from tqdm import tqdm

from src.config.settings import settings
from src.dynamics.trace import EnergyTrace
from src.energy import velocity_field
from src.exceptions import FlowDivergenceError
from src.measures import ParticleMeasure
from src.mollification import MollifiedKernel, critical_radius

MAX_ADAPTIVE_STEPS = 10_000_000


class Scheme(str, Enum):
    RK4 = "rk4"
    EULER = "euler"
    ADAPTIVE_RK = "adaptive_rk"


class FlowConfig(BaseModel):
    """Time stepping controls for integrate_flow"""
    scheme: Scheme = Scheme.RK4
    dt: float = Field(default=1e-3, gt=0)
    t_end: float = Field(default=1.0, gt=0)
    trace_every: int = Field(default=10, ge=1)
    deterministic: bool = Field(default_factory=lambda: settings.deterministic)
    steady_tol: Optional[float] = Field(default=None, gt=0)
    steady_rows: int = Field(default=10, ge=1)
    atol: float = Field(default=1e-8, gt=0)  # step-doubling tolerance on positions


def _rk4_step(x: np.ndarray, dt: float, f: Callable[[np.ndarray], np.ndarray], k1: np.ndarray) -> np.ndarray:
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def find_critical_separation(mk: MollifiedKernel) -> float:
    """Separation r* at which an equal-weight pair is stationary (dK_eps/dr(r*) = 0)"""
    r_star = critical_radius(mk)
    logger.debug(f"Critical separation r*={r_star:.15g} for eps={mk.eps:g}")
    return r_star


class _Stepper:
    """Velocity evaluation with divergence detection"""

    def __init__(self, mu0: ParticleMeasure, mk: MollifiedKernel):
        self.weights = mu0.weights
        self.mk = mk
        self.t = 0.0
        self.last_good = mu0

    def measure(self, x: np.ndarray) -> ParticleMeasure:
        if not np.all(np.isfinite(x)):
            logger.error(f"Non-finite particle position at t={self.t:.6g}")
            raise FlowDivergenceError(f"non-finite particle position near t={self.t:.6g}",
                                      last_state=self.last_good, t=self.t)
        return ParticleMeasure(x, self.weights)

    def velocity(self, x: np.ndarray) -> np.ndarray:
        return velocity_field(self.measure(x), self.mk)


def integrate_flow(mu0: ParticleMeasure, mk: MollifiedKernel,
                   cfg: Optional[FlowConfig] = None) -> Tuple[ParticleMeasure, EnergyTrace]:
    """
    Integrate the regularized particle system

    Args:
        mu0: Initial particles; weights never change
        mk: Tabulated mollified kernel
        cfg: Scheme, step, horizon, trace cadence and steady-state stop

    Returns:
        (final measure, trace)

    Raises:
        FlowDivergenceError: a position became non-finite
    """
    cfg = cfg or FlowConfig()
    stepper = _Stepper(mu0, mk)
    x = mu0.positions.copy()
    v = stepper.velocity(x)
    trace = EnergyTrace(d=mu0.d, info={"scheme": cfg.scheme.value, "dt": cfg.dt, "eps": mk.eps},
                        deterministic=cfg.deterministic)
    trace.record(0.0, mu0, mk, v)

    t = 0.0
    dt = cfg.dt
    steps = 0
    quiet_rows = 0
    status = "t_end"
    total = math.ceil(cfg.t_end / cfg.dt - 1e-9) if cfg.scheme != Scheme.ADAPTIVE_RK else None
    bar = tqdm(total=total, desc=f"flow eps={mk.eps:g}", disable=not settings.show_progress, leave=False)
    try:
        while t < cfg.t_end * (1.0 - 1e-14):
            h = min(dt, cfg.t_end - t)
            if cfg.scheme == Scheme.EULER:
                x_new = x + h * v
            elif cfg.scheme == Scheme.RK4:
                x_new = _rk4_step(x, h, stepper.velocity, v)
            else:
                full = _rk4_step(x, h, stepper.velocity, v)
                half = _rk4_step(x, 0.5 * h, stepper.velocity, v)
                x_new = _rk4_step(half, 0.5 * h, stepper.velocity, stepper.velocity(half))
                err = float(np.max(np.abs(x_new - full)))
                factor = 2.0 if err == 0.0 else min(2.0, max(0.2, 0.9 * (cfg.atol / err) ** 0.2))
                if err > cfg.atol:
                    dt = h * factor
                    if steps > MAX_ADAPTIVE_STEPS or dt < 1e-14 * max(1.0, t):
                        raise FlowDivergenceError(f"adaptive step collapsed at t={t:.6g}",
                                                  last_state=stepper.last_good, t=t)
                    continue
                dt = h * factor

            mu = stepper.measure(x_new)
            kinetic = float(np.dot(mu.weights, np.sum((x_new - x) ** 2, axis=1))) / (h * h)
            x = x_new
            t += h
            steps += 1
            stepper.t = t
            stepper.last_good = mu
            v = stepper.velocity(x)
            bar.update(1)

            at_end = t >= cfg.t_end * (1.0 - 1e-14)
            if steps % cfg.trace_every == 0 or at_end:
                row = trace.record(t, mu, mk, v, kinetic)
                if cfg.steady_tol is not None:
                    quiet_rows = quiet_rows + 1 if math.sqrt(row.slope2) <= cfg.steady_tol else 0
                    if quiet_rows >= cfg.steady_rows:
                        status = "steady"
                        logger.info(f"Steady state at t={t:.6g}: slope <= {cfg.steady_tol:g} for {quiet_rows} rows")
                        break
    finally:
        bar.close()

    final = stepper.last_good
    trace.info.update({"steps": steps, "t_final": t, "status": status})
    logger.info(f"✅ Flow finished: {steps} steps, t={t:.6g}, E_eps={trace.rows[-1].energy:.12g}")
    return final, trace
