"""
Exact 2-Wasserstein transport
Network simplex plans between particle measures, brute-force oracle and displacement interpolation
"""
import math
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import ot
import pandas as pd
from loguru import logger

from src.config.settings import settings
from src.exceptions import DomainError, NumericalError, TransportSizeError, UnsupportedError
from src.measures import ParticleMeasure

MARGINAL_TOL = 1e-10
BRUTE_MAX = 8


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """
    Coupling between two particle measures

    Attributes:
        sources: Source particle indices
        targets: Target particle indices
        masses: Mass moved along each (source, target) pair
        cost: sum of mass * |x_i - y_j|^2
        distance: sqrt(cost)
    """
    sources: np.ndarray
    targets: np.ndarray
    masses: np.ndarray
    cost: float
    distance: float

    @property
    def pairs(self) -> List[Tuple[int, int, float]]:
        return [(int(i), int(j), float(m)) for i, j, m in zip(self.sources, self.targets, self.masses)]

    def marginals(self, n_source: int, n_target: int) -> Tuple[np.ndarray, np.ndarray]:
        rows = np.bincount(self.sources, weights=self.masses, minlength=n_source)
        cols = np.bincount(self.targets, weights=self.masses, minlength=n_target)
        return rows, cols

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"i": self.sources, "j": self.targets, "mass": self.masses})

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            self.to_frame().to_csv(path, index=False)
        except Exception as e:
            logger.error(f"Failed to write transport plan {path}: {e}")
            raise
        return path


def _check_pair(mu: ParticleMeasure, nu: ParticleMeasure):
    if mu.d != nu.d:
        raise DomainError(f"measures live in different dimensions ({mu.d} vs {nu.d})")


def _plan_from_matrix(matrix: np.ndarray, costs: np.ndarray) -> TransportPlan:
    sources, targets = np.nonzero(matrix > 0)
    masses = matrix[sources, targets]
    cost = max(float(np.sum(masses * costs[sources, targets])), 0.0)
    return TransportPlan(sources=sources, targets=targets, masses=masses, cost=cost, distance=math.sqrt(cost))


def check_plan(plan: TransportPlan, mu: ParticleMeasure, nu: ParticleMeasure, tol: float = MARGINAL_TOL):
    """Raise NumericalError unless the plan's marginals match mu and nu within tol"""
    if np.any(plan.masses < 0):
        raise NumericalError("transport plan has negative mass")
    rows, cols = plan.marginals(mu.n, nu.n)
    row_err = float(np.max(np.abs(rows - mu.weights)))
    col_err = float(np.max(np.abs(cols - nu.weights)))
    if max(row_err, col_err) > tol:
        raise NumericalError(f"transport plan marginals off by {max(row_err, col_err):.3g} (tolerance {tol:g})")


def w2_exact(mu: ParticleMeasure, nu: ParticleMeasure) -> TransportPlan:
    """
    Optimal quadratic-cost plan by network simplex

    Args:
        mu: Source measure
        nu: Target measure

    Returns:
        TransportPlan with cost W2^2 and distance W2

    Raises:
        TransportSizeError: N*M above settings.max_transport_pairs
    """
    _check_pair(mu, nu)
    size = mu.n * nu.n
    if size > settings.max_transport_pairs:
        raise TransportSizeError(
            f"{mu.n} x {nu.n} = {size} pairs exceeds the cap of {settings.max_transport_pairs}; "
            f"use w2_entropic for an approximate distance"
        )
    costs = ot.dist(mu.positions, nu.positions, metric="sqeuclidean")
    a = np.ascontiguousarray(mu.weights, dtype=np.float64)
    b = np.ascontiguousarray(nu.weights, dtype=np.float64)
    matrix, log = ot.emd(a, b, costs, numItermax=settings.emd_max_iter, log=True)
    if log.get("warning"):
        logger.warning(f"Network simplex: {log['warning']}")
    plan = _plan_from_matrix(matrix, costs)
    if settings.check_plans:
        check_plan(plan, mu, nu)
    logger.debug(f"W2 exact: {mu.n}x{nu.n}, {len(plan.masses)} active pairs, cost={plan.cost:.12g}")
    return plan


def w2_brute(mu: ParticleMeasure, nu: ParticleMeasure) -> TransportPlan:
    """Exhaustive minimum over permutations for equal-count uniform measures (N <= 8)"""
    _check_pair(mu, nu)
    n = mu.n
    if nu.n != n or n > BRUTE_MAX:
        raise UnsupportedError(f"brute-force transport needs equal counts up to {BRUTE_MAX}, got {mu.n} and {nu.n}")
    uniform = np.full(n, 1.0 / n)
    if not (np.allclose(mu.weights, uniform, rtol=0, atol=1e-12) and np.allclose(nu.weights, uniform, rtol=0, atol=1e-12)):
        raise UnsupportedError("brute-force transport needs uniform weights")
    costs = ot.dist(mu.positions, nu.positions, metric="sqeuclidean")
    rows = np.arange(n)
    best_cost, best_perm = math.inf, None
    for perm in permutations(range(n)):
        total = float(np.sum(costs[rows, perm]))
        if total < best_cost:
            best_cost, best_perm = total, perm
    targets = np.array(best_perm)
    cost = best_cost / n
    return TransportPlan(sources=rows, targets=targets, masses=uniform, cost=cost, distance=math.sqrt(cost))


def w2_entropic(mu: ParticleMeasure, nu: ParticleMeasure, reg: float = 1e-2, max_iter: int = 10_000) -> TransportPlan:
    """
    Sinkhorn approximation of the quadratic plan

    reg is relative to the largest squared distance. Marginals hold only to
    the Sinkhorn stopping tolerance, so no plan check is applied.
    """
    _check_pair(mu, nu)
    if not reg > 0:
        raise DomainError(f"entropic regularization must be positive, got {reg}")
    costs = ot.dist(mu.positions, nu.positions, metric="sqeuclidean")
    scale = float(costs.max()) or 1.0
    matrix = ot.sinkhorn(mu.weights, nu.weights, costs / scale, reg, numItermax=max_iter)
    matrix = np.where(matrix > 1e-300, matrix, 0.0)
    return _plan_from_matrix(matrix, costs)


def displacement_interpolation(plan: TransportPlan, mu: ParticleMeasure, nu: ParticleMeasure,
                               alpha: float) -> ParticleMeasure:
    """
    Point of the Wasserstein geodesic between mu and nu at time alpha

    Each plan pair moves its mass to (1 - alpha) x_i + alpha y_j. Points with
    exactly equal coordinates are merged.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    _check_pair(mu, nu)
    keep = plan.masses > 0
    x = mu.positions[plan.sources[keep]]
    y = nu.positions[plan.targets[keep]]
    if alpha == 0.0:
        positions = x
    elif alpha == 1.0:
        positions = y
    else:
        positions = (1.0 - alpha) * x + alpha * y
    return ParticleMeasure.normalized(positions, plan.masses[keep]).merge_coincident()
