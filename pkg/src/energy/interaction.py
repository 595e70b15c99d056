"""
Particle interaction energies
Blocked pairwise sums for E and E_eps, velocities, the metric local slope and the modulus omega
"""
import math
from concurrent.futures import Executor, ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist

from src.config.settings import settings
from src.exceptions import DomainError, KernelSingularityError
from src.kernels import KernelSpec, split_kernel
from src.measures import ParticleMeasure
from src.mollification import MollifiedKernel, eval_mollified

Kernel = Union[KernelSpec, MollifiedKernel]
OMEGA_BREAK = math.exp(-1.0 - math.sqrt(2.0))


class DiagonalPolicy(str, Enum):
    EXCLUDE = "exclude_diagonal"
    INCLUDE = "include_diagonal"


@dataclass(frozen=True)
class EnergyBreakdown:
    """E = E^a + E^r for one measure under one diagonal policy"""
    total: float
    attractive: float
    repulsive: float
    diagonal_policy: DiagonalPolicy
    warnings: Tuple[str, ...] = ()

    @classmethod
    def from_parts(cls, attractive: float, repulsive: float, policy: DiagonalPolicy,
                   warnings: Tuple[str, ...] = ()) -> "EnergyBreakdown":
        return cls(total=attractive + repulsive, attractive=attractive, repulsive=repulsive,
                   diagonal_policy=policy, warnings=warnings)


def part_functions(k: Kernel, derivative: bool = False) -> Tuple[Callable, Callable]:
    """(attractive, repulsive) radial functions of a kernel or its tabulation"""
    if isinstance(k, MollifiedKernel):
        return (lambda r: eval_mollified(k, r, derivative=derivative, part="attractive"),
                lambda r: eval_mollified(k, r, derivative=derivative, part="repulsive"))
    attractive, repulsive = split_kernel(k)
    if derivative:
        return attractive.grad, repulsive.grad
    return attractive, repulsive


def _executor_map(fn, items, executor: Optional[Executor], threads: int) -> List:
    """Ordered map; results come back in item order whatever the executor"""
    if executor is not None:
        return list(executor.map(fn, items))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _unordered_sum(fn, items, executor: Optional[Executor], threads: int, width: int) -> np.ndarray:
    """Sum of fn over items in completion order; the last bits vary between runs"""
    pool = executor if executor is not None else ThreadPoolExecutor(max_workers=threads)
    total = np.zeros(width)
    try:
        for future in as_completed([pool.submit(fn, item) for item in items]):
            total += future.result()
    finally:
        if executor is None:
            pool.shutdown()
    return total


def pairwise_sums(positions: np.ndarray, weights: np.ndarray, fns, block: Optional[int] = None,
                  executor: Optional[Executor] = None, threads: Optional[int] = None,
                  deterministic: Optional[bool] = None) -> np.ndarray:
    """
    sum_{i != j} f(|x_i - x_j|) w_i w_j for each f in fns

    Each unordered pair is evaluated once and doubled. In deterministic mode
    (settings.deterministic unless given) row blocks are reduced in index
    order, so the result does not depend on the thread count. Otherwise
    parallel blocks are added as they finish.
    """
    block = block or settings.block_size
    threads = settings.resolve_threads(threads)
    deterministic = settings.deterministic if deterministic is None else deterministic
    n = positions.shape[0]

    def run(start: int) -> np.ndarray:
        stop = min(start + block, n)
        dist = cdist(positions[start:stop], positions[start:])
        rows, cols = np.nonzero(np.arange(dist.shape[1])[None, :] > np.arange(stop - start)[:, None])
        r = dist[rows, cols]
        w = weights[start + rows] * weights[start + cols]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.array([float(np.dot(w, f(r))) for f in fns])

    starts = list(range(0, n, block))
    if not deterministic and (executor is not None or threads > 1):
        return 2.0 * _unordered_sum(run, starts, executor, threads, len(fns))
    partials = _executor_map(run, starts, executor, threads)
    total = np.zeros(len(fns))
    for partial in partials:
        total += partial
    return 2.0 * total


def energy_particles(mu: ParticleMeasure, k: Kernel, policy: DiagonalPolicy = DiagonalPolicy.EXCLUDE,
                     executor: Optional[Executor] = None, threads: Optional[int] = None,
                     deterministic: Optional[bool] = None) -> EnergyBreakdown:
    """
    Interaction energy sum_{i,j} K(x_i - x_j) m_i m_j

    Args:
        mu: Particle measure
        k: Unmollified KernelSpec or tabulated MollifiedKernel
        policy: IncludeDiagonal adds sum_i m_i^2 K_eps(0) (MollifiedKernel only)
        executor: Optional executor for the row blocks
        threads: Thread count when no executor is given
        deterministic: Fixed-order block reduction (settings.deterministic if None)

    Returns:
        EnergyBreakdown
    """
    policy = DiagonalPolicy(policy)
    if policy == DiagonalPolicy.INCLUDE and not isinstance(k, MollifiedKernel):
        raise DomainError("IncludeDiagonal needs a mollified kernel; K(0) is infinite")
    if mu.n == 1 and policy == DiagonalPolicy.EXCLUDE:
        message = "energy of a single Dirac without its diagonal is 0"
        logger.warning(message)
        return EnergyBreakdown.from_parts(0.0, 0.0, policy, (message,))

    fns = part_functions(k)
    attractive, repulsive = pairwise_sums(mu.positions, mu.weights, fns, executor=executor, threads=threads,
                                          deterministic=deterministic)
    if policy == DiagonalPolicy.INCLUDE:
        self_mass = float(np.dot(mu.weights, mu.weights))
        attractive += self_mass * k.attractive.origin_value
        repulsive += self_mass * k.repulsive.origin_value
    return EnergyBreakdown.from_parts(float(attractive), float(repulsive), policy)


def velocity_field(mu: ParticleMeasure, k: Kernel, executor: Optional[Executor] = None,
                   threads: Optional[int] = None) -> np.ndarray:
    """
    Blob-method velocities v_i = -2 sum_j grad K(x_i - x_j) m_j

    With a MollifiedKernel the j = i term vanishes since grad K_eps(0) = 0.
    An unmollified KernelSpec needs pairwise distinct positions.
    """
    positions = mu.positions
    weights = mu.weights
    n = mu.n
    block = settings.block_size
    threads = settings.resolve_threads(threads)
    mollified = isinstance(k, MollifiedKernel)
    if mollified:
        def slope(r):
            return eval_mollified(k, r, derivative=True)
    else:
        attractive, repulsive = split_kernel(k)

        def slope(r):
            return attractive.grad(r) + repulsive.grad(r)

    def run(start: int) -> np.ndarray:
        stop = min(start + block, n)
        diff = positions[start:stop, None, :] - positions[None, :, :]
        r = np.linalg.norm(diff, axis=-1)
        coincident = r == 0.0
        if not mollified:
            off_diagonal = coincident.copy()
            off_diagonal[np.arange(stop - start), np.arange(start, stop)] = False
            if np.any(off_diagonal):
                raise KernelSingularityError("coincident particles with an unmollified kernel")
        factor = np.zeros_like(r)
        live = ~coincident
        factor[live] = slope(r[live]) / r[live]
        return -2.0 * np.einsum("ij,ijk,j->ik", factor, diff, weights)

    blocks = _executor_map(run, list(range(0, n, block)), executor, threads)
    return np.concatenate(blocks, axis=0)


def metric_slope(mu: ParticleMeasure, k: Kernel, velocities: Optional[np.ndarray] = None) -> float:
    """|dE_eps|(mu) = 2 ||grad K_eps * mu||_{L^2(mu)} = (sum_i m_i |v_i|^2)^(1/2)"""
    v = velocity_field(mu, k) if velocities is None else velocities
    return math.sqrt(float(np.dot(mu.weights, np.sum(v * v, axis=1))))


def omega(x):
    """
    Modulus x|log x| up to e^(-1-sqrt 2), then sqrt(x^2 + 2(1+sqrt 2) e^(-1-sqrt 2) x)

    Continuous at the break and concave.
    """
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("omega is defined for x >= 0")
    out = np.empty_like(arr)
    low = arr <= OMEGA_BREAK
    xl = arr[low]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[low] = np.where(xl > 0, -xl * np.log(xl), 0.0)
    xh = arr[~low]
    out[~low] = np.sqrt(xh * xh + 2.0 * (1.0 + math.sqrt(2.0)) * OMEGA_BREAK * xh)
    return float(out[0]) if scalar else out.reshape(np.shape(x))
