"""
Shared study helpers
Mollified-kernel cache per eps and paired Monte Carlo energy estimates
"""
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.kernels import KernelSpec, split_kernel
from src.mollification import MollifiedKernel, MollifierKind, MollifierSpec, TabulationParams, build_mollified_kernel

GAUSSIAN = MollifierSpec()
BUMP = MollifierSpec(MollifierKind.COMPACT_BUMP)


class KernelLadder:
    """Builds each K_eps once"""

    def __init__(self, k: KernelSpec, m: MollifierSpec = GAUSSIAN, tab: Optional[TabulationParams] = None):
        self.k = k
        self.m = m
        self.tab = tab
        self._built: Dict[float, MollifiedKernel] = {}

    def __call__(self, eps: float) -> MollifiedKernel:
        eps = float(eps)
        if eps not in self._built:
            self._built[eps] = build_mollified_kernel(self.k, self.m, eps, self.tab)
        return self._built[eps]


def paired_energy(k: KernelSpec, x: np.ndarray, y: np.ndarray) -> Dict[str, Tuple[float, float]]:
    """
    Monte Carlo estimate of E from independent pairs (x_i, y_i)

    Returns {part: (mean, standard error)} for attractive, repulsive and total.
    """
    attractive, repulsive = split_kernel(k)
    r = np.linalg.norm(x - y, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        samples = {"attractive": np.asarray(attractive(r)), "repulsive": np.asarray(repulsive(r))}
    samples["total"] = samples["attractive"] + samples["repulsive"]
    n = r.size
    return {name: (float(values.mean()), float(values.std(ddof=1) / math.sqrt(n))) for name, values in samples.items()}


def sorted_schedule(eps_list: Sequence[float]) -> list:
    """eps values from largest to smallest"""
    return sorted((float(e) for e in eps_list), reverse=True)


def fitted_exponent(eps: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(eps)"""
    slope, _ = np.polyfit(np.log(np.asarray(eps, dtype=float)), np.log(np.asarray(values, dtype=float)), 1)
    return float(slope)
