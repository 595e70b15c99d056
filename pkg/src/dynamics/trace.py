"""
Energy traces
Time series of energy, slope and moments recorded by flows and descent runs
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from src.energy import DiagonalPolicy, energy_particles
from src.measures import ParticleMeasure, center_of_mass, second_moment


@dataclass(frozen=True)
class TraceRow:
    t: float
    energy: float
    attractive: float
    repulsive: float
    slope2: float
    kinetic: float
    second_moment: float
    com: Tuple[float, ...]


@dataclass
class EnergyTrace:
    """
    Rows of (t, E_eps, E^a_eps, E^r_eps, slope^2, kinetic, M2, center of mass)

    kinetic is the squared metric derivative sum_i m_i |dx_i/dt|^2 over the
    last step (equal to slope^2 for the exact flow). Energies use the
    deterministic flag of the run (settings.deterministic when None).
    """
    d: int
    rows: List[TraceRow] = field(default_factory=list)
    info: Dict[str, Any] = field(default_factory=dict)
    deterministic: Optional[bool] = None

    def record(self, t: float, mu: ParticleMeasure, mk, velocities: np.ndarray, kinetic: Optional[float] = None) -> TraceRow:
        breakdown = energy_particles(mu, mk, DiagonalPolicy.INCLUDE, deterministic=self.deterministic)
        slope2 = float(np.dot(mu.weights, np.sum(velocities * velocities, axis=1)))
        row = TraceRow(
            t=float(t),
            energy=breakdown.total,
            attractive=breakdown.attractive,
            repulsive=breakdown.repulsive,
            slope2=slope2,
            kinetic=slope2 if kinetic is None else float(kinetic),
            second_moment=second_moment(mu),
            com=tuple(float(c) for c in center_of_mass(mu)),
        )
        self.rows.append(row)
        return row

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def times(self) -> np.ndarray:
        return np.array([row.t for row in self.rows])

    @property
    def energies(self) -> np.ndarray:
        return np.array([row.energy for row in self.rows])

    @property
    def slopes2(self) -> np.ndarray:
        return np.array([row.slope2 for row in self.rows])

    @property
    def centers(self) -> np.ndarray:
        return np.array([row.com for row in self.rows])

    def columns(self) -> List[str]:
        return ["t", "E", "Ea", "Er", "slope2", "kinetic", "M2"] + [f"com_{i + 1}" for i in range(self.d)]

    def to_frame(self) -> pd.DataFrame:
        data = [[r.t, r.energy, r.attractive, r.repulsive, r.slope2, r.kinetic, r.second_moment, *r.com]
                for r in self.rows]
        return pd.DataFrame(data, columns=self.columns())

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            self.to_frame().to_csv(path, index=False)
        except Exception as e:
            logger.error(f"Failed to write energy trace {path}: {e}")
            raise
        return path
