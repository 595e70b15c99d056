"""
Particle measures
Weighted Dirac sums in R^d with moments and CSV round-tripping
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
from loguru import logger

from src.exceptions import DomainError, InputError

MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ParticleMeasure:
    """
    Probability measure sum_i m_i delta_{x_i}

    Attributes:
        positions: Array (N, d) of finite points
        weights: Array (N,) of non-negative masses summing to 1
    """
    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.ndim == 1:
            positions = positions[:, None]
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if positions.ndim != 2 or positions.shape[0] != weights.shape[0]:
            raise InputError(f"positions {positions.shape} and weights {weights.shape} do not match")
        if positions.shape[0] == 0:
            raise InputError("a particle measure needs at least one particle")
        if positions.shape[1] not in (1, 2, 3):
            raise InputError(f"dimension must be 1, 2 or 3, got {positions.shape[1]}")
        if not np.all(np.isfinite(positions)):
            raise InputError("particle positions must be finite")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InputError("particle weights must be finite and non-negative")
        if abs(weights.sum() - 1.0) > MASS_TOL:
            raise InputError(f"particle weights sum to {weights.sum():.17g}, expected 1")
        positions.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    @classmethod
    def uniform(cls, positions) -> "ParticleMeasure":
        positions = np.asarray(positions, dtype=float)
        n = positions.shape[0]
        return cls(positions, np.full(n, 1.0 / n))

    @classmethod
    def dirac(cls, point) -> "ParticleMeasure":
        return cls(np.asarray(point, dtype=float).reshape(1, -1), np.ones(1))

    @classmethod
    def normalized(cls, positions, masses) -> "ParticleMeasure":
        """Build from unnormalized non-negative masses"""
        masses = np.asarray(masses, dtype=float)
        total = masses.sum()
        if not total > 0:
            raise InputError("total mass must be positive")
        return cls(positions, masses / total)

    def with_positions(self, positions) -> "ParticleMeasure":
        """Same weights, new positions (weights are never changed by dynamics)"""
        return ParticleMeasure(positions, self.weights)

    def translate(self, v) -> "ParticleMeasure":
        v = np.asarray(v, dtype=float).reshape(1, self.d)
        return self.with_positions(self.positions + v)

    def merge_coincident(self) -> "ParticleMeasure":
        """Merge particles with exactly equal coordinates, summing their masses"""
        unique, inverse = np.unique(self.positions, axis=0, return_inverse=True)
        masses = np.bincount(inverse.reshape(-1), weights=self.weights, minlength=unique.shape[0])
        return ParticleMeasure(unique, masses / masses.sum())

    def columns(self):
        return [f"x{i + 1}" for i in range(self.d)] + ["w"]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.positions, columns=self.columns()[:-1])
        frame["w"] = self.weights
        return frame

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            self.to_frame().to_csv(path, index=False)
        except Exception as e:
            logger.error(f"Failed to write particle CSV {path}: {e}")
            raise
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path], normalize: bool = False) -> "ParticleMeasure":
        """
        Read a measure CSV with header x1[,x2[,x3]],w

        Args:
            path: CSV file
            normalize: Rescale weights to unit mass instead of rejecting them
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Particle CSV not found: {path}")
        frame = pd.read_csv(path, float_precision="round_trip")
        d = frame.shape[1] - 1
        expected = [f"x{i + 1}" for i in range(d)] + ["w"]
        if list(frame.columns) != expected:
            raise InputError(f"{path}: expected header {','.join(expected)}, got {','.join(map(str, frame.columns))}")
        positions = frame[expected[:-1]].to_numpy(dtype=float)
        weights = frame["w"].to_numpy(dtype=float)
        if normalize:
            return cls.normalized(positions, weights)
        return cls(positions, weights)


def second_moment(mu: ParticleMeasure) -> float:
    """sum_i m_i |x_i|^2"""
    return float(np.dot(mu.weights, np.sum(mu.positions ** 2, axis=1)))


def center_of_mass(mu: ParticleMeasure) -> np.ndarray:
    """sum_i m_i x_i"""
    return mu.weights @ mu.positions


def centered_second_moment(mu: ParticleMeasure) -> float:
    """Second moment about the center of mass"""
    com = center_of_mass(mu)
    return second_moment(mu) - float(np.dot(com, com))


def support_radius(mu: ParticleMeasure, min_mass: float = 0.0) -> float:
    """max |x_i - com| over particles with mass above min_mass"""
    com = center_of_mass(mu)
    keep = mu.weights > min_mass
    if not np.any(keep):
        raise DomainError("no particle carries mass above the threshold")
    return float(np.max(np.linalg.norm(mu.positions[keep] - com, axis=1)))
