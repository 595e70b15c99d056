"""
Exception hierarchy for blobflow
The CLI maps these classes onto process exit codes
"""
from typing import Any, List, Optional


class BlobflowError(Exception):
    """Base class for every error raised by the package"""


class ConfigError(BlobflowError):
    """Invalid run configuration (unknown key, bad value, bad regime)"""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class KernelHypothesisError(ConfigError):
    """Kernel outside every supported parameter regime"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "kernel regime not supported")


class DomainError(ValueError, BlobflowError):
    """Argument outside the domain of an operation"""


class KernelSingularityError(DomainError):
    """Kernel gradient requested at the singular point x = 0"""


class InputError(ValueError, BlobflowError):
    """Malformed input data (negative density, non-integrable kernel, bad CSV)"""


class UnsupportedError(BlobflowError):
    """Operation not supported for the given inputs"""


class TransportSizeError(UnsupportedError):
    """Exact transport problem exceeds the configured pair cap"""


class NumericalError(BlobflowError):
    """Numerical failure: quadrature, divergence, stagnation"""


class TabulationError(NumericalError):
    """Radial quadrature did not converge at some radius"""

    def __init__(self, message: str, radius: float):
        self.radius = radius
        super().__init__(message)


class FlowDivergenceError(NumericalError):
    """Non-finite particle position during time integration"""

    def __init__(self, message: str, last_state: Any, t: float):
        self.last_state = last_state
        self.t = t
        super().__init__(message)


class StagnationError(NumericalError):
    """Line search failed at machine precision"""

    def __init__(self, message: str, best: Any, energy: float, iterations: int):
        self.best = best
        self.energy = energy
        self.iterations = iterations
        super().__init__(message)
