from .trace import TraceRow, EnergyTrace
from .flow import Scheme, FlowConfig, integrate_flow, find_critical_separation
from .descent import ContinuationStep, minimize_energy, continuation_minimize

__all__ = [
    "TraceRow", "EnergyTrace", "Scheme", "FlowConfig", "integrate_flow", "find_critical_separation",
    "ContinuationStep", "minimize_energy", "continuation_minimize",
]
