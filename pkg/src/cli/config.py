"""
Run configuration
Line-based `section.key = value` files parsed into pydantic sections
"""
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.dynamics import FlowConfig, Scheme
from src.exceptions import ConfigError
from src.experiments import STUDY_NAMES, AcceptanceThresholds
from src.kernels import KernelFamily, KernelSpec, ensure_admissible
from src.measures import DensityKind, DensitySpec, InitMode
from src.mollification import MollifierKind, MollifierSpec


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class MorseSection(_Section):
    """K(r) = c_r exp(-r/l_r) - c_a exp(-r/l_a); read only by family = morse"""
    c_r: float = 2.0
    c_a: float = 1.0
    l_r: float = 0.5
    l_a: float = 1.0


class KernelSection(_Section):
    """KernelSpec fields; Morse parameters live under kernel.morse"""
    family: KernelFamily = KernelFamily.POWER_LAW
    dim: int = Field(default=3, ge=1, le=3)
    p: Union[float, str] = -1.0
    q: float = 2.0
    hypothesis_radius: float = Field(default=2.0, gt=1.0)
    morse: MorseSection = Field(default_factory=MorseSection)

    @field_validator("p", mode="before")
    @classmethod
    def _number_or_log(cls, value):
        if isinstance(value, str) and value.strip().lower() != "log":
            return float(value)
        return value

    @field_validator("family", mode="before")
    @classmethod
    def _no_general(cls, value):
        if str(getattr(value, "value", value)) == KernelFamily.GENERAL_RADIAL.value:
            raise ValueError("general radial kernels need a Python profile and cannot be configured from a file")
        return value

    def to_spec(self) -> KernelSpec:
        if self.family == KernelFamily.MORSE:
            m = self.morse
            return KernelSpec.morse_potential(self.dim, m.c_r, m.c_a, m.l_r, m.l_a,
                                              hypothesis_radius=self.hypothesis_radius)
        return KernelSpec.power_law(self.dim, self.p, self.q, hypothesis_radius=self.hypothesis_radius)


class MollifierSection(_Section):
    kind: MollifierKind = MollifierKind.GAUSSIAN_HEAT
    width: float = Field(default=1.0, gt=0)
    eps: float = Field(default=0.1, gt=0)
    schedule: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05])

    def to_spec(self) -> MollifierSpec:
        return MollifierSpec(self.kind, self.width)


class MeasureSection(_Section):
    """Initial particles: a CSV file when input is set, otherwise a discretized density"""
    density: DensityKind = DensityKind.UNIFORM_BALL
    radius: float = Field(default=1.0, gt=0)
    bounds: List[float] = Field(default_factory=lambda: [-0.5, 0.5])  # lo, hi per axis, or one pair for all axes
    n: int = Field(default=400, ge=1)
    mode: InitMode = InitMode.MONTE_CARLO
    seed: int = Field(default=0, ge=0)
    input: Optional[str] = None

    def to_density(self, d: int) -> DensitySpec:
        if self.density == DensityKind.UNIFORM_BALL:
            return DensitySpec.uniform_ball(d, self.radius)
        if self.density == DensityKind.FIGURE1_POLYNOMIAL:
            return DensitySpec.figure1_polynomial(d)
        if self.density == DensityKind.UNIFORM_BOX:
            bounds = np.asarray(self.bounds, dtype=float)
            if bounds.size == 2:
                bounds = np.tile(bounds, (d, 1))
            return DensitySpec.uniform_box(bounds.reshape(d, 2))
        raise ConfigError("custom densities need a Python profile and cannot be configured from a file",
                          key="measure.density")


class DynamicsSection(_Section):
    """FlowConfig fields plus descent controls"""
    scheme: Scheme = Scheme.RK4
    dt: float = Field(default=1e-3, gt=0)
    t_end: float = Field(default=1.0, gt=0)
    trace_every: int = Field(default=10, ge=1)
    steady_tol: Optional[float] = Field(default=None, gt=0)
    steady_rows: int = Field(default=10, ge=1)
    atol: float = Field(default=1e-8, gt=0)
    tol: float = Field(default=1e-7, gt=0)
    max_iter: int = Field(default=2000, ge=1)

    def to_flow_config(self, deterministic: bool) -> FlowConfig:
        return FlowConfig(scheme=self.scheme, dt=self.dt, t_end=self.t_end, trace_every=self.trace_every,
                          deterministic=deterministic, steady_tol=self.steady_tol, steady_rows=self.steady_rows,
                          atol=self.atol)


class StudySection(AcceptanceThresholds):
    """Study choice, its sample sizes and threshold overrides"""
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    name: str = "monotonicity"
    n_samples: int = Field(default=100_000, ge=2)
    n_seeds: int = Field(default=20, ge=1)
    n_trials: int = Field(default=200, ge=1)
    n_particles: int = Field(default=6, ge=1)
    jitter: float = Field(default=1e-3, ge=0)
    pair_scale: float = Field(default=1.0, gt=0)

    @field_validator("name")
    @classmethod
    def _known_study(cls, value: str) -> str:
        if value not in STUDY_NAMES:
            raise ValueError(f"unknown study {value!r}, expected one of {', '.join(STUDY_NAMES)}")
        return value

    def thresholds(self) -> AcceptanceThresholds:
        return AcceptanceThresholds(**{name: getattr(self, name) for name in AcceptanceThresholds.model_fields})


class RunSection(_Section):
    threads: int = Field(default=1, ge=1)
    deterministic: bool = True


class OutputSection(_Section):
    dir: str = "out"
    plots: bool = False


class RunConfig(_Section):
    """Fully resolved configuration of one CLI run"""
    kernel: KernelSection = Field(default_factory=KernelSection)
    mollifier: MollifierSection = Field(default_factory=MollifierSection)
    measure: MeasureSection = Field(default_factory=MeasureSection)
    dynamics: DynamicsSection = Field(default_factory=DynamicsSection)
    study: StudySection = Field(default_factory=StudySection)
    run: RunSection = Field(default_factory=RunSection)
    output: OutputSection = Field(default_factory=OutputSection)


SECTIONS = tuple(RunConfig.model_fields)


def _literal(text: str) -> Any:
    """YAML scalar or flow list; anything YAML rejects stays a string"""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def _group(model: type, name: str) -> Optional[type]:
    """Nested section model behind a field, or None for a plain value"""
    annotation = model.model_fields[name].annotation
    return annotation if isinstance(annotation, type) and issubclass(annotation, BaseModel) else None


def _split_line(raw: str, number: int) -> Optional[Tuple[Tuple[str, ...], Any]]:
    """(key path, value) of one line; section.key or section.group.key"""
    line = raw.split("#", 1)[0].strip()
    if not line:
        return None
    if "=" not in line:
        raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", line=number)
    lhs, value = (part.strip() for part in line.split("=", 1))
    path = tuple(lhs.split("."))
    if len(path) not in (2, 3) or not all(path):
        raise ConfigError(f"key must look like section.key or section.group.key, got {lhs!r}", line=number, key=lhs)
    if path[0] not in SECTIONS:
        raise ConfigError(f"unknown section {path[0]!r} in key {lhs!r}", line=number, key=lhs)
    model = _group(RunConfig, path[0])
    for depth, name in enumerate(path[1:], start=2):
        if name not in model.model_fields:
            raise ConfigError(f"unknown key {lhs!r}", line=number, key=lhs)
        nested = _group(model, name)
        if (nested is None) != (depth == len(path)):
            expected = f"{lhs}.<key>" if nested is not None else ".".join(path[:depth])
            raise ConfigError(f"unknown key {lhs!r}, expected {expected!r}", line=number, key=lhs)
        model = nested
    return path, _literal(value)


def parse_config(text: str) -> RunConfig:
    """
    Parse a line-based run configuration

    Blank lines and `#` comments are ignored. A repeated key keeps its last
    value and logs a warning. Missing keys take their defaults.

    Raises:
        ConfigError: unknown key or invalid value, with its line number
        KernelHypothesisError: kernel outside every supported regime
    """
    values: Dict[str, Dict[str, Any]] = {section: {} for section in SECTIONS}
    lines: Dict[Tuple[str, ...], int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        parsed = _split_line(raw, number)
        if parsed is None:
            continue
        path, value = parsed
        if path in lines:
            logger.warning(f"line {number}: duplicate key {'.'.join(path)}, keeping the last value "
                           f"(first set on line {lines[path]})")
        target = values[path[0]]
        for name in path[1:-1]:
            target = target.setdefault(name, {})
        target[path[-1]] = value
        lines[path] = number

    try:
        cfg = RunConfig(**values)
    except ValidationError as e:
        error = e.errors()[0]
        loc = tuple(str(part) for part in error["loc"])
        path = next((loc[:n] for n in range(len(loc), 1, -1) if loc[:n] in lines), loc[:2])
        key = ".".join(path)
        raise ConfigError(f"invalid value for {key}: {error['msg']}", line=lines.get(path), key=key) from e

    try:
        spec = cfg.kernel.to_spec()
    except ValueError as e:
        raise ConfigError(str(e), key="kernel") from e
    ensure_admissible(spec)
    return cfg


def load_config(path: Union[str, Path, None]) -> RunConfig:
    """parse_config on a file; None gives the defaults"""
    if path is None:
        return parse_config("")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"))


def _render(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else (".inf" if value > 0 else "-.inf")
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in value) + "]"
    return str(value)


def _dump_model(prefix: str, model: BaseModel, lines: List[str]):
    for key in type(model).model_fields:
        value = getattr(model, key)
        if isinstance(value, BaseModel):
            _dump_model(f"{prefix}.{key}", value, lines)
        else:
            lines.append(f"{prefix}.{key} = {_render(value)}")


def dump_config(cfg: RunConfig) -> str:
    """Every resolved key, one per line; parse_config(dump_config(cfg)) == cfg"""
    lines: List[str] = []
    for section in SECTIONS:
        _dump_model(section, getattr(cfg, section), lines)
    return "\n".join(lines) + "\n"
