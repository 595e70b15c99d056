"""
Study reports
Named pass/fail criteria with measured values and thresholds, written as text, CSV and a plot script
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union

import pandas as pd
from loguru import logger
from pydantic import BaseModel, Field

from src.config.settings import settings

FRAMING = (
    "Limit statements are not decidable at finite eps. Each criterion below is a finite "
    "necessary consequence checked numerically, not a proof."
)

OPERATORS = {
    "<": lambda measured, threshold: measured < threshold,
    "<=": lambda measured, threshold: measured <= threshold,
    ">=": lambda measured, threshold: measured >= threshold,
    "==": lambda measured, threshold: measured == threshold,
}

PLOT_METRICS_TEMPLATE = '''"""Plot {study} metrics from metrics.csv in this directory"""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = Path(__file__).parent
frame = pd.read_csv(here / "metrics.csv")
x = frame.columns[0]
columns = [c for c in frame.columns[1:] if pd.api.types.is_numeric_dtype(frame[c])]
fig, axes = plt.subplots(len(columns), 1, figsize=(6, 2.2 * max(1, len(columns))), squeeze=False)
for ax, column in zip(axes[:, 0], columns):
    ax.plot(frame[x], frame[column], "o-")
    ax.set_xlabel(x)
    ax.set_ylabel(column)
    if (frame[x] > 0).all():
        ax.set_xscale("log")
fig.suptitle("{study}")
fig.tight_layout()
fig.savefig(here / "metrics.png", dpi=150)
'''


class AcceptanceThresholds(BaseModel):
    """Pass thresholds of the studies"""
    monotonicity_rel_slack: float = Field(default=1e-8, ge=0)
    identity_sigmas: float = Field(default=3.0, gt=0)
    identity_min_pass_fraction: float = Field(default=0.95, ge=0, le=1)
    recovery_final_gap_rel: float = Field(default=0.01, gt=0)
    minimizer_energy_rel: float = Field(default=0.02, gt=0)
    support_radius_rel: float = Field(default=0.05, gt=0)
    figure1_density_rel: float = Field(default=0.10, gt=0)
    figure1_radius_rel: float = Field(default=0.05, gt=0)
    liminf_slack: float = Field(default=1e-10, ge=0)
    dissipation_rel: float = Field(default=1e-3, gt=0)
    dissipation_min_slope2: float = Field(default=1e-6, ge=0)
    slope_exponent_slack: float = Field(default=0.15, gt=0)
    convexity_max_violations: int = Field(default=0, ge=0)


@dataclass(frozen=True)
class CriterionResult:
    """One named verdict; a NaN measurement never passes"""
    name: str
    measured: float
    threshold: float
    operator: str
    passed: bool
    note: str = ""

    @classmethod
    def check(cls, name: str, measured: float, operator: str, threshold: float, note: str = "") -> "CriterionResult":
        measured = float(measured)
        threshold = float(threshold)
        passed = not math.isnan(measured) and bool(OPERATORS[operator](measured, threshold))
        return cls(name=name, measured=measured, threshold=threshold, operator=operator, passed=passed, note=note)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        text = f"[{verdict}] {self.name}: measured {self.measured:.6g} {self.operator} {self.threshold:.6g}"
        return f"{text} ({self.note})" if self.note else text


@dataclass
class StudyReport:
    """
    Outcome of one study

    Attributes:
        name: Study name
        parameters: Inputs that determine the run (seed, schedule, N, ...)
        metrics: Per-eps table
        criteria: Verdicts
        artifacts: Files written for this report
    """
    name: str
    parameters: Dict[str, Any]
    metrics: pd.DataFrame
    criteria: List[CriterionResult] = field(default_factory=list)
    artifacts: List[Path] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.criteria) and all(c.passed for c in self.criteria)

    def criterion(self, name: str) -> CriterionResult:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def render(self) -> str:
        lines = [f"Study: {self.name}", f"Version: {settings.code_version}", "", FRAMING, "", "Parameters:"]
        lines += [f"  {key} = {value}" for key, value in self.parameters.items()]
        lines += ["", "Criteria:"]
        lines += [f"  {c.line()}" for c in self.criteria]
        if self.notes:
            lines += ["", "Notes:"] + [f"  {note}" for note in self.notes]
        lines += ["", f"Verdict: {'PASS' if self.passed else 'FAIL'}", ""]
        return "\n".join(lines)


def write_report(report: StudyReport, out_dir: Union[str, Path]) -> List[Path]:
    """Write report.txt, metrics.csv and plot_metrics.py into out_dir"""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        text_path = out / "report.txt"
        text_path.write_text(report.render(), encoding="utf-8")
        csv_path = out / "metrics.csv"
        report.metrics.to_csv(csv_path, index=False)
        plot_path = out / "plot_metrics.py"
        plot_path.write_text(PLOT_METRICS_TEMPLATE.format(study=report.name), encoding="utf-8")
    except Exception as e:
        logger.error(f"Failed to write report for {report.name} into {out}: {e}")
        raise
    report.artifacts = [text_path, csv_path, plot_path]
    logger.info(f"✅ Report {report.name}: {'PASS' if report.passed else 'FAIL'} -> {out}")
    return report.artifacts


def strictly_monotone(values, decreasing: bool = True) -> float:
    """Largest step against the required direction (negative when strictly monotone)"""
    values = list(values)
    if len(values) < 2:
        return -math.inf
    steps = [b - a for a, b in zip(values, values[1:])]
    return max(steps) if decreasing else max(-s for s in steps)

