"""
Run outputs
CSV, YAML and report files plus a replay manifest, all inside one output directory
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
import yaml
from loguru import logger

from src.cli.config import RunConfig, dump_config
from src.config.settings import settings
from src.dynamics import EnergyTrace
from src.experiments import StudyReport, write_report
from src.measures import ParticleMeasure
from src.transport import TransportPlan

PLOT_TRACE_TEMPLATE = '''"""Plot trace.csv and final.csv from this directory"""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = Path(__file__).parent
trace = pd.read_csv(here / "trace.csv")
final = pd.read_csv(here / "final.csv")

fig, (ax_e, ax_s, ax_x) = plt.subplots(1, 3, figsize=(13, 4))
ax_e.plot(trace["t"], trace["E"], label="E")
ax_e.plot(trace["t"], trace["Ea"], "--", label="attractive")
ax_e.plot(trace["t"], trace["Er"], ":", label="repulsive")
ax_e.set_xlabel("t")
ax_e.legend()
ax_s.semilogy(trace["t"], trace["slope2"].clip(lower=1e-300))
ax_s.set_xlabel("t")
ax_s.set_ylabel("slope^2")
y = final["x2"] if "x2" in final else 0.0 * final["x1"]
ax_x.scatter(final["x1"], y, s=4 + 2000 * final["w"], alpha=0.6)
ax_x.set_aspect("equal")
ax_x.set_title("{title}")
fig.tight_layout()
fig.savefig(here / "trace.png", dpi=150)
'''


@dataclass
class RunArtifacts:
    """
    Everything a subcommand wants written

    Attributes:
        command: Subcommand name recorded in the manifest
        config: Resolved configuration echoed into the manifest
        measures: File stem -> particle measure
        trace: Energy trace (trace.csv)
        tables: File stem -> table
        plan: Transport plan (plan.csv)
        metadata: File name -> mapping written as YAML
        report: Study report (report.txt, metrics.csv, plot_metrics.py)
        plots: Also write plot_trace.py next to trace.csv
    """
    command: str
    config: RunConfig
    measures: Dict[str, ParticleMeasure] = field(default_factory=dict)
    trace: Optional[EnergyTrace] = None
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    plan: Optional[TransportPlan] = None
    metadata: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    report: Optional[StudyReport] = None
    plots: bool = False


def _plain(value: Any) -> Any:
    """numpy scalars and tuples to YAML-safe builtins"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def manifest_text(artifacts: RunArtifacts, files: List[str]) -> str:
    """Resolved config preceded by comment lines, so the manifest parses as a config"""
    header = [
        f"# blobflow {settings.code_version}",
        f"# command: {artifacts.command}",
        f"# files: {', '.join(files)}",
    ]
    return "\n".join(header) + "\n" + dump_config(artifacts.config)


def emit_outputs(artifacts: RunArtifacts, out_dir: Union[str, Path]) -> List[Path]:
    """
    Write the artifacts of one run into out_dir

    Returns:
        Written paths, manifest.txt last
    """
    out = Path(out_dir)
    written: List[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for stem, mu in artifacts.measures.items():
            written.append(mu.to_csv(out / f"{stem}.csv"))
        if artifacts.trace is not None:
            written.append(artifacts.trace.to_csv(out / "trace.csv"))
            if artifacts.plots and "final" in artifacts.measures:
                plot = out / "plot_trace.py"
                plot.write_text(PLOT_TRACE_TEMPLATE.format(title=artifacts.command), encoding="utf-8")
                written.append(plot)
        for stem, table in artifacts.tables.items():
            path = out / f"{stem}.csv"
            table.to_csv(path, index=False)
            written.append(path)
        if artifacts.plan is not None:
            written.append(artifacts.plan.to_csv(out / "plan.csv"))
        for name, mapping in artifacts.metadata.items():
            path = out / name
            path.write_text(yaml.safe_dump(_plain(mapping), sort_keys=True), encoding="utf-8")
            written.append(path)
        if artifacts.report is not None:
            written.extend(write_report(artifacts.report, out))
        manifest = out / "manifest.txt"
        manifest.write_text(manifest_text(artifacts, [p.name for p in written]), encoding="utf-8")
        written.append(manifest)
    except Exception as e:
        logger.error(f"Failed to write outputs into {out}: {e}")
        raise
    logger.info(f"✅ Wrote {len(written)} files to {out}")
    return written
