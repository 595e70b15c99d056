#!/usr/bin/env python3
"""
Run every convergence study at desk scale and write one report directory per study
"""
import sys
import argparse
import time
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from loguru import logger

from src.config.settings import settings
from src.experiments import (
    STUDY_NAMES,
    study_convexity,
    study_dissipation,
    study_energy_identity,
    study_figure1,
    study_liminf,
    study_minimizer_convergence,
    study_monotonicity,
    study_recovery,
    study_slope_scaling,
    write_report,
)
from src.kernels import KernelSpec
from src.measures import DensitySpec, InitMode, init_particles

SCHEDULE = [0.2, 0.1, 0.05]


def build_studies(n: int, seed: int):
    """Study name -> zero-argument runner with the default acceptance parameters"""
    newtonian = KernelSpec.power_law(3, -1.0, 2.0)
    ball = DensitySpec.uniform_ball(3)
    cloud = init_particles(ball, n, InitMode.MONTE_CARLO, seed=seed)
    small = init_particles(ball, 50, InitMode.MONTE_CARLO, seed=seed)
    return {
        "monotonicity": lambda: study_monotonicity(cloud, newtonian, SCHEDULE),
        "identity": lambda: study_energy_identity(small, newtonian, 0.1, seeds=range(seed, seed + 20)),
        "recovery": lambda: study_recovery(ball, newtonian, SCHEDULE + [0.025], seed=seed),
        "minimizers": lambda: study_minimizer_convergence(newtonian, SCHEDULE, n, seed=seed),
        "figure1": lambda: study_figure1(n, SCHEDULE),
        "liminf": lambda: study_liminf(small, newtonian, SCHEDULE, seed=seed),
        "dissipation": lambda: study_dissipation(small, newtonian, 0.1),
        "slope": lambda: study_slope_scaling(cloud, newtonian, SCHEDULE + [0.025]),
        "convexity": lambda: study_convexity(newtonian, 0.1, seed=seed),
    }


def run_acceptance(out_dir: str, studies, n: int, seed: int) -> bool:
    """
    Run the selected studies and write their reports

    Args:
        out_dir: Root directory; each study writes into out_dir/<name>
        studies: Study names to run
        n: Particle count for the flow and minimizer studies
        seed: Base seed

    Returns:
        True when every study passes
    """
    logger.info("=" * 80)
    logger.info(f"🚀 Acceptance run: {', '.join(studies)} (N={n}, seed={seed})")
    logger.info("=" * 80)

    runners = build_studies(n, seed)
    verdicts = {}
    for i, name in enumerate(studies, 1):
        logger.info(f"\n[Step {i}/{len(studies)}] {name}")
        start = time.perf_counter()
        try:
            report = runners[name]()
        except Exception as e:
            logger.error(f"  ✗ {name} failed to run: {e}")
            verdicts[name] = False
            continue
        write_report(report, Path(out_dir) / name)
        verdicts[name] = report.passed
        for criterion in report.criteria:
            logger.info(f"  {criterion.line()}")
        logger.info(f"  {'✅' if report.passed else '✗'} {name} in {time.perf_counter() - start:.1f}s")

    logger.info("\n" + "=" * 80)
    for name, passed in verdicts.items():
        logger.info(f"  {'PASS' if passed else 'FAIL'}  {name}")
    logger.info("=" * 80)
    return all(verdicts.values())


def main():
    parser = argparse.ArgumentParser(description="Run the convergence studies and write their reports")
    parser.add_argument("--out", default="out/acceptance", help="Report root directory")
    parser.add_argument("--study", action="append", choices=STUDY_NAMES,
                        help="Study to run (repeatable; default: all)")
    parser.add_argument("--n", type=int, default=400, help="Particle count")
    parser.add_argument("--seed", type=int, default=0, help="Base seed")
    parser.add_argument("--progress", action="store_true", help="Show progress bars")
    args = parser.parse_args()

    settings.show_progress = args.progress
    settings.configure_logging()
    passed = run_acceptance(args.out, args.study or list(STUDY_NAMES), args.n, args.seed)
    sys.exit(0 if passed else 3)


if __name__ == "__main__":
    main()
