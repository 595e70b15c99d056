"""
blobflow command line
Subcommands simulate, minimize, distance, mollify-table and gamma-sweep
"""
import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import pandas as pd
from loguru import logger

from src.cli.config import RunConfig, load_config
from src.cli.outputs import RunArtifacts, emit_outputs
from src.config.settings import settings
from src.dynamics import continuation_minimize, integrate_flow
from src.exceptions import ConfigError, DomainError, InputError, NumericalError, UnsupportedError
from src.experiments import (
    STUDY_NAMES,
    StudyReport,
    study_convexity,
    study_dissipation,
    study_energy_identity,
    study_figure1,
    study_liminf,
    study_minimizer_convergence,
    study_monotonicity,
    study_recovery,
    study_slope_scaling,
)
from src.kernels import KernelSpec
from src.measures import ParticleMeasure, init_particles
from src.mollification import build_mollified_kernel
from src.transport import w2_exact

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VERDICT = 3


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Run configuration file (section.key = value lines)")
    common.add_argument("--out", help="Output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, help="Seed for particle initialization (overrides measure.seed)")
    common.add_argument("--threads", type=int, help="Threads for pairwise sums (overrides run.threads)")
    common.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None,
                        help="Fixed-order reductions (--no-deterministic sums blocks as they finish)")

    parser = _Parser(description="Regularized interaction energies: flows, minimizers and convergence studies")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    simulate = sub.add_parser("simulate", parents=[common], help="Integrate the blob-method flow")
    simulate.add_argument("--plots", action="store_true", help="Also write plot_trace.py")

    minimize = sub.add_parser("minimize", parents=[common], help="Continuation minimization along mollifier.schedule")
    minimize.add_argument("--plots", action="store_true", help="Also write plot_trace.py")

    distance = sub.add_parser("distance", parents=[common], help="Exact 2-Wasserstein distance between two CSVs")
    distance.add_argument("mu", help="First particle CSV (x1[,x2[,x3]],w)")
    distance.add_argument("nu", help="Second particle CSV")
    distance.add_argument("--write-plan", action="store_true", help="Write plan.csv into the output directory")

    sub.add_parser("mollify-table", parents=[common], help="Tabulate K_eps at mollifier.eps")

    sweep = sub.add_parser("gamma-sweep", parents=[common], help="Run one convergence study")
    sweep.add_argument("--study", choices=STUDY_NAMES, help="Study name (overrides study.name)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file plus command-line overrides"""
    cfg = load_config(args.config)
    if args.out is not None:
        cfg.output.dir = args.out
    if args.seed is not None:
        cfg.measure.seed = args.seed
    if args.threads is not None:
        cfg.run.threads = args.threads
    if args.deterministic is not None:
        cfg.run.deterministic = args.deterministic
    if getattr(args, "plots", False):
        cfg.output.plots = True
    if getattr(args, "study", None):
        cfg.study.name = args.study
    settings.threads = settings.resolve_threads(cfg.run.threads)
    settings.deterministic = cfg.run.deterministic
    return cfg


def initial_measure(cfg: RunConfig, k: KernelSpec) -> ParticleMeasure:
    section = cfg.measure
    if section.input:
        mu = ParticleMeasure.from_csv(section.input)
    else:
        mu = init_particles(section.to_density(k.d), section.n, section.mode, seed=section.seed)
    if mu.d != k.d:
        raise ConfigError(f"measure dimension {mu.d} differs from kernel.dim = {k.d}", key="measure.input")
    return mu


def run_simulate(cfg: RunConfig) -> RunArtifacts:
    k = cfg.kernel.to_spec()
    mk = build_mollified_kernel(k, cfg.mollifier.to_spec(), cfg.mollifier.eps)
    final, trace = integrate_flow(initial_measure(cfg, k), mk, cfg.dynamics.to_flow_config(cfg.run.deterministic))
    return RunArtifacts("simulate", cfg, measures={"final": final}, trace=trace, plots=cfg.output.plots)


def run_minimize(cfg: RunConfig) -> RunArtifacts:
    k = cfg.kernel.to_spec()
    path = continuation_minimize(initial_measure(cfg, k), k, cfg.mollifier.to_spec(), cfg.mollifier.schedule,
                                 tol=cfg.dynamics.tol, max_iter=cfg.dynamics.max_iter, raise_on_failure=True)
    table = pd.DataFrame({"eps": [s.eps for s in path], "E_eps": [s.energy for s in path],
                          "iterations": [s.iterations for s in path]})
    return RunArtifacts("minimize", cfg, measures={"final": path[-1].minimizer}, trace=path[-1].trace,
                        tables={"path": table}, plots=cfg.output.plots)


def run_mollify_table(cfg: RunConfig) -> RunArtifacts:
    mk = build_mollified_kernel(cfg.kernel.to_spec(), cfg.mollifier.to_spec(), cfg.mollifier.eps)
    return RunArtifacts("mollify-table", cfg, tables={"table": mk.to_frame()},
                        metadata={"table_meta.yaml": mk.metadata})


def run_study(cfg: RunConfig) -> StudyReport:
    """Dispatch cfg.study.name with parameters drawn from the config sections"""
    k = cfg.kernel.to_spec()
    m = cfg.mollifier.to_spec()
    study = cfg.study
    thresholds = study.thresholds()
    eps = cfg.mollifier.eps
    schedule = cfg.mollifier.schedule
    seed = cfg.measure.seed
    # figure1 falls back to log repulsion with the bump mollifier unless kernel.dim = 2
    studies: Dict[str, Callable[[], StudyReport]] = {
        "monotonicity": lambda: study_monotonicity(initial_measure(cfg, k), k, schedule, m, thresholds=thresholds),
        "identity": lambda: study_energy_identity(initial_measure(cfg, k), k, eps,
                                                  seeds=range(seed, seed + study.n_seeds),
                                                  n_samples=study.n_samples, m=m, thresholds=thresholds),
        "recovery": lambda: study_recovery(cfg.measure.to_density(k.d), k, schedule, n_samples=study.n_samples,
                                           seed=seed, thresholds=thresholds),
        "minimizers": lambda: study_minimizer_convergence(k, schedule, cfg.measure.n, seed=seed,
                                                          tol=cfg.dynamics.tol, max_iter=cfg.dynamics.max_iter,
                                                          m=m, thresholds=thresholds),
        "figure1": lambda: study_figure1(cfg.measure.n, schedule, t_end=cfg.dynamics.t_end, dt=cfg.dynamics.dt,
                                         steady_tol=cfg.dynamics.steady_tol, thresholds=thresholds,
                                         **({"k": k, "m": m} if k.d == 2 else {})),
        "liminf": lambda: study_liminf(initial_measure(cfg, k), k, schedule, n_seeds=study.n_seeds,
                                       jitter=study.jitter, seed=seed, m=m, thresholds=thresholds),
        "dissipation": lambda: study_dissipation(initial_measure(cfg, k), k, eps, t_end=cfg.dynamics.t_end,
                                                 dt=cfg.dynamics.dt, scheme=cfg.dynamics.scheme, m=m,
                                                 thresholds=thresholds),
        "slope": lambda: study_slope_scaling(initial_measure(cfg, k), k, schedule, pair_scale=study.pair_scale,
                                             m=m, thresholds=thresholds),
        "convexity": lambda: study_convexity(k, eps, n_trials=study.n_trials, n_particles=study.n_particles,
                                             seed=seed, m=m, thresholds=thresholds),
    }
    logger.info(f"Running study {study.name}")
    return studies[study.name]()


def _print_banner(title: str, lines: List[str]):
    logger.info("=" * 60)
    logger.info(title)
    logger.info("=" * 60)
    for line in lines:
        logger.info(line)
    logger.info("=" * 60)


def dispatch(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(cfg.output.dir)

    if args.command == "distance":
        mu = ParticleMeasure.from_csv(args.mu)
        nu = ParticleMeasure.from_csv(args.nu)
        plan = w2_exact(mu, nu)
        print(f"{plan.cost!r},{plan.distance!r}")
        if args.write_plan:
            emit_outputs(RunArtifacts("distance", cfg, plan=plan), out)
        return EXIT_OK

    if args.command == "gamma-sweep":
        report = run_study(cfg)
        emit_outputs(RunArtifacts("gamma-sweep", cfg, report=report), out)
        _print_banner(f"STUDY {report.name.upper()}: {'PASS' if report.passed else 'FAIL'}",
                      [c.line() for c in report.criteria])
        return EXIT_OK if report.passed else EXIT_VERDICT

    runners = {"simulate": run_simulate, "minimize": run_minimize, "mollify-table": run_mollify_table}
    artifacts = runners[args.command](cfg)
    written = emit_outputs(artifacts, out)
    _print_banner(f"{args.command.upper()} COMPLETE", [f"Output: {out}", f"Files: {', '.join(p.name for p in written)}"])
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings.configure_logging()
    try:
        return dispatch(args)
    except (ConfigError, InputError, DomainError, UnsupportedError, FileNotFoundError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except NumericalError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
