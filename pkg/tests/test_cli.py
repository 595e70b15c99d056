"""
Command line and run configuration tests
"""
import importlib
from concurrent.futures import as_completed

import numpy as np
import pandas as pd
import pytest

from src.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, EXIT_VERDICT, dump_config, load_config, main, parse_config
from src.config.settings import settings
from src.energy import interaction
from src.exceptions import ConfigError, FlowDivergenceError, KernelHypothesisError
from src.experiments import CriterionResult, StudyReport
from src.kernels import KernelFamily
from src.measures import InitMode, ParticleMeasure
from src.mollification import MollifierKind

# the package re-exports main(), which hides the submodule attribute
cli_main = importlib.import_module("src.cli.main")

SMALL_RUN = """\
# two dozen particles, a few steps
measure.n = 24
measure.seed = 3
dynamics.dt = 0.005
dynamics.t_end = 0.02
dynamics.trace_every = 2
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL_RUN)
    return path


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg.kernel.family == KernelFamily.POWER_LAW
        assert (cfg.kernel.dim, cfg.kernel.p, cfg.kernel.q) == (3, -1.0, 2.0)
        assert cfg.mollifier.kind == MollifierKind.GAUSSIAN_HEAT
        assert cfg.mollifier.schedule == [0.2, 0.1, 0.05]
        assert cfg.measure.mode == InitMode.MONTE_CARLO
        assert cfg.output.dir == "out"

    def test_values_and_comments(self):
        cfg = parse_config("kernel.dim = 2   # planar\n\nkernel.p = log\nmollifier.kind = compact_bump\n"
                           "mollifier.schedule = [0.3, 0.15]\n")
        assert cfg.kernel.p == "log"
        assert cfg.kernel.to_spec().is_log
        assert cfg.mollifier.kind == MollifierKind.COMPACT_BUMP
        assert cfg.mollifier.schedule == [0.3, 0.15]

    def test_negative_attraction_rejected(self):
        with pytest.raises(KernelHypothesisError, match="q > 0"):
            parse_config("kernel.q = -2\n")

    def test_unknown_key_has_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config("kernel.dim = 3\nkernel.colour = red\n")
        assert info.value.line == 2
        assert info.value.key == "kernel.colour"

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config("solver.tol = 1e-3\n")

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("kernel.dim 3\n")

    def test_type_error_has_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config("# header\nmeasure.n = many\n")
        assert info.value.line == 2
        assert info.value.key == "measure.n"

    def test_unknown_study(self):
        with pytest.raises(ConfigError):
            parse_config("study.name = everything\n")

    def test_general_family_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("kernel.family = general\n")

    @pytest.mark.parametrize("key, value", [("c_r", 3.0), ("c_a", 1.5), ("l_r", 0.25), ("l_a", 2.0)])
    def test_morse_keys(self, key, value):
        cfg = parse_config(f"kernel.family = morse\nkernel.dim = 2\nkernel.morse.{key} = {value}\n")
        assert getattr(cfg.kernel.morse, key) == value
        spec = cfg.kernel.to_spec()
        assert spec.family == KernelFamily.MORSE
        assert spec.d == 2
        assert getattr(spec.morse, key) == value
        assert f"kernel.morse.{key} = {value!r}" in dump_config(cfg)

    def test_morse_round_trip(self):
        cfg = parse_config("kernel.family = morse\nkernel.morse.c_r = 3.0\nkernel.morse.l_a = 2.0\n")
        assert parse_config(dump_config(cfg)) == cfg

    def test_morse_value_error_has_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config("kernel.family = morse\nkernel.morse.c_r = strong\n")
        assert info.value.line == 2
        assert info.value.key == "kernel.morse.c_r"

    @pytest.mark.parametrize("text", ["kernel.morse = 2\n", "kernel.morse.c_x = 2\n", "kernel.dim.x = 2\n",
                                      "kernel.morse.c_r.x = 2\n"])
    def test_bad_nested_keys(self, text):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config(text)

    def test_old_dimension_key_rejected(self):
        with pytest.raises(ConfigError) as info:
            parse_config("kernel.d = 3\n")
        assert info.value.key == "kernel.d"

    def test_duplicate_key_keeps_last(self):
        assert parse_config("measure.n = 10\nmeasure.n = 20\n").measure.n == 20

    def test_dump_round_trip(self):
        cfg = parse_config("kernel.dim = 2\nkernel.p = log\nmollifier.kind = compact_bump\n"
                           "dynamics.steady_tol = 1e-5\nstudy.name = figure1\nmeasure.bounds = [-1.0, 1.0]\n")
        assert parse_config(dump_config(cfg)) == cfg

    def test_thresholds_from_study_section(self):
        cfg = parse_config("study.slope_exponent_slack = 0.5\n")
        assert cfg.study.thresholds().slope_exponent_slack == 0.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "absent.cfg")
        assert load_config(None) == parse_config("")


class TestCommands:
    def test_simulate_outputs(self, small_config, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "--config", str(small_config), "--out", str(out)]) == EXIT_OK
        assert sorted(p.name for p in out.iterdir()) == ["final.csv", "manifest.txt", "trace.csv"]
        final = ParticleMeasure.from_csv(out / "final.csv")
        assert final.n == 24
        trace = pd.read_csv(out / "trace.csv")
        assert trace["t"].iloc[-1] == pytest.approx(0.02)
        assert (trace["E"].diff().dropna() <= 1e-12).all()

    def test_simulate_plots(self, small_config, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "--config", str(small_config), "--out", str(out), "--plots"]) == EXIT_OK
        assert (out / "plot_trace.py").exists()

    def test_manifest_replays(self, small_config, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(small_config), "--out", str(first)]) == EXIT_OK
        manifest = (first / "manifest.txt").read_text()
        assert "# command: simulate" in manifest
        assert main(["simulate", "--config", str(first / "manifest.txt"), "--out", str(second)]) == EXIT_OK
        for name in ("final.csv", "trace.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_seed_override(self, small_config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--config", str(small_config), "--out", str(a), "--seed", "11"])
        main(["simulate", "--config", str(small_config), "--out", str(b)])
        assert "measure.seed = 11" in (a / "manifest.txt").read_text()
        assert (a / "final.csv").read_bytes() != (b / "final.csv").read_bytes()

    def test_distance(self, tmp_path, capsys):
        mu = ParticleMeasure.uniform([[0.0, 0.0], [1.0, 0.0]])
        nu = mu.translate([0.0, 2.0])
        mu.to_csv(tmp_path / "mu.csv")
        nu.to_csv(tmp_path / "nu.csv")
        out = tmp_path / "dist"
        code = main(["distance", str(tmp_path / "mu.csv"), str(tmp_path / "nu.csv"),
                     "--out", str(out), "--write-plan"])
        assert code == EXIT_OK
        cost, distance = (float(v) for v in capsys.readouterr().out.strip().split(","))
        assert cost == pytest.approx(4.0)
        assert distance == pytest.approx(2.0)
        plan = pd.read_csv(out / "plan.csv")
        assert list(plan.columns) == ["i", "j", "mass"]
        assert plan["mass"].sum() == pytest.approx(1.0)

    def test_distance_dimension_mismatch(self, tmp_path):
        ParticleMeasure.dirac([0.0]).to_csv(tmp_path / "a.csv")
        ParticleMeasure.dirac([0.0, 1.0]).to_csv(tmp_path / "b.csv")
        assert main(["distance", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")]) == EXIT_USAGE

    def test_mollify_table(self, tmp_path):
        cfg = tmp_path / "table.cfg"
        cfg.write_text("mollifier.eps = 0.2\n")
        out = tmp_path / "table"
        assert main(["mollify-table", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        table = pd.read_csv(out / "table.csv")
        assert list(table.columns) == ["r", "K_eps", "dK_eps_dr"]
        assert np.all(np.diff(table["r"]) > 0)
        assert (out / "table_meta.yaml").exists()

    def test_config_error_exit_code(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("kernel.q = -2\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == EXIT_USAGE

    def test_missing_config_exit_code(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == EXIT_USAGE

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as info:
            main(["teleport"])
        assert info.value.code == EXIT_USAGE

    def test_numerical_error_exit_code(self, small_config, tmp_path, monkeypatch):
        def diverge(mu0, mk, cfg):
            raise FlowDivergenceError("non-finite particle position near t=0", last_state=mu0, t=0.0)

        monkeypatch.setattr(cli_main, "integrate_flow", diverge)
        code = main(["simulate", "--config", str(small_config), "--out", str(tmp_path / "x")])
        assert code == EXIT_NUMERICAL

    def test_failed_study_exit_code(self, tmp_path, monkeypatch):
        failing = StudyReport("slope", {"seed": 0}, pd.DataFrame({"eps": [0.1]}))
        failing.criteria.append(CriterionResult.check("pair_exponent_rate", 0.5, "<=", 0.15))
        monkeypatch.setattr(cli_main, "run_study", lambda cfg: failing)
        out = tmp_path / "sweep"
        assert main(["gamma-sweep", "--study", "slope", "--out", str(out)]) == EXIT_VERDICT
        assert "Verdict: FAIL" in (out / "report.txt").read_text()
        assert "study.name = slope" in (out / "manifest.txt").read_text()

    @pytest.mark.parametrize("config_line, flags, unordered", [
        ("run.deterministic = false\n", [], True),
        ("", ["--no-deterministic"], True),
        ("run.deterministic = false\n", ["--deterministic"], False),
    ])
    def test_deterministic_switch(self, tmp_path, monkeypatch, config_line, flags, unordered):
        monkeypatch.setattr(settings, "deterministic", True)
        monkeypatch.setattr(settings, "threads", 1)
        calls = []

        def spy(futures):
            calls.append(len(futures))
            return as_completed(futures)

        monkeypatch.setattr(interaction, "as_completed", spy)
        cfg = tmp_path / "run.cfg"
        cfg.write_text(SMALL_RUN + "run.threads = 2\n" + config_line)
        out = tmp_path / "sim"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)] + flags) == EXIT_OK
        assert bool(calls) == unordered
        expected = "false" if unordered else "true"
        assert f"run.deterministic = {expected}" in (out / "manifest.txt").read_text()
