"""
Convergence study tests

Fast tests use small particle counts and coarse tables; the full acceptance
runs are marked slow.
"""
import math

import numpy as np
import pandas as pd
import pytest

from src.exceptions import InputError
from src.experiments import (
    FRAMING,
    AcceptanceThresholds,
    CriterionResult,
    StudyReport,
    annular_profile,
    fitted_exponent,
    flatness,
    paired_energy,
    strictly_monotone,
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
from src.experiments.common import BUMP, GAUSSIAN
from src.kernels import KernelSpec
from src.measures import DensitySpec, InitMode, ParticleMeasure, init_particles


@pytest.fixture
def spread():
    """Six well separated particles in R^3"""
    positions = np.vstack([np.eye(3), -np.eye(3)]) * 0.8
    return ParticleMeasure.uniform(positions)


def pair(r):
    return ParticleMeasure.uniform([[0.0, 0.0, 0.0], [r, 0.0, 0.0]])


class TestReports:
    def test_nan_never_passes(self):
        assert not CriterionResult.check("x", math.nan, "<=", 1.0).passed
        assert CriterionResult.check("x", 0.5, "<=", 1.0).passed
        assert not CriterionResult.check("x", 2.0, "<", 2.0).passed

    def test_empty_report_fails(self):
        assert not StudyReport("empty", {}, pd.DataFrame()).passed

    def test_strictly_monotone(self):
        assert strictly_monotone([3.0, 2.0, 1.0]) == -1.0
        assert strictly_monotone([3.0, 3.0, 1.0]) == 0.0
        assert strictly_monotone([1.0, 2.0], decreasing=False) == -1.0
        assert strictly_monotone([1.0]) == -math.inf

    def test_fitted_exponent(self):
        eps = np.array([0.2, 0.1, 0.05])
        assert fitted_exponent(eps, 3.0 * eps ** -2) == pytest.approx(-2.0)

    def test_paired_energy_constant_distance(self, newtonian):
        x = np.zeros((50, 3))
        y = np.tile([2.0, 0.0, 0.0], (50, 1))
        estimate = paired_energy(newtonian, x, y)
        assert estimate["total"] == (pytest.approx(2.5), 0.0)
        assert estimate["attractive"][0] == pytest.approx(2.0)

    def test_write_report(self, tmp_path):
        report = StudyReport("demo", {"seed": 0}, pd.DataFrame({"eps": [0.2, 0.1], "value": [1.0, 2.0]}))
        report.criteria.append(CriterionResult.check("value_bound", 2.0, "<=", 3.0, "largest value"))
        report.notes.append("a note")
        written = write_report(report, tmp_path / "demo")
        assert [p.name for p in written] == ["report.txt", "metrics.csv", "plot_metrics.py"]
        text = written[0].read_text()
        assert FRAMING in text
        assert "[PASS] value_bound" in text
        assert "a note" in text
        assert text.rstrip().endswith("Verdict: PASS")
        assert "demo" in written[2].read_text()


class TestAnnularProfile:
    def test_uniform_disk_is_flat(self):
        mu = init_particles(DensitySpec.uniform_ball(2), 20_000, InitMode.MONTE_CARLO, seed=1)
        profile = annular_profile(mu)
        assert len(profile) == 10
        assert profile["mass"].sum() == pytest.approx(1.0)
        outer = profile["r_outer"].iloc[-1]
        assert profile["density"].mean() * math.pi * outer ** 2 == pytest.approx(1.0)
        assert flatness(profile) < 0.15

    def test_peaked_density_is_not_flat(self):
        mu = init_particles(DensitySpec.figure1_polynomial(2), 20_000, InitMode.MONTE_CARLO, seed=1)
        assert flatness(annular_profile(mu)) > 0.5


class TestVariationalStudies:
    def test_monotonicity(self, newtonian, small_tab, spread):
        report = study_monotonicity(spread, newtonian, [0.05, 0.2, 0.1], tab=small_tab)
        assert list(report.metrics["eps"]) == [0.2, 0.1, 0.05]
        assert report.passed
        assert np.all(np.diff(report.metrics["Kr_eps_0"]) > 0)

    def test_monotonicity_needs_heat(self, newtonian, small_tab, spread):
        with pytest.raises(InputError):
            study_monotonicity(spread, newtonian, [0.2, 0.1], m=BUMP, tab=small_tab)

    def test_identity_structure(self, newtonian, small_tab):
        mu = ParticleMeasure.uniform([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]])
        report = study_energy_identity(mu, newtonian, 0.2, seeds=range(3), n_samples=20_000, tab=small_tab)
        assert len(report.metrics) == 3
        assert set(report.metrics["E_eps"]) == {report.metrics["E_eps"].iloc[0]}
        assert report.metrics["z"].median() < 4.0

    def test_liminf(self, newtonian, small_tab, spread):
        report = study_liminf(spread, newtonian, [0.2, 0.1], n_seeds=3, tab=small_tab)
        assert report.passed
        assert np.all(report.metrics["min_gap"] <= report.metrics["max_gap"])

    def test_slope_scaling(self, newtonian, small_tab, spread):
        report = study_slope_scaling(spread, newtonian, [0.1, 0.05, 0.025], tab=small_tab)
        assert report.criterion("slope_exponent_bound").passed
        assert report.criterion("pair_exponent_rate").passed
        assert report.parameters["pair_exponent"] == pytest.approx(-2.0, abs=0.15)

    def test_recovery_structure(self, newtonian):
        rho = DensitySpec.uniform_ball(3)
        report = study_recovery(rho, newtonian, [0.2, 0.1], n_samples=5000, reference=1.8)
        assert set(report.metrics["sequence"]) == {"recovery", "matched"}
        assert len(report.metrics) == 4
        matched = report.metrics[report.metrics["sequence"] == "matched"]
        np.testing.assert_allclose(matched["delta"], matched["eps"])
        # M2 of the unit ball is 3/5 and each coordinate gains variance 2(delta^2 + eps^2)
        np.testing.assert_allclose(matched["Ea_exact"], 0.6 + 3 * 4 * matched["eps"] ** 2)
        assert {c.name for c in report.criteria} == {"recovery_gap_decreasing", "matched_final_gap",
                                                     "attractive_moment_form"}

    def test_recovery_dimension_checked(self, newtonian):
        with pytest.raises(InputError):
            study_recovery(DensitySpec.uniform_ball(2), newtonian, [0.1], n_samples=10, reference=1.0)

    def test_convexity_structure(self, newtonian, small_tab):
        report = study_convexity(newtonian, 0.2, n_trials=5, n_particles=3, tab=small_tab)
        assert len(report.metrics) == 5
        assert report.parameters["lambda_estimate"] < 0
        assert np.all(report.metrics["w2_sq"] >= 0)
        assert report.notes


class TestFlowStudies:
    def test_dissipation(self, newtonian, small_tab):
        report = study_dissipation(pair(0.6), newtonian, 0.1, t_end=0.1, dt=1e-3, tab=small_tab)
        assert report.passed
        assert np.all(report.metrics["dE_dt"] <= 0)

    def test_figure1_needs_two_dimensions(self, newtonian):
        with pytest.raises(InputError):
            study_figure1(16, [0.2], k=newtonian)

    def test_figure1_log_kernel_needs_bump(self, small_tab):
        with pytest.raises(InputError, match="compact_bump"):
            study_figure1(16, [0.2], t_end=0.01, m=GAUSSIAN, tab=small_tab)

    def test_figure1_short_run(self, small_tab):
        report = study_figure1(100, [0.3], t_end=0.05, dt=1e-2, tab=small_tab)
        assert report.metrics["mass"].iloc[0] == pytest.approx(1.0)
        assert report.parameters["initial_normalization"] == pytest.approx(3.0 / math.pi)
        # a single eps cannot show improvement
        assert not report.criterion("flatness_improving").passed


@pytest.mark.slow
class TestAcceptance:
    def test_identity(self, newtonian, spread):
        assert study_energy_identity(spread, newtonian, 0.1).passed

    def test_recovery(self, newtonian):
        report = study_recovery(DensitySpec.uniform_ball(3), newtonian, [0.2, 0.1, 0.05, 0.025])
        assert report.passed, report.render()

    def test_minimizers(self, newtonian):
        report = study_minimizer_convergence(newtonian, [0.2, 0.1, 0.05], 400)
        assert report.passed, report.render()

    def test_figure1(self):
        report = study_figure1(400, [0.2, 0.1, 0.05])
        assert report.passed, report.render()

    def test_convexity(self, newtonian):
        report = study_convexity(newtonian, 0.1)
        assert report.passed, report.render()

    def test_thresholds_are_configurable(self, newtonian, spread):
        strict = AcceptanceThresholds(slope_exponent_slack=1e-6)
        report = study_slope_scaling(spread, newtonian, [0.1, 0.05, 0.025], thresholds=strict)
        assert not report.criterion("pair_exponent_rate").passed
