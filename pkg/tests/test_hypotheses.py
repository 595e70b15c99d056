"""
Hypothesis checker tests
"""
import numpy as np
import pytest

from src.exceptions import ConfigError, KernelHypothesisError
from src.kernels import HypothesisStatus, KernelSpec, check_hypotheses, ensure_admissible


def test_newtonian_is_power_law_regime(newtonian):
    report = check_hypotheses(newtonian)
    assert report["E1"] == HypothesisStatus.SATISFIED
    assert report["E2"] == HypothesisStatus.SATISFIED
    assert report.regime == "E"
    assert report.violations() == []


@pytest.mark.parametrize("p, q, d, fragment", [
    (-1.0, -2.0, 3, "q > 0"),
    (-1.0, 3.0, 3, "q <= 2"),
    (0.5, 2.0, 3, "p < 0"),
    (-1.5, 2.0, 3, "p >= 2-d"),
])
def test_e2_violations_name_the_bound(p, q, d, fragment):
    report = check_hypotheses(KernelSpec.power_law(d, p, q))
    assert report["E2"] == HypothesisStatus.VIOLATED
    assert fragment in report.results["E2"].witness


def test_negative_attraction_rejected():
    with pytest.raises(KernelHypothesisError, match="q > 0"):
        ensure_admissible(KernelSpec.power_law(3, -1.0, -2.0))


def test_hypothesis_error_is_config_error():
    assert issubclass(KernelHypothesisError, ConfigError)


def test_log_kernel_in_general_regime(log_kernel_2d):
    report = check_hypotheses(log_kernel_2d)
    assert report["E1"] == HypothesisStatus.NOT_APPLICABLE
    assert report["H4"] == HypothesisStatus.SATISFIED
    assert report.regime == "H"


def test_morse_condition():
    good = check_hypotheses(KernelSpec.morse_potential(2, 2.0, 1.0, 0.5, 1.0))
    assert good["MORSE"] == HypothesisStatus.SATISFIED
    bad = check_hypotheses(KernelSpec.morse_potential(2, 1.0, 2.0, 0.5, 1.0))
    assert bad["MORSE"] == HypothesisStatus.VIOLATED


def test_summary_lists_every_hypothesis(newtonian):
    text = check_hypotheses(newtonian).summary()
    for name in ("E1", "E2", "H1", "H2", "H3", "H4", "H5", "MORSE"):
        assert f"({name})" in text


@pytest.mark.parametrize("spec", [KernelSpec.power_law(3, -1.0, 2.0), KernelSpec.power_law(2, "log", 2.0),
                                  KernelSpec.power_law(3, -1.5, 2.0)])
def test_harmonic_and_superharmonic_repulsion_pass_sphere_means(spec):
    assert check_hypotheses(spec)["H4"] == HypothesisStatus.SATISFIED


def test_sphere_mean_above_repulsion_fails_h4(newtonian, monkeypatch):
    monkeypatch.setattr("src.kernels.hypotheses.spherical_mean",
                        lambda profile, x, rho, d, n=200: float(profile(np.linalg.norm(x))) + 1.0)
    result = check_hypotheses(newtonian).results["H4"]
    assert result.status == HypothesisStatus.VIOLATED
    assert "sphere mean exceeds K^r" in result.witness
