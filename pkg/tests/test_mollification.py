"""
Mollifier and tabulated kernel tests
"""
import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad
from scipy.special import erf

from src.exceptions import DomainError, InputError
from src.mollification import (
    MollifierKind,
    MollifierSpec,
    autocorrelation,
    build_mollified_kernel,
    eval_mollified,
    mollifier_eval,
    sphere_area,
)


def newtonian_repulsion(r, eps):
    """K^r_eps for K^r = 1/r in d=3: Phi_eps is Gaussian with per-axis std 2 eps"""
    sigma = 2.0 * eps
    return erf(r / (sigma * math.sqrt(2.0))) / r


def test_gaussian_value_at_origin_2d():
    assert mollifier_eval(MollifierSpec(), np.zeros(2), 2) == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-14)


def test_bump_vanishes_outside_unit_ball():
    m = MollifierSpec(MollifierKind.COMPACT_BUMP)
    for d in (1, 2, 3):
        x = np.zeros(d)
        x[0] = 1.0
        assert mollifier_eval(m, x, d) == 0.0
        assert mollifier_eval(m, 1.5 * x, d) == 0.0


@pytest.mark.parametrize("kind", list(MollifierKind))
@pytest.mark.parametrize("d", [1, 2, 3])
def test_unit_mass(kind, d):
    m = MollifierSpec(kind, 0.7)
    upper = 0.7 if kind == MollifierKind.COMPACT_BUMP else 30.0
    mass, _ = quad(lambda r: float(m.radial(r, d)) * sphere_area(d) * r ** (d - 1), 0.0, upper,
                   epsabs=0.0, epsrel=1e-12, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_scaling_convention():
    m = MollifierSpec()
    eps = 0.25
    x = np.array([0.1, -0.2, 0.05])
    assert mollifier_eval(m.scaled(eps), x, 3) == pytest.approx(eps ** -3 * mollifier_eval(m, x / eps, 3))


def test_autocorrelation_heat_time_doubles():
    phi = autocorrelation(MollifierSpec(width=0.3), 3)
    assert phi.heat_time == pytest.approx(2 * 0.09)
    assert math.isinf(phi.support_radius)


def test_bump_autocorrelation_support():
    phi = autocorrelation(MollifierSpec(MollifierKind.COMPACT_BUMP), 2)
    assert phi.support_radius == 2.0
    assert np.all(phi.value(np.array([2.0, 2.5, 4.0])) == 0.0)
    mass, _ = quad(lambda r: float(phi.value(r)) * sphere_area(2) * r, 0.0, 2.0, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-6)


def direct_self_convolution(phi, r, d, support):
    """(phi * phi)(x) at |x| = r by quadrature over y, with x on the polar axis"""
    def other(rho, cos_theta):
        return phi(math.sqrt(max(r * r + rho * rho - 2.0 * r * rho * cos_theta, 0.0)))

    tol = {"epsabs": 1e-12, "epsrel": 1e-10}
    if d == 1:
        value, _ = quad(lambda y: phi(abs(y)) * phi(abs(r - y)), -support, support, limit=200, **tol)
        return value
    if d == 2:
        value, _ = dblquad(lambda theta, rho: phi(rho) * other(rho, math.cos(theta)) * rho,
                           0.0, support, 0.0, math.pi, **tol)
        return 2.0 * value
    value, _ = dblquad(lambda theta, rho: phi(rho) * other(rho, math.cos(theta)) * rho * rho * math.sin(theta),
                       0.0, support, 0.0, math.pi, **tol)
    return 2.0 * math.pi * value


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 1.5])
def test_bump_autocorrelation_matches_direct_convolution(d, s):
    m = MollifierSpec(MollifierKind.COMPACT_BUMP, 0.5)
    r = s * m.width

    def phi(u):
        return float(m.radial(np.array([u]), d)[0])

    expected = direct_self_convolution(phi, r, d, m.width)
    assert float(autocorrelation(m, d).value(r)) == pytest.approx(expected, rel=1e-4, abs=1e-8)


def test_width_must_be_positive():
    with pytest.raises(DomainError):
        MollifierSpec(width=0.0)
    with pytest.raises(DomainError):
        MollifierSpec().scaled(-1.0)


def test_origin_values_match_gaussian_closed_forms(newtonian_eps):
    eps = newtonian_eps.eps
    assert newtonian_eps.attractive.origin_value == pytest.approx(2 * 3 * eps ** 2, rel=1e-12)
    assert newtonian_eps.repulsive.origin_value == pytest.approx(math.sqrt(2 / math.pi) / (2 * eps), rel=1e-6)
    assert math.isfinite(newtonian_eps.origin_value)


def test_repulsive_table_matches_erf(newtonian_eps):
    r = np.array([0.003, 0.05, 0.2, 0.7, 1.5, 3.0, 10.0])
    got = eval_mollified(newtonian_eps, r, part="repulsive")
    np.testing.assert_allclose(got, newtonian_repulsion(r, newtonian_eps.eps), rtol=1e-6)


def test_attractive_shift_is_exact(newtonian_eps):
    r = np.array([0.0, 0.4, 2.0, 50.0])
    shift = 0.5 * 4 * 3 * newtonian_eps.eps ** 2
    np.testing.assert_allclose(eval_mollified(newtonian_eps, r, part="attractive"), 0.5 * r ** 2 + shift, rtol=1e-13)


def test_parts_add_up(newtonian_eps):
    r = np.geomspace(1e-4, 20.0, 40)
    total = eval_mollified(newtonian_eps, r)
    parts = eval_mollified(newtonian_eps, r, part="attractive") + eval_mollified(newtonian_eps, r, part="repulsive")
    np.testing.assert_allclose(total, parts, rtol=1e-14)


def test_derivative_zero_at_origin(newtonian_eps):
    assert eval_mollified(newtonian_eps, 0.0, derivative=True) == 0.0
    assert eval_mollified(newtonian_eps, 0.0) == pytest.approx(newtonian_eps.origin_value)


def test_knots_reproduced(newtonian_eps):
    for i in (50, 120, 200):
        r = newtonian_eps.radii[i]
        assert r < newtonian_eps.tail_switch_radius
        assert eval_mollified(newtonian_eps, r) == pytest.approx(newtonian_eps.values[i], rel=1e-12)


def test_derivative_matches_finite_difference(newtonian_eps, rng):
    r = rng.uniform(0.02, 4.0, size=50)
    h = 1e-6 * r
    fd = (eval_mollified(newtonian_eps, r + h) - eval_mollified(newtonian_eps, r - h)) / (2 * h)
    np.testing.assert_allclose(eval_mollified(newtonian_eps, r, derivative=True), fd, rtol=1e-5)


def test_repulsion_increases_as_eps_decreases(newtonian, heat, small_tab, newtonian_eps):
    coarse = build_mollified_kernel(newtonian, heat, 0.2, small_tab)
    r = np.geomspace(0.01, 1.5, 60)
    assert np.all(eval_mollified(coarse, r, part="repulsive") < eval_mollified(newtonian_eps, r, part="repulsive"))
    assert coarse.repulsive.origin_value < newtonian_eps.repulsive.origin_value


def test_lambda_estimate_sign(newtonian_eps):
    assert newtonian_eps.lambda_estimate < 0
    assert newtonian_eps.lambda_constant > 0
    assert newtonian_eps.metadata["lambda_estimate"] == newtonian_eps.lambda_estimate


def test_table_frame_columns(newtonian_eps):
    frame = newtonian_eps.to_frame()
    assert list(frame.columns) == ["r", "K_eps", "dK_eps_dr"]
    assert len(frame) == 512
    assert np.all(np.diff(frame["r"]) > 0)


def test_log_kernel_needs_bump(log_kernel_2d, heat, small_tab):
    with pytest.raises(InputError, match="compact_bump"):
        build_mollified_kernel(log_kernel_2d, heat, 0.1, small_tab)


def test_log_kernel_with_bump_is_finite(log_eps):
    assert math.isfinite(log_eps.origin_value)
    r = np.array([0.5, 1.0, 3.0])
    assert np.all(np.isfinite(eval_mollified(log_eps, r)))


def test_invalid_arguments(newtonian, heat, newtonian_eps):
    with pytest.raises(DomainError):
        build_mollified_kernel(newtonian, heat, 0.0)
    with pytest.raises(DomainError):
        eval_mollified(newtonian_eps, -1.0)
    with pytest.raises(DomainError):
        eval_mollified(newtonian_eps, 1.0, part="both")
