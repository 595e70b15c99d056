"""
Kernel specification tests
"""
import math

import numpy as np
import pytest

from src.exceptions import DomainError, InputError, KernelSingularityError
from src.kernels import (
    KernelFamily,
    KernelSpec,
    eval_kernel,
    eval_kernel_grad,
    radial_derivative,
    spherical_mean,
    split_kernel,
)


def test_newtonian_values(newtonian):
    assert eval_kernel(newtonian, 1.0) == pytest.approx(1.5)
    assert eval_kernel(newtonian, 2.0) == pytest.approx(2.0 + 0.5)
    assert math.isinf(eval_kernel(newtonian, 0.0))


def test_log_kernel_values(log_kernel_2d):
    assert eval_kernel(log_kernel_2d, 1.0) == pytest.approx(0.5)
    assert eval_kernel(log_kernel_2d, math.e) == pytest.approx(0.5 * math.e ** 2 - 1.0)


def test_array_evaluation_keeps_shape(newtonian):
    r = np.linspace(0.5, 2.0, 12).reshape(3, 4)
    assert eval_kernel(newtonian, r).shape == (3, 4)


def test_split_parts_sum_to_kernel(newtonian):
    attractive, repulsive = split_kernel(newtonian)
    r = np.geomspace(0.05, 20.0, 50)
    np.testing.assert_allclose(attractive(r) + repulsive(r), eval_kernel(newtonian, r), rtol=1e-14)
    np.testing.assert_allclose(repulsive(r), 1.0 / r, rtol=1e-14)


@pytest.mark.parametrize("p, q, d", [(-1.0, 2.0, 3), (-0.5, 1.5, 2), ("log", 2.0, 2), (-0.3, 1.0, 1)])
def test_radial_derivative_matches_finite_difference(p, q, d):
    k = KernelSpec.power_law(d, p, q)
    r = np.array([0.3, 0.9, 1.7, 4.0])
    h = 1e-6
    fd = (eval_kernel(k, r + h) - eval_kernel(k, r - h)) / (2 * h)
    np.testing.assert_allclose(radial_derivative(k, r), fd, rtol=1e-6)


def test_gradient_is_radial(newtonian):
    x = np.array([0.3, -0.4, 1.2])
    r = np.linalg.norm(x)
    np.testing.assert_allclose(eval_kernel_grad(newtonian, x), radial_derivative(newtonian, r) * x / r)


def test_gradient_at_origin_raises(newtonian):
    with pytest.raises(KernelSingularityError):
        eval_kernel_grad(newtonian, np.zeros(3))


def test_gradient_dimension_checked(newtonian):
    with pytest.raises(DomainError):
        eval_kernel_grad(newtonian, np.ones(2))


def test_negative_radius_rejected(newtonian):
    with pytest.raises(DomainError):
        eval_kernel(newtonian, -0.1)


@pytest.mark.parametrize("kwargs, error", [
    ({"d": 3, "p": 0.0, "q": 2.0}, InputError),
    ({"d": 3, "p": "exp", "q": 2.0}, InputError),
    ({"d": 3, "p": -1.0, "q": 0.0}, InputError),
    ({"d": 4, "p": -1.0, "q": 2.0}, DomainError),
])
def test_invalid_power_law(kwargs, error):
    with pytest.raises(error):
        KernelSpec.power_law(**kwargs)


def test_log_spelling_normalized():
    k = KernelSpec.power_law(2, " LOG ", 2.0)
    assert k.is_log
    assert k.is_singular


def test_morse_constructor():
    k = KernelSpec.morse_potential(2, 2.0, 1.0, 0.5, 1.0)
    assert k.family == KernelFamily.MORSE
    assert not k.is_singular
    assert "Morse" in k.label
    assert eval_kernel(k, 0.0) == pytest.approx(1.0)


def test_spherical_mean_of_harmonic_profile_in_3d():
    # 1/r is harmonic away from 0: the sphere mean equals the centre value
    profile = lambda r: 1.0 / r
    x = np.array([2.0, 0.0, 0.0])
    assert spherical_mean(profile, x, 0.5, 3, n=2000) == pytest.approx(0.5, rel=1e-3)
