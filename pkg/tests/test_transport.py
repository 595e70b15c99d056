"""
Optimal transport tests
"""
import math

import numpy as np
import pytest

from src.config.settings import settings
from src.exceptions import DomainError, NumericalError, TransportSizeError, UnsupportedError
from src.measures import ParticleMeasure
from src.transport import TransportPlan, check_plan, displacement_interpolation, w2_brute, w2_entropic, w2_exact


def random_uniform_measure(rng, n, d):
    return ParticleMeasure.uniform(rng.normal(size=(n, d)))


def random_weighted_measure(rng, n, d):
    return ParticleMeasure.normalized(rng.normal(size=(n, d)), rng.uniform(0.1, 1.0, n))


def test_exact_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 8))
        d = int(rng.integers(1, 4))
        mu, nu = random_uniform_measure(rng, n, d), random_uniform_measure(rng, n, d)
        assert w2_exact(mu, nu).cost == pytest.approx(w2_brute(mu, nu).cost, abs=1e-10)


def test_single_diracs():
    plan = w2_exact(ParticleMeasure.dirac([0.0, 0.0]), ParticleMeasure.dirac([3.0, 4.0]))
    assert plan.cost == pytest.approx(25.0)
    assert plan.distance == pytest.approx(5.0)
    assert plan.pairs == [(0, 0, 1.0)]


def test_one_dimensional_sorted_matching():
    mu = ParticleMeasure.uniform([0.0, 1.0, 2.0])
    nu = ParticleMeasure.uniform([2.5, 0.5, 1.5])
    assert w2_exact(mu, nu).cost == pytest.approx(0.25)


def test_translation_cost():
    rng = np.random.default_rng(3)
    mu = random_weighted_measure(rng, 10, 2)
    plan = w2_exact(mu, mu.translate([0.3, -0.4]))
    assert plan.distance == pytest.approx(0.5, rel=1e-10)


def test_metric_axioms():
    rng = np.random.default_rng(11)
    for _ in range(20):
        mu, nu, xi = (random_weighted_measure(rng, int(rng.integers(1, 9)), 2) for _ in range(3))
        d_mn = w2_exact(mu, nu).distance
        assert w2_exact(mu, mu).distance == pytest.approx(0.0, abs=1e-7)
        assert d_mn == pytest.approx(w2_exact(nu, mu).distance, rel=1e-9, abs=1e-12)
        assert d_mn <= w2_exact(mu, xi).distance + w2_exact(xi, nu).distance + 1e-9


def test_plan_marginals():
    rng = np.random.default_rng(5)
    mu, nu = random_weighted_measure(rng, 6, 3), random_weighted_measure(rng, 9, 3)
    plan = w2_exact(mu, nu)
    rows, cols = plan.marginals(mu.n, nu.n)
    np.testing.assert_allclose(rows, mu.weights, atol=1e-12)
    np.testing.assert_allclose(cols, nu.weights, atol=1e-12)
    check_plan(plan, mu, nu)
    assert list(plan.to_frame().columns) == ["i", "j", "mass"]


def test_check_plan_rejects_bad_marginals():
    mu = ParticleMeasure.uniform([[0.0], [1.0]])
    bad = TransportPlan(np.array([0]), np.array([0]), np.array([1.0]), 0.0, 0.0)
    with pytest.raises(NumericalError):
        check_plan(bad, mu, mu)


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        w2_exact(ParticleMeasure.dirac([0.0]), ParticleMeasure.dirac([0.0, 0.0]))


def test_size_cap(monkeypatch):
    monkeypatch.setattr(settings, "max_transport_pairs", 10)
    rng = np.random.default_rng(0)
    with pytest.raises(TransportSizeError):
        w2_exact(random_uniform_measure(rng, 4, 2), random_uniform_measure(rng, 4, 2))


def test_brute_force_limits():
    rng = np.random.default_rng(0)
    with pytest.raises(UnsupportedError):
        w2_brute(random_uniform_measure(rng, 9, 1), random_uniform_measure(rng, 9, 1))
    with pytest.raises(UnsupportedError):
        w2_brute(random_weighted_measure(rng, 3, 1), random_uniform_measure(rng, 3, 1))


def test_entropic_upper_bounds_exact():
    rng = np.random.default_rng(2)
    mu, nu = random_uniform_measure(rng, 20, 2), random_uniform_measure(rng, 20, 2)
    exact = w2_exact(mu, nu).cost
    approx = w2_entropic(mu, nu, reg=1e-2).cost
    scale = float(np.max(np.sum((mu.positions[:, None, :] - nu.positions[None, :, :]) ** 2, axis=-1)))
    # entropic cost exceeds the optimum by at most reg * scale * log(N M)
    assert approx >= exact - 1e-4
    assert approx <= exact + 1e-2 * scale * math.log(400) + 1e-4


def test_entropic_needs_positive_reg():
    mu = ParticleMeasure.dirac([0.0])
    with pytest.raises(DomainError):
        w2_entropic(mu, mu, reg=0.0)


class TestDisplacementInterpolation:
    def test_endpoints(self):
        rng = np.random.default_rng(4)
        mu, nu = random_uniform_measure(rng, 5, 2), random_uniform_measure(rng, 5, 2)
        plan = w2_exact(mu, nu)
        start = displacement_interpolation(plan, mu, nu, 0.0)
        assert sorted(map(tuple, start.positions)) == sorted(map(tuple, mu.positions))
        end = displacement_interpolation(plan, mu, nu, 1.0)
        assert sorted(map(tuple, end.positions)) == sorted(map(tuple, nu.positions))

    def test_geodesic_distances(self):
        rng = np.random.default_rng(8)
        mu, nu = random_uniform_measure(rng, 6, 3), random_uniform_measure(rng, 6, 3)
        plan = w2_exact(mu, nu)
        alpha = 0.3
        mid = displacement_interpolation(plan, mu, nu, alpha)
        assert mid.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert w2_exact(mu, mid).distance == pytest.approx(alpha * plan.distance, rel=1e-8)
        assert w2_exact(mid, nu).distance == pytest.approx((1 - alpha) * plan.distance, rel=1e-8)

    def test_alpha_range(self):
        mu = ParticleMeasure.dirac([0.0])
        plan = w2_exact(mu, mu)
        for alpha in (-0.1, 1.5, math.nan):
            with pytest.raises(DomainError):
                displacement_interpolation(plan, mu, mu, alpha)
