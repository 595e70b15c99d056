"""
Interaction energy, velocity and reference energy tests
"""
import math
from concurrent.futures import as_completed

import numpy as np
import pytest

from src.config.settings import settings
from src.energy import (
    DiagonalPolicy,
    energy_particles,
    energy_density_reference,
    metric_slope,
    omega,
    velocity_field,
)
from src.energy import interaction
from src.energy.interaction import OMEGA_BREAK
from src.exceptions import DomainError, InputError, KernelSingularityError
from src.kernels import KernelSpec, eval_kernel
from src.measures import DensitySpec, ParticleMeasure
from src.mollification import eval_mollified


def energy_gradient_fd(mu, k, policy, h=1e-6):
    grad = np.zeros_like(mu.positions)
    base = np.array(mu.positions)
    for i in range(mu.n):
        for a in range(mu.d):
            plus, minus = base.copy(), base.copy()
            plus[i, a] += h
            minus[i, a] -= h
            grad[i, a] = (energy_particles(mu.with_positions(plus), k, policy).total
                          - energy_particles(mu.with_positions(minus), k, policy).total) / (2 * h)
    return grad


@pytest.fixture
def cloud(rng):
    return ParticleMeasure.normalized(rng.uniform(-0.5, 0.5, size=(6, 3)), rng.uniform(0.5, 1.0, 6))


class TestEnergy:
    def test_pair_energy(self, newtonian):
        mu = ParticleMeasure.uniform([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        breakdown = energy_particles(mu, newtonian)
        assert breakdown.total == pytest.approx(0.5 * float(eval_kernel(newtonian, 2.0)))
        assert breakdown.attractive == pytest.approx(1.0)
        assert breakdown.repulsive == pytest.approx(0.25)

    def test_include_adds_diagonal(self, newtonian_eps, cloud):
        exclude = energy_particles(cloud, newtonian_eps, DiagonalPolicy.EXCLUDE)
        include = energy_particles(cloud, newtonian_eps, DiagonalPolicy.INCLUDE)
        diagonal = float(np.sum(cloud.weights ** 2)) * newtonian_eps.origin_value
        assert include.total - exclude.total == pytest.approx(diagonal, rel=1e-12)
        assert include.total == pytest.approx(include.attractive + include.repulsive)

    def test_include_needs_mollified_kernel(self, newtonian, cloud):
        with pytest.raises(DomainError):
            energy_particles(cloud, newtonian, DiagonalPolicy.INCLUDE)

    def test_single_dirac_warns(self, newtonian):
        breakdown = energy_particles(ParticleMeasure.dirac([0.0, 0.0, 0.0]), newtonian)
        assert breakdown.total == 0.0
        assert breakdown.warnings

    def test_single_dirac_include(self, newtonian_eps):
        breakdown = energy_particles(ParticleMeasure.dirac([1.0, 0.0, 0.0]), newtonian_eps, DiagonalPolicy.INCLUDE)
        assert breakdown.total == pytest.approx(newtonian_eps.origin_value)

    def test_translation_invariance(self, newtonian_eps, cloud):
        e0 = energy_particles(cloud, newtonian_eps, DiagonalPolicy.INCLUDE).total
        e1 = energy_particles(cloud.translate([3.0, -1.0, 0.5]), newtonian_eps, DiagonalPolicy.INCLUDE).total
        assert e1 == pytest.approx(e0, rel=1e-12)

    def test_thread_count_does_not_change_result(self, newtonian_eps, rng, monkeypatch):
        monkeypatch.setattr(settings, "block_size", 32)
        mu = ParticleMeasure.uniform(rng.normal(size=(150, 3)))
        serial = energy_particles(mu, newtonian_eps, DiagonalPolicy.INCLUDE, threads=1, deterministic=True)
        threaded = energy_particles(mu, newtonian_eps, DiagonalPolicy.INCLUDE, threads=4, deterministic=True)
        assert threaded.total == serial.total

    def test_unordered_reduction_path(self, newtonian_eps, rng, monkeypatch):
        monkeypatch.setattr(settings, "block_size", 32)
        calls = []

        def spy(futures):
            calls.append(len(futures))
            return as_completed(futures)

        monkeypatch.setattr(interaction, "as_completed", spy)
        mu = ParticleMeasure.uniform(rng.normal(size=(150, 3)))
        ordered = energy_particles(mu, newtonian_eps, DiagonalPolicy.INCLUDE, threads=4, deterministic=True)
        assert calls == []
        fast = energy_particles(mu, newtonian_eps, DiagonalPolicy.INCLUDE, threads=4, deterministic=False)
        assert calls == [5]
        assert fast.total == pytest.approx(ordered.total, rel=1e-12)
        energy_particles(mu, newtonian_eps, DiagonalPolicy.INCLUDE, threads=1, deterministic=False)
        assert calls == [5]

    def test_unordered_reduction_follows_settings(self, newtonian_eps, rng, monkeypatch):
        monkeypatch.setattr(settings, "block_size", 32)
        monkeypatch.setattr(settings, "deterministic", False)
        calls = []

        def spy(futures):
            calls.append(len(futures))
            return as_completed(futures)

        monkeypatch.setattr(interaction, "as_completed", spy)
        mu = ParticleMeasure.uniform(rng.normal(size=(64, 3)))
        energy_particles(mu, newtonian_eps, DiagonalPolicy.INCLUDE, threads=2)
        assert calls == [2]


class TestVelocity:
    def test_matches_energy_gradient_mollified(self, newtonian_eps, cloud):
        v = velocity_field(cloud, newtonian_eps)
        grad = energy_gradient_fd(cloud, newtonian_eps, DiagonalPolicy.INCLUDE)
        np.testing.assert_allclose(v, -grad / cloud.weights[:, None], rtol=1e-5, atol=1e-7)

    def test_matches_energy_gradient_exact(self, newtonian, cloud):
        v = velocity_field(cloud, newtonian)
        grad = energy_gradient_fd(cloud, newtonian, DiagonalPolicy.EXCLUDE)
        np.testing.assert_allclose(v, -grad / cloud.weights[:, None], rtol=1e-5, atol=1e-7)

    def test_momentum_vanishes(self, newtonian_eps, cloud):
        v = velocity_field(cloud, newtonian_eps)
        np.testing.assert_allclose(cloud.weights @ v, 0.0, atol=1e-12)

    def test_pair_velocity(self, newtonian_eps):
        r = 0.7
        mu = ParticleMeasure.uniform([[0.0, 0.0, 0.0], [r, 0.0, 0.0]])
        v = velocity_field(mu, newtonian_eps)
        slope = eval_mollified(newtonian_eps, r, derivative=True)
        np.testing.assert_allclose(v[0], [slope, 0.0, 0.0], rtol=1e-12)
        assert metric_slope(mu, newtonian_eps) == pytest.approx(abs(slope), rel=1e-12)

    def test_coincident_particles_singular(self, newtonian):
        mu = ParticleMeasure.uniform([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        with pytest.raises(KernelSingularityError):
            velocity_field(mu, newtonian)

    def test_coincident_particles_mollified(self, newtonian_eps):
        mu = ParticleMeasure.uniform([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        np.testing.assert_array_equal(velocity_field(mu, newtonian_eps), 0.0)


class TestOmega:
    def test_small_arguments(self):
        assert omega(0.0) == 0.0
        assert omega(0.05) == pytest.approx(-0.05 * math.log(0.05))

    def test_continuous_at_break(self):
        below = omega(OMEGA_BREAK * (1 - 1e-12))
        above = omega(OMEGA_BREAK * (1 + 1e-12))
        assert above == pytest.approx(below, rel=1e-9)

    def test_concave_and_increasing(self):
        x = np.linspace(1e-4, 2.0, 2001)
        values = omega(x)
        assert np.all(np.diff(values) > 0)
        assert np.all(np.diff(values, 2) <= 1e-12)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            omega(-1e-3)


class TestReferenceEnergy:
    def test_newtonian_uniform_ball(self, newtonian):
        # 3/5 from the quadratic part plus 6/5 from the Coulomb self energy
        value = energy_density_reference(DensitySpec.uniform_ball(3), newtonian, method="radial")
        assert value == pytest.approx(1.8, rel=2e-3)

    def test_log_uniform_disk_on_grid(self, log_kernel_2d):
        # 1/2 from the quadratic part plus 1/4 from the logarithmic self energy
        value = energy_density_reference(DensitySpec.uniform_ball(2), log_kernel_2d, resolution=64)
        assert value == pytest.approx(0.75, rel=1e-2)

    def test_grid_needs_power_law(self):
        morse = KernelSpec.morse_potential(2, 2.0, 1.0, 0.5, 1.0)
        with pytest.raises(InputError):
            energy_density_reference(DensitySpec.uniform_ball(2), morse, method="grid")

    def test_radial_needs_radial_density(self, log_kernel_2d):
        box = DensitySpec.uniform_box([[-1.0, 1.0], [-1.0, 1.0]])
        with pytest.raises(InputError):
            energy_density_reference(box, log_kernel_2d, method="radial")

    @pytest.mark.parametrize("kwargs", [
        {"method": "spectral"},
        {"resolution": 0},
    ])
    def test_invalid_arguments(self, newtonian, kwargs):
        with pytest.raises(InputError):
            energy_density_reference(DensitySpec.uniform_ball(3), newtonian, **kwargs)

    def test_dimension_mismatch(self, newtonian):
        with pytest.raises(InputError):
            energy_density_reference(DensitySpec.uniform_ball(2), newtonian)

    def test_non_integrable_repulsion(self):
        with pytest.raises(InputError, match="not locally integrable"):
            energy_density_reference(DensitySpec.uniform_ball(3), KernelSpec.power_law(3, -3.0, 2.0))
