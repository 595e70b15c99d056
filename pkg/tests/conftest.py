"""
Shared fixtures
Kernels and cached mollified tables reused across test modules
"""
import numpy as np
import pytest

from src.config.settings import settings
from src.kernels import KernelSpec
from src.mollification import MollifierKind, MollifierSpec, TabulationParams, build_mollified_kernel

settings.show_progress = False


@pytest.fixture(scope="session")
def newtonian() -> KernelSpec:
    """d=3, p=-1, q=2: steady state is the uniform unit ball"""
    return KernelSpec.power_law(3, -1.0, 2.0)


@pytest.fixture(scope="session")
def log_kernel_2d() -> KernelSpec:
    return KernelSpec.power_law(2, "log", 2.0)


@pytest.fixture(scope="session")
def small_tab() -> TabulationParams:
    return TabulationParams(n_tab=512, quad_rtol=1e-9)


@pytest.fixture(scope="session")
def heat() -> MollifierSpec:
    return MollifierSpec()


@pytest.fixture(scope="session")
def newtonian_eps(newtonian, heat, small_tab):
    """K_eps at eps = 0.1"""
    return build_mollified_kernel(newtonian, heat, 0.1, small_tab)


@pytest.fixture(scope="session")
def bump() -> MollifierSpec:
    return MollifierSpec(MollifierKind.COMPACT_BUMP)


@pytest.fixture(scope="session")
def log_eps(log_kernel_2d, bump, small_tab):
    """Log repulsion needs the compactly supported mollifier"""
    return build_mollified_kernel(log_kernel_2d, bump, 0.1, small_tab)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
