import numpy as np
import pytest

from rabicav import CavityGeometry, DecayRates, PhysicalParams


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def geometry():
    return CavityGeometry(waist=5.96e-3, diameter=50e-3)


@pytest.fixture(scope="session")
def paper_rates(params):
    return DecayRates.simplified(17.73, 17.73, 0.07 * params.g, 0.0466)


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (m + m.conj().T)


def random_density(rng: np.random.Generator, dim: int = 3) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
