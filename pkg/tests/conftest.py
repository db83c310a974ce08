import numpy as np
import pytest

from qbattery import BatteryModel

SEED = 20240809


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def random_density(rng, dim):
    """Ginibre-normalised random density matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_diagonal_density(rng, dim):
    p = rng.uniform(0.0, 1.0, dim)
    p /= p.sum()
    return np.diag(p.astype(complex))


def coherent_state_density(alpha, dim):
    """Displaced vacuum |alpha><alpha| truncated to dim levels."""
    amps = np.zeros(dim, dtype=complex)
    amps[0] = np.exp(-abs(alpha) ** 2 / 2.0)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return np.outer(amps, amps.conj())


MODELS = {
    "oscillator": BatteryModel.oscillator(12),
    "spin": BatteryModel.spin(5.5),
    "uniform": BatteryModel.uniform_ladder(12),
}


@pytest.fixture(params=sorted(MODELS))
def any_model(request):
    return MODELS[request.param]
