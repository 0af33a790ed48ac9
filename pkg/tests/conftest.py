import numpy as np
import pytest

from lassogc import VarModel, builtin_sim_model, is_stable


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def random_stable_model(rng, d=2, p=2, scale=0.4, noise=None):
    """Random stable VAR(p): shrink coefficients until the radius drops below 1."""
    coeffs = [rng.normal(0.0, scale, (d, d)) for _ in range(p)]
    if noise is None:
        w = rng.normal(0.0, 1.0, (d, d))
        noise = w @ w.T / d + 0.1 * np.eye(d)
    model = VarModel(d, p, coeffs, noise)
    while not is_stable(model):
        coeffs = [0.7 * a for a in coeffs]
        model = VarModel(d, p, coeffs, noise)
    return model


@pytest.fixture(scope="session")
def builtin_model():
    return builtin_sim_model()


@pytest.fixture()
def rng():
    return make_rng(20240817)


def ar1_model(a=0.5, sigma2=1.0):
    return VarModel(1, 1, [np.array([[a]])], np.array([[sigma2]]))
