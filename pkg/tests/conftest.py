import numpy as np
import pytest

from lambda_knob.model import (PB_GAMMA, PB_LAMBDA13, RB_GAMMA, DriveFields,
                               validate_params)


@pytest.fixture
def rb():
    return validate_params({"gamma": RB_GAMMA, "density": 2e12})


@pytest.fixture
def pb():
    return validate_params({"gamma": PB_GAMMA, "density": 2e14, "lambda13": PB_LAMBDA13})


@pytest.fixture
def fig1_drives():
    return DriveFields(G=10 * RB_GAMMA, Omega=5 * RB_GAMMA)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_setup(rng, gamma=RB_GAMMA, dephasing=True):
    """Random but physical parameters for invariant checks."""
    params = validate_params({
        "gamma": gamma, "density": 2e12,
        "Gamma12": rng.uniform(0, 2) * gamma if dephasing else 0.0,
        "Gamma13": rng.uniform(0, 2) * gamma if dephasing else 0.0,
        "Gamma23": rng.uniform(0, 0.5) * gamma if dephasing else 0.0,
    })
    drives = DriveFields(
        G=complex(rng.uniform(1, 50), rng.uniform(-10, 10)) * gamma,
        Omega=complex(rng.uniform(0, 20), rng.uniform(-5, 5)) * gamma,
        Delta2=rng.uniform(-5, 5) * gamma,
        Delta3=rng.uniform(-5, 5) * gamma,
    )
    return params, drives
