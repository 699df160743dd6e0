import numpy as np
import pytest

import morreylab as ml


@pytest.fixture(scope="session")
def lat_h001():
    # h = 0.01, the spacing the quadrature examples are quoted at
    return ml.make_lattice(1, 4.0, 801)


@pytest.fixture(scope="session")
def lat_257():
    return ml.make_lattice(1, 4.0, 257)


@pytest.fixture(scope="session")
def lat_129():
    return ml.make_lattice(1, 4.0, 129)


@pytest.fixture(scope="session")
def centered_family():
    return ml.BallFamily.centered([0.25, 0.5, 1.0, 2.0])


@pytest.fixture(scope="session")
def default_family(lat_257):
    return ml.ExperimentConfig(N=257).make_family(lat_257)


@pytest.fixture()
def rng():
    return np.random.default_rng(20250809)
