import pytest

from hexposome.hexgrid import GridSpec

import fixtures


@pytest.fixture(scope="session")
def grid():
    return GridSpec()


@pytest.fixture(scope="session")
def unit_grid():
    return GridSpec(base_edge_s0=1.0, rotation_sign=-1)


@pytest.fixture(scope="session")
def raster():
    return fixtures.synthetic_raster()


@pytest.fixture(scope="session")
def features():
    return fixtures.vector_fixture()
