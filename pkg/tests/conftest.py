import numpy as np
import pytest

from teebound import stab
from teebound.lattice import Lattice, build_annulus_partition


@pytest.fixture(scope="session")
def lat6():
    return Lattice(6, 6)


@pytest.fixture(scope="session")
def toric6(lat6):
    return stab.toric_code_ground_state(lat6)


@pytest.fixture(scope="session")
def lat12():
    return Lattice(12, 12)


@pytest.fixture(scope="session")
def toric12(lat12):
    return stab.toric_code_ground_state(lat12)


@pytest.fixture(scope="session")
def annulus12(lat12):
    return build_annulus_partition(lat12, (6, 6), 2, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
