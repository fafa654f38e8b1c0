import numpy as np
import pytest

from nma_diffuse import assemble_graph, toy_dataset


@pytest.fixture(scope="session")
def toy():
    return toy_dataset()


@pytest.fixture(scope="session")
def toy_graph(toy):
    return assemble_graph(toy)


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
