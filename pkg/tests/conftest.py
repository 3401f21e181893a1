import numpy as np
import pytest

from commfeat.graphs import Graph


@pytest.fixture
def triangle():
    return Graph(3, frozenset({(0, 1), (0, 2), (1, 2)}), ("a", "b", "c"))


@pytest.fixture
def path4():
    """Path a—b—c—d."""
    return Graph(4, frozenset({(0, 1), (1, 2), (2, 3)}), ("a", "b", "c", "d"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
