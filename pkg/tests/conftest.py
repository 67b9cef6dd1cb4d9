import pytest

from modules.bigraph import BipartiteGraph
from modules.harness import gen_random_bipartite
from utils.utils import make_rng


@pytest.fixture
def rng():
    return make_rng(20240311)


@pytest.fixture
def k22():
    return BipartiteGraph.from_edges(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)])


@pytest.fixture
def path_graph():
    """Tree: u0-l0-u1-l1-u2-l2"""
    return BipartiteGraph.from_edges(3, 3, [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)])


@pytest.fixture
def complete():
    def build(upper_count, lower_count):
        return BipartiteGraph(upper_count, lower_count, [(1 << lower_count) - 1] * upper_count)
    return build


@pytest.fixture(scope='session')
def dense_256():
    return gen_random_bipartite(256, 256, 0.9, make_rng(7))
