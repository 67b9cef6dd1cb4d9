import networkx as nx
import pytest

from modules.bigraph import Side
from modules.hypercube import (CubeVertex, check_dimension, cube_as_bigraph, cube_edges, even_class,
                               facet_partition, odd_class, ordered_neighbors_by_facet, parse_label)


@pytest.mark.parametrize('n', [1, 2, 3, 5])
def test_parity_classes_split_the_cube(n):
    odd, even = odd_class(n), even_class(n)
    assert len(odd) == len(even) == 1 << (n - 1)
    assert all(v.is_odd for v in odd)
    assert not any(v.is_odd for v in even)
    assert [v.word for v in odd] == sorted(v.word for v in odd)


@pytest.mark.parametrize('n', [2, 3, 4])
def test_edges_match_networkx_hypercube(n):
    edges = list(cube_edges(n))
    assert len(edges) == n << (n - 1)
    ours = nx.Graph()
    ours.add_edges_from((a.word, b.word) for a, b in edges)
    assert nx.is_isomorphic(ours, nx.hypercube_graph(n))
    assert all(a.is_odd and not b.is_odd and (a.word ^ b.word).bit_count() == 1 for a, b in edges)


def test_label_and_coordinates():
    v = CubeVertex(4, 0b0011)
    assert v.label() == '0011'
    assert v.coordinates() == (-1, -1, 1, 1)
    assert parse_label('0011') == v
    assert v.suffix(2) == 0


def test_invalid_vertex():
    with pytest.raises(ValueError):
        CubeVertex(3, 8)


def test_dimension_limits():
    with pytest.raises(ValueError):
        check_dimension(0)


@pytest.mark.parametrize('n, w', [(3, 1), (4, 2), (5, 2)])
def test_facet_partition(n, w):
    partition = facet_partition(n, w)
    assert sorted(partition.classes) == list(range(1 << w))
    assert all(len(members) == 1 << (n - w - 1) for members in partition.classes.values())
    for b, members in partition.classes.items():
        assert all(partition.class_of(v) == b for v in members)


def test_facet_partition_rejects_long_suffix():
    with pytest.raises(ValueError):
        facet_partition(3, 2)


def test_ordered_neighbors_stay_in_facet_first():
    v = CubeVertex(5, 0b00011)
    neighbors = ordered_neighbors_by_facet(v, 2)
    assert len(neighbors) == 5
    assert [nb.suffix(2) for nb in neighbors[:3]] == [v.suffix(2)] * 3
    assert all(nb.suffix(2) != v.suffix(2) for nb in neighbors[3:])


def test_ordered_neighbors_needs_even_vertex():
    with pytest.raises(ValueError):
        ordered_neighbors_by_facet(CubeVertex(3, 1), 1)


@pytest.mark.parametrize('n', [2, 3, 4])
def test_cube_as_bigraph_is_regular(n):
    g, odd, even = cube_as_bigraph(n)
    assert g.edge_count == n << (n - 1)
    assert all(g.degree(u, Side.UPPER) == n for u in range(g.upper_count))
    assert all(g.degree(v, Side.LOWER) == n for v in range(g.lower_count))
    assert [v.word for v in odd] == [v.word for v in odd_class(n)]
    assert [v.word for v in even] == [v.word for v in even_class(n)]
