import networkx as nx
import numpy as np
import pytest
from networkx.algorithms import isomorphism

from modules.bigraph import BipartiteGraph, GraphFormatError, Side
from modules.blocks import block_embed_cube, generate_block_graph
from modules.condensation import StandardPairCertificate, embed_regular_noncondensed, find_standard_pair
from modules.embedder_drc import PatternEmbedding, drc_embed_cube, verify_embedding, verify_pattern_embedding
from modules.harness import (brute_force_embed, cube_embedding_from_pattern, gen_random_bipartite, random_coloring,
                             read_embedding, write_embedding)
from modules.hypercube import cube_as_bigraph
from utils.utils import make_rng


def to_networkx(g):
    nxg = nx.Graph()
    nxg.add_nodes_from(('U', u) for u in range(g.upper_count))
    nxg.add_nodes_from(('L', v) for v in range(g.lower_count))
    nxg.add_edges_from((('U', u), ('L', v)) for u, v in g.edges())
    return nxg


class TestBruteForce:
    def test_square_in_k22(self, k22):
        search = brute_force_embed(k22, 2)
        assert search.status == 'embedded'
        e = cube_embedding_from_pattern(2, search.embedding, swapped=search.swapped)
        assert verify_embedding(k22, e) == []

    def test_tree_has_no_square(self, path_graph):
        search = brute_force_embed(path_graph, 2)
        assert search.status == 'impossible'
        assert search.embedding is None

    def test_swapped_orientation(self, complete):
        star = BipartiteGraph(1, 3, [0b111])
        host = complete(3, 1)
        search = brute_force_embed(host, star)
        assert search.status == 'embedded'
        assert search.swapped
        assert verify_pattern_embedding(host.transpose(), star, search.embedding) == []

    @pytest.mark.parametrize('seed', range(40))
    def test_agrees_with_networkx(self, seed):
        rng = make_rng(seed)
        up, low = (int(x) for x in rng.integers(3, 7, size=2))
        g = gen_random_bipartite(up, low, float(rng.uniform(0.4, 0.95)), rng)
        for n in (2, 3):
            pattern, _, _ = cube_as_bigraph(n)
            search = brute_force_embed(g, pattern)
            expected = isomorphism.GraphMatcher(to_networkx(g), to_networkx(pattern)).subgraph_is_monomorphic()
            assert (search.status == 'embedded') == expected
            if search.status == 'embedded':
                host = g.transpose() if search.swapped else g
                assert verify_pattern_embedding(host, pattern, search.embedding) == []
                e = cube_embedding_from_pattern(n, search.embedding, swapped=search.swapped)
                assert verify_embedding(g, e) == []
            else:
                assert search.status == 'impossible'

    def test_pattern_too_large(self, complete):
        with pytest.raises(ValueError):
            brute_force_embed(complete(16, 16), 5)

    def test_zero_budget_times_out(self, complete):
        search = brute_force_embed(complete(4, 4), 3, time_budget=0)
        assert search.status == 'timeout'

    def test_mismatched_pattern_embedding(self):
        with pytest.raises(ValueError):
            cube_embedding_from_pattern(3, PatternEmbedding((0, 1), (0, 1)))


def regular_attempt(g, pattern, rng):
    """Q/W/R embedder next to a standard pair, None when no pair is certified"""
    try:
        pair = find_standard_pair(g, 0.1, 1e-10, 3, 20, rng)
    except ValueError:
        return None
    if not isinstance(pair, StandardPairCertificate):
        return None
    return embed_regular_noncondensed(g, pair, pattern, 8, 0.5, rng)


class TestOracleConsistency:
    """No randomized embedder succeeds where exhaustive search proves Q_n absent"""

    @pytest.mark.parametrize('seed', range(100))
    def test_drc_on_random_hosts(self, seed):
        rng = make_rng(seed)
        up, low = (int(x) for x in rng.integers(4, 9, size=2))
        g = gen_random_bipartite(up, low, float(rng.uniform(0.2, 0.9)), rng)
        for n in (2, 3):
            result = drc_embed_cube(g, n, 3, rng)
            search = brute_force_embed(g, n)
            if result.ok:
                assert search.status != 'impossible'
                assert verify_embedding(g, result.embedding) == []

    @pytest.mark.parametrize('seed', range(60))
    def test_block_embedder_on_block_hosts(self, seed):
        rng = make_rng(1000 + seed)
        g, bs = generate_block_graph(2, 4, 8, 0.5, float(rng.uniform(0, 0.5)), rng)
        for w in (0, 1):
            result = block_embed_cube(g, bs, 3, 1, w, 2, rng)
            if result.ok:
                assert brute_force_embed(g, 3).status != 'impossible'
                assert verify_embedding(g, result.embedding) == []

    @pytest.mark.parametrize('seed', range(40))
    def test_regular_embedder_on_dense_hosts(self, seed):
        rng = make_rng(2000 + seed)
        g = gen_random_bipartite(20, 10, float(rng.uniform(0.55, 0.95)), rng)
        pattern, _, _ = cube_as_bigraph(3)
        result = regular_attempt(g, pattern, rng)
        if result is not None and result.ok:
            assert brute_force_embed(g, pattern).status != 'impossible'
            assert verify_pattern_embedding(g, pattern, result.embedding) == []


class TestGenerators:
    def test_density_range(self, rng):
        with pytest.raises(ValueError):
            gen_random_bipartite(3, 3, 1.5, rng)

    def test_extremes(self, rng):
        assert gen_random_bipartite(5, 4, 0, rng).edge_count == 0
        assert gen_random_bipartite(5, 4, 1, rng).edge_count == 20

    def test_same_seed_same_graph(self):
        assert gen_random_bipartite(20, 30, 0.5, make_rng(4)) == gen_random_bipartite(20, 30, 0.5, make_rng(4))

    def test_random_coloring(self, rng):
        coloring = random_coloring(9, rng)
        assert np.array_equal(coloring, coloring.T)
        assert not coloring.diagonal().any()
        assert set(np.unique(coloring)) <= {0, 1}

    def test_coloring_needs_two_vertices(self, rng):
        with pytest.raises(ValueError):
            random_coloring(1, rng)


class TestEmbeddingFiles:
    def test_round_trip(self, tmp_path, complete, rng):
        g = complete(8, 8)
        e = drc_embed_cube(g, 3, 1, rng).embedding
        path = tmp_path / 'q3.emb'
        write_embedding(e, g, path)
        loaded, sizes = read_embedding(path)
        assert loaded == e
        assert sizes == (8, 8)

    def test_hand_written_file(self, tmp_path, k22):
        path = tmp_path / 'q2.emb'
        path.write_text('# square\n2 2 2\n01 U 0\n10 U 1\n00 L 0\n11 L 1\n')
        e, sizes = read_embedding(path)
        assert e.odd_side is Side.UPPER
        assert verify_embedding(k22, e) == []

    def test_odd_vertices_on_lowers(self, tmp_path, k22):
        path = tmp_path / 'q2.emb'
        path.write_text('2 2 2\n01 L 0\n10 L 1\n00 U 0\n11 U 1\n')
        e, _ = read_embedding(path)
        assert e.odd_side is Side.LOWER
        assert verify_embedding(k22, e) == []

    @pytest.mark.parametrize('text, line', [
        ('2 2\n', 1),
        ('2 2 2\n01 U 0\n00 U 1\n', 3),
        ('2 2 2\n01 U 0\n01 U 1\n', 3),
        ('2 2 2\n01 U 5\n', 2),
        ('2 2 2\n012 U 0\n', 2),
        ('2 2 2\n01 X 0\n', 2),
        ('# nothing\n', 0),
    ])
    def test_malformed(self, tmp_path, text, line):
        path = tmp_path / 'bad.emb'
        path.write_text(text)
        with pytest.raises(GraphFormatError) as info:
            read_embedding(path)
        assert info.value.line == line
