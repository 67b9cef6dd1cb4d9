from dataclasses import replace
from fractions import Fraction
from itertools import product

import pytest

from modules.bigraph import BipartiteGraph, Side
from modules.embedder_drc import (CubeEmbedding, DrcParams, GreedyFailure, PatternEmbedding, drc_embed_cube,
                                  drc_parameters, expected_bad_tuples_exact, expected_cn_size_exact,
                                  greedy_extend, sample_cn_sizes, verify_embedding, verify_pattern_embedding)
from modules.harness import gen_random_bipartite
from modules.hypercube import odd_class
from utils.utils import make_rng


def all_graphs_3x3():
    for mask in range(1 << 9):
        yield BipartiteGraph(3, 3, [(mask >> (3 * u)) & 0b111 for u in range(3)])


def random_8x8(count=200):
    rng = make_rng(88)
    for _ in range(count):
        yield gen_random_bipartite(8, 8, float(rng.uniform(0.2, 0.9)), rng)


def beta_grid(alpha, points=5):
    return [alpha * Fraction(i, points) for i in range(1, points + 1)]


class TestFirstMoment:
    def test_expected_cn_size_on_every_3x3_graph(self):
        for g in all_graphs_3x3():
            for s in (1, 2, 3):
                assert expected_cn_size_exact(g, s) >= g.density() ** s * g.upper_count

    def test_expected_cn_size_is_degree_sum(self, path_graph):
        assert expected_cn_size_exact(path_graph, 1) == Fraction(5, 3)
        assert expected_cn_size_exact(path_graph, 2) == Fraction(1, 9) + Fraction(4, 9) + Fraction(4, 9)

    def test_complete_graph_has_no_bad_tuples_below_one(self, complete):
        g = complete(4, 4)
        params = DrcParams(2, 2, Fraction(1, 2), Fraction(1))
        assert expected_bad_tuples_exact(g, params) == 0

    def test_bad_tuples_on_every_3x3_graph(self):
        for g in all_graphs_3x3():
            alpha = g.density()
            if alpha == 0:
                continue
            for r, s in product((1, 2, 3), repeat=2):
                for beta in beta_grid(alpha):
                    value = expected_bad_tuples_exact(g, DrcParams(s, r, beta, alpha))
                    assert value <= beta ** (r * s) * g.upper_count ** r

    @pytest.mark.slow
    def test_first_moment_claims_on_random_8x8(self):
        for g in random_8x8():
            alpha = g.density()
            for s in (1, 2, 3):
                assert expected_cn_size_exact(g, s) >= alpha ** s * g.upper_count
            for r, s in product((1, 2, 3), repeat=2):
                for beta in beta_grid(alpha):
                    value = expected_bad_tuples_exact(g, DrcParams(s, r, beta, alpha))
                    assert value <= beta ** (r * s) * g.upper_count ** r

    def test_enumeration_cap(self, complete):
        params = DrcParams(1, 3, Fraction(1, 2), Fraction(1))
        with pytest.raises(ValueError):
            expected_bad_tuples_exact(complete(30, 4), params, cap=1000)

    def test_sampled_sizes_track_the_exact_mean(self, dense_256, rng):
        sizes = sample_cn_sizes(dense_256, 2, 4000, rng)
        assert abs(sizes.mean() - float(expected_cn_size_exact(dense_256, 2))) < 3


class TestParams:
    def test_beta_must_not_exceed_alpha(self):
        with pytest.raises(ValueError):
            DrcParams(1, 1, Fraction(3, 4), Fraction(1, 2))

    def test_complete_host_clamps_s(self, complete):
        s, beta, notes = drc_parameters(complete(64, 64), 3)
        assert s == 1
        assert 0 < beta <= 1
        assert notes

    def test_dense_host(self, dense_256):
        s, beta, notes = drc_parameters(dense_256, 3)
        assert s > 1
        assert 0 < beta <= dense_256.density()


class TestDrcEmbedding:
    def test_q3_into_dense_random_host(self, dense_256, rng):
        result = drc_embed_cube(dense_256, 3, 5, rng)
        assert result.ok
        assert result.stage == 'success'
        assert verify_embedding(dense_256, result.embedding) == []
        assert result.embedding.odd_side is Side.UPPER

    def test_complete_host(self, complete, rng):
        g = complete(8, 8)
        result = drc_embed_cube(g, 3, 1, rng)
        assert result.ok
        assert verify_embedding(g, result.embedding) == []

    def test_host_too_small(self, k22, rng):
        result = drc_embed_cube(k22, 3, 4, rng)
        assert not result.ok
        assert result.counters['precondition'] == 1

    def test_tree_host_never_embeds_a_square(self, path_graph, rng):
        result = drc_embed_cube(path_graph, 2, 6, rng)
        assert not result.ok
        assert result.trials == 6

    def test_zero_trials_rejected(self, k22, rng):
        with pytest.raises(ValueError):
            drc_embed_cube(k22, 2, 0, rng)

    def test_same_seed_same_embedding(self, dense_256):
        first = drc_embed_cube(dense_256, 3, 3, make_rng(5))
        second = drc_embed_cube(dense_256, 3, 3, make_rng(5))
        assert first.embedding == second.embedding

    @pytest.mark.slow
    def test_q3_success_rate(self):
        hits = 0
        for seed in range(10):
            g = gen_random_bipartite(256, 256, 0.9, make_rng(1000 + seed))
            hits += drc_embed_cube(g, 3, 1, make_rng(seed)).ok
        assert hits >= 9

    @pytest.mark.slow
    def test_q4_success_rate(self):
        hits = 0
        for seed in range(10):
            g = gen_random_bipartite(1024, 1024, 0.9, make_rng(2000 + seed))
            result = drc_embed_cube(g, 4, 1, make_rng(seed))
            if result.ok:
                assert verify_embedding(g, result.embedding) == []
            hits += result.ok
        assert hits >= 8


class TestGreedyAndVerifier:
    def test_greedy_on_complete_host(self, complete):
        g = complete(4, 4)
        assignment = {v.word: i for i, v in enumerate(odd_class(3))}
        outcome = greedy_extend(g, 3, assignment)
        assert isinstance(outcome, CubeEmbedding)
        assert verify_embedding(g, outcome) == []

    def test_greedy_reports_stuck_vertex(self, complete):
        g = BipartiteGraph(4, 4, [0b0001, 0b0001, 0b0001, 0b0001])
        assignment = {v.word: i for i, v in enumerate(odd_class(3))}
        outcome = greedy_extend(g, 3, assignment)
        assert isinstance(outcome, GreedyFailure)
        assert outcome.placed == 1

    def test_greedy_with_odd_vertices_on_lowers(self, complete):
        g = complete(4, 4)
        assignment = {v.word: i for i, v in enumerate(odd_class(3))}
        outcome = greedy_extend(g, 3, assignment, odd_side=Side.LOWER)
        assert outcome.odd_side is Side.LOWER
        assert verify_embedding(g, outcome) == []

    def test_greedy_rejects_partial_assignment(self, complete):
        with pytest.raises(ValueError):
            greedy_extend(complete(4, 4), 3, {1: 0})

    def test_verifier_flags_collisions_and_non_edges(self, complete):
        g = complete(4, 4)
        assignment = {v.word: i for i, v in enumerate(odd_class(3))}
        good = greedy_extend(g, 3, assignment)
        images = dict(good.images)
        images[0b011] = images[0b000]
        broken = replace(good, images=images)
        assert any('injectivity' in item for item in verify_embedding(g, broken))

        sparse = BipartiteGraph(4, 4, [0b1110, 0b1111, 0b1111, 0b1111])
        assert any('non-edge' in item for item in verify_embedding(sparse, good))

    def test_verifier_flags_missing_vertices(self, complete):
        partial = CubeEmbedding(2, Side.UPPER, {0b01: 0, 0b10: 1})
        assert any('unmapped' in item for item in verify_embedding(complete(2, 2), partial))

    def test_pattern_verifier(self, k22, path_graph):
        square = PatternEmbedding((0, 1), (0, 1))
        assert verify_pattern_embedding(k22, k22, square) == []
        assert verify_pattern_embedding(path_graph, k22, square)
        assert verify_pattern_embedding(k22, k22, PatternEmbedding((0, 0), (0, 1)))
