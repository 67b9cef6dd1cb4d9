import math

import numpy as np
import pytest

from modules.condensation import (CondensationEstimate, StandardPairCertificate, bad_tuple_count,
                                  embed_regular_noncondensed, estimate_condensation, find_standard_pair,
                                  overlap_pairs, pair_base, partition_indices, standard_constant,
                                  tile_pattern)
from modules.embedder_drc import verify_pattern_embedding
from modules.hypercube import cube_as_bigraph
from utils.utils import make_rng


def test_standard_constant_formula():
    assert standard_constant(0.5, 0.1) == pytest.approx(16 * math.exp(4) / (0.1 * 0.25))


class TestStandardPair:
    def test_complete_host(self, complete, rng):
        cert = find_standard_pair(complete(64, 64), 0.1, 1e-10, 2, 5, rng)
        assert isinstance(cert, StandardPairCertificate)
        assert cert.cn_size == 64
        assert cert.mode == 'exact'
        assert len(cert.beta_grid) == 2
        assert cert.beta_grid[0] == pytest.approx(1.0)
        assert all(count <= bound for count, bound in zip(cert.bad_tuple_counts, cert.bad_tuple_bounds))
        assert cert.K == pytest.approx(standard_constant(0.1, 1e-10) * 8)

    def test_sampled_mode_above_the_cap(self, complete, rng):
        cert = find_standard_pair(complete(64, 64), 0.1, 1e-10, 3, 5, rng, exact_cap=1000, sampled_tuples=256)
        assert cert.mode == 'sampled'

    def test_density_must_exceed_alpha0(self, path_graph, rng):
        with pytest.raises(ValueError):
            find_standard_pair(path_graph, 0.9, 1e-10, 1, 5, rng)

    def test_host_too_small_for_r(self, complete, rng):
        with pytest.raises(ValueError):
            find_standard_pair(complete(4, 4), 0.1, 1e-10, 3, 5, rng)


class TestBadTuples:
    def test_exact_count(self, path_graph):
        base = pair_base(path_graph, (0, 0)) | pair_base(path_graph, (2, 2))
        assert base.ids() == [0, 1, 2]
        assert bad_tuple_count(path_graph, base, 2, 0).value == 2
        assert bad_tuple_count(path_graph, base, 2, 1).value == 7

    def test_sampled_count(self, path_graph, rng):
        base = pair_base(path_graph, (0, 0)) | pair_base(path_graph, (2, 2))
        count = bad_tuple_count(path_graph, base, 2, 1, mode='sampled', k=20000, rng=rng)
        assert not count.exact
        assert abs(count.value - 7) < 0.3

    def test_sampled_mode_needs_rng(self, path_graph):
        base = pair_base(path_graph, (0, 0))
        with pytest.raises(ValueError):
            bad_tuple_count(path_graph, base, 2, 1, mode='sampled', k=10)


class TestCondensationEstimate:
    def test_complete_host_is_fully_condensed(self, complete, rng):
        estimate = estimate_condensation(complete(16, 16), (0, 1), 2, 16, 500, rng)
        assert estimate.hits == 500
        assert estimate.p_hat == 1.0
        assert estimate.decisively_above(1.0)
        assert not estimate.decisively_below(0.5)

    def test_unreachable_overlap(self, complete, rng):
        estimate = estimate_condensation(complete(16, 16), (0, 1), 2, 17, 500, rng)
        assert estimate.hits == 0
        assert estimate.decisively_below(0.5)

    def test_worker_split_keeps_sample_count(self, complete):
        estimate = estimate_condensation(complete(16, 16), (0, 1), 2, 16, 501, make_rng(3), workers=3)
        assert estimate.samples == 501
        assert estimate.hits == 501

    def test_same_seed_same_estimate(self, dense_256):
        first = estimate_condensation(dense_256, (0, 1), 2, 190, 300, make_rng(9), workers=2)
        second = estimate_condensation(dense_256, (0, 1), 2, 190, 300, make_rng(9), workers=2)
        assert first == second

    def test_empty_common_neighborhood(self, path_graph, rng):
        with pytest.raises(ValueError):
            estimate_condensation(path_graph, (0, 2), 1, 1, 10, rng)

    def test_decision_rule(self):
        estimate = CondensationEstimate(p_hat=0.5, samples=100, M=3, wilson_radius=0.1, hits=50, r=2)
        assert estimate.decisively_below(0.7)
        assert estimate.decisively_above(0.3)
        assert not estimate.decisively_below(0.55)
        assert not estimate.decisively_above(0.45)
        assert not estimate.decisively_above(1.0)


class TestRegularEmbedding:
    def test_partition_indices(self):
        heavy = np.array([[1, 1, 0, 0], [1, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 1]], dtype=bool)
        partition = partition_indices([1, 5, 5, 5], heavy, 2, 0.25)
        assert partition.q == (0,)
        assert partition.w == (1, 2)
        assert partition.r == (3,)

    def test_overlap_pairs_skip_the_diagonal(self):
        cn = [0b1111, 0b0111, 0b1000]
        heavy = overlap_pairs(cn, 3)
        assert not heavy.diagonal().any()
        assert heavy[0, 1] and heavy[1, 0]
        assert np.count_nonzero(heavy) == 2

    def test_lone_large_set_has_no_partner(self):
        heavy = overlap_pairs([0b1111], 1)
        assert heavy.shape == (1, 1)
        assert np.count_nonzero(heavy) == 0
        partition = partition_indices([4], heavy, 0, 1.0)
        assert partition.w == ()
        assert partition.r == (0,)

    def test_tile_pattern(self, k22):
        tiled = tile_pattern(k22, 3)
        assert (tiled.upper_count, tiled.lower_count, tiled.edge_count) == (6, 6, 12)

    def test_cube_next_to_a_standard_pair(self, complete, rng):
        host = complete(64, 64)
        H, _, _ = cube_as_bigraph(3)
        cert = find_standard_pair(host, 0.1, 1e-10, 3, 5, rng)
        result = embed_regular_noncondensed(host, cert, H, 16, 0.5, rng)
        assert result.ok
        assert verify_pattern_embedding(host, H, result.embedding) == []
        assert set(result.embedding.upper_images) <= set(pair_base(host, cert))

    def test_degree_must_match_certificate(self, complete, rng):
        host = complete(64, 64)
        H, _, _ = cube_as_bigraph(3)
        cert = find_standard_pair(host, 0.1, 1e-10, 2, 5, rng)
        with pytest.raises(ValueError):
            embed_regular_noncondensed(host, cert, H, 16, 0.5, rng)

    def test_pattern_must_be_regular(self, complete, rng, path_graph):
        host = complete(64, 64)
        cert = find_standard_pair(host, 0.1, 1e-10, 2, 5, rng)
        with pytest.raises(ValueError):
            embed_regular_noncondensed(host, cert, path_graph, 16, 0.5, rng)

    def test_low_degree_pattern_rejected(self, complete, rng, k22):
        host = complete(64, 64)
        cert = find_standard_pair(host, 0.1, 1e-10, 2, 5, rng)
        with pytest.raises(ValueError):
            embed_regular_noncondensed(host, cert, k22, 16, 0.5, rng)

    def test_pattern_too_large_for_base(self, complete, rng):
        host = complete(50, 50)
        H, _, _ = cube_as_bigraph(7)
        cert = find_standard_pair(host, 0.1, 1e-10, 7, 5, rng, sampled_tuples=256)
        result = embed_regular_noncondensed(host, cert, H, 8, 0.5, rng)
        assert not result.ok
        assert result.counters['precondition'] == 1
