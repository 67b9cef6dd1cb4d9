from fractions import Fraction

import pytest

from modules.adversary import (GammaParams, covering_property_estimate, drc_defeat_experiment, generate_gamma,
                               select_block_configuration)
from modules.bigraph import BipartiteGraph, Side, VertexSet
from modules.blocks import BlockStructure, validate_block_structure
from utils.utils import make_rng


@pytest.fixture
def gamma_graph(rng):
    return generate_gamma(GammaParams.desk(4, 3, 20), rng)


@pytest.fixture(scope='module')
def gamma_32():
    return generate_gamma(GammaParams.desk(32, 32, 1 << 12), make_rng(32))


class TestParams:
    def test_odd_block_count_rejected(self):
        with pytest.raises(ValueError):
            GammaParams.desk(3, 2, 10)

    def test_from_epsilon(self):
        params = GammaParams.from_epsilon(1.0, 4)
        assert (params.k_blocks, params.block_size, params.upper_count) == (8, 4, 32)
        assert params.lower_count == 32
        assert params.half_degree == 4

    def test_epsilon_range(self):
        with pytest.raises(ValueError):
            GammaParams.from_epsilon(0, 4)


class TestGenerator:
    def test_density_is_exactly_half(self, gamma_graph):
        g, bs = gamma_graph
        assert g.density() == Fraction(1, 2)
        assert all(row.bit_count() == 6 for row in g.rows)

    def test_structure_validates(self, gamma_graph):
        g, bs = gamma_graph
        assert bs.delta == 0
        assert bs.gamma > 0
        assert validate_block_structure(g, bs) == []

    def test_two_blocks_give_two_bicliques(self, rng):
        g, bs = generate_gamma(GammaParams.desk(2, 5, 12), rng)
        blocks = {block.bits for block in bs.lower_blocks}
        assert all(row in blocks for row in g.rows)
        assert bs.upper_sets[0].bits | bs.upper_sets[1].bits == (1 << 12) - 1
        assert not bs.upper_sets[0].bits & bs.upper_sets[1].bits


class TestCovering:
    def test_accounting_identity(self, gamma_graph, rng):
        g, bs = gamma_graph
        report = covering_property_estimate(g, bs, 8, 2, rng, tuple_samples=500)
        assert report.identity_ok
        assert sum(report.block_deltas) == 2
        assert report.excluded_weight <= Fraction(1, 2)
        assert report.cover_vertices == 3 * len(report.cover_blocks)

    def test_single_upper_is_fully_covered(self, gamma_graph, rng):
        g, bs = gamma_graph
        report = covering_property_estimate(g, bs, 1, 3, rng, tuple_samples=50)
        (s,) = report.sample
        picked = tuple(ell for ell, ups in enumerate(bs.upper_sets) if s in ups)
        assert report.cover_blocks == picked
        assert report.analytic_bound == 1.0
        assert report.covered == 50

    def test_arity_one_on_two_blocks(self, rng):
        g, bs = generate_gamma(GammaParams.desk(2, 4, 40), rng)
        report = covering_property_estimate(g, bs, 30, 1, rng, tuple_samples=2000)
        assert sum(report.block_deltas) == 1
        if min(report.block_deltas) == Fraction(1, 2):
            assert len(report.cover_blocks) == 2
            assert report.excluded_weight == 0
        else:
            assert len(report.cover_blocks) == 1
            assert report.excluded_weight == min(report.block_deltas)
        assert report.consistent
        assert report.summary()['cover_blocks'] == len(report.cover_blocks)

    def test_even_split_needs_both_blocks(self, rng):
        # uppers 0, 1 see block 0; uppers 2, 3 see block 1
        g = BipartiteGraph(4, 4, [0b0011, 0b0011, 0b1100, 0b1100])
        lowers = [VertexSet(Side.LOWER, 4, 0b0011), VertexSet(Side.LOWER, 4, 0b1100)]
        uppers = [VertexSet(Side.UPPER, 4, 0b0011), VertexSet(Side.UPPER, 4, 0b1100)]
        bs = BlockStructure(Fraction(0), Fraction(1, 2), 2, 2, lowers, uppers)
        report = covering_property_estimate(g, bs, 4, 1, rng, tuple_samples=100)
        assert report.block_deltas == (Fraction(1, 2), Fraction(1, 2))
        assert report.cover_blocks == (0, 1)
        assert report.cover_vertices == 4
        assert report.covered == 100

    def test_block_budget_stops_early(self, gamma_graph, rng):
        g, bs = gamma_graph
        report = covering_property_estimate(g, bs, 20, 1, rng, tuple_samples=50, block_budget=1)
        assert len(report.cover_blocks) == 1

    @pytest.mark.slow
    def test_quarter_of_the_blocks_covers_half_the_tuples(self, gamma_32):
        g, bs = gamma_32
        reports = [covering_property_estimate(g, bs, 16, 5, make_rng(seed), tuple_samples=4000,
                                              block_budget=bs.k // 4) for seed in range(10)]
        for report in reports:
            assert report.identity_ok
            assert report.consistent
            assert len(report.cover_blocks) <= bs.k // 4
        assert any(report.empirical_fraction >= 0.5 for report in reports)

    @pytest.mark.slow
    def test_full_sample_needs_more_than_a_quarter(self, gamma_32, rng):
        # every upper sees half the blocks, so each delta_i^5 is close to 1/32
        g, bs = gamma_32
        report = covering_property_estimate(g, bs, g.upper_count, 5, rng, tuple_samples=2000)
        assert report.excluded_weight < Fraction(1, 2)
        assert len(report.cover_blocks) > bs.k // 4
        assert report.empirical_fraction >= 0.5
        assert report.consistent

    def test_sample_size_range(self, gamma_graph, rng):
        g, bs = gamma_graph
        with pytest.raises(ValueError):
            covering_property_estimate(g, bs, 0, 2, rng)
        with pytest.raises(ValueError):
            covering_property_estimate(g, bs, 21, 2, rng)


class TestDefeat:
    def test_configuration_for_zero_delta(self, gamma_graph):
        g, bs = gamma_graph
        u, w, feasible = select_block_configuration(bs, g.upper_count, 3)
        assert not feasible
        assert 1 <= u <= 3
        assert 0 <= w <= 1

    def test_configuration_without_candidates(self, gamma_graph):
        _, bs = gamma_graph
        assert select_block_configuration(bs, 20, 1) == (1, 0, False)

    def test_host_too_small(self, rng):
        g, bs = generate_gamma(GammaParams.desk(2, 2, 3), rng)
        report = drc_defeat_experiment(g, bs, 3, 2, rng)
        assert report.drc_successes == report.block_successes == 0
        assert report.drc_stages['precondition'] == 2
        assert report.block_stages['precondition'] == 2

    def test_report_structure(self, rng):
        g, bs = generate_gamma(GammaParams.desk(4, 4, 32), rng)
        report = drc_defeat_experiment(g, bs, 3, 2, rng, u=1, w=1)
        summary = report.summary()
        assert (summary['u'], summary['w'], summary['trials']) == (1, 1, 2)
        assert summary['feasible'] is False
        assert 0 <= report.drc_successes <= 2
        assert 0 <= report.block_successes <= 2
        assert report.drc_seconds >= 0 and report.block_seconds >= 0

    @pytest.mark.slow
    def test_q5_head_to_head(self, gamma_32, rng):
        g, bs = gamma_32
        report = drc_defeat_experiment(g, bs, 5, 20, rng)
        assert report.trials == 20
        assert 0 <= report.drc_successes <= 20
        assert 0 <= report.block_successes <= 20
        assert report.drc_stages['success'] == report.drc_successes
        assert report.block_stages['success'] == report.block_successes
        assert report.summary()['feasible'] is report.feasible

    def test_trials_must_be_positive(self, gamma_graph, rng):
        g, bs = gamma_graph
        with pytest.raises(ValueError):
            drc_defeat_experiment(g, bs, 3, 0, rng)
