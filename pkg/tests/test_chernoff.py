import pytest

from analysis.chernoff import chernoff_bound, chernoff_empirical, chernoff_sanity, exact_tail
from analysis.estimators import proportion_standard_error, wilson_interval, wilson_radius
from utils.utils import make_rng


def test_exact_tail_by_hand():
    assert exact_tail(0.5, 4, 2) == pytest.approx(2 / 16)
    assert exact_tail(0.5, 4, 1) == pytest.approx(1 - 6 / 16)


def test_bound_formula():
    assert chernoff_bound(0.5, 100, 10, 0.25) == pytest.approx(2 * 2.718281828459045 ** -0.5)


@pytest.mark.parametrize('p, n_vars', [(0.5, 4), (0.3, 10), (0.1, 12)])
def test_exhaustive_matches_binomial(p, n_vars):
    table = chernoff_empirical(p, n_vars, exhaustive=True)
    assert len(table) == 10
    assert (table['empirical'] - table['exact_tail']).abs().max() < 1e-9
    assert not table['flagged'].any()


def test_sampled_tails_are_close(rng):
    table = chernoff_empirical(0.5, 100, samples=20000, rng=rng)
    assert list(table.columns) == ['p', 'n_vars', 't', 'empirical', 'std_error', 'exact_tail', 'bound', 'flagged']
    assert ((table['empirical'] - table['exact_tail']).abs() <= 5 * table['std_error'] + 1e-3).all()


def test_quick_sanity_grid(rng):
    table = chernoff_sanity(samples=2000, rng=rng)
    assert len(table) == 40
    assert set(table['p']) == {0.1, 0.5}
    assert not table['flagged'].any()


@pytest.mark.slow
def test_full_sanity_grid():
    table = chernoff_sanity(samples=100000, rng=make_rng(1))
    assert not table['flagged'].any()


@pytest.mark.parametrize('kwargs', [
    {'p': 0.5, 'n_vars': 10, 't_grid': [0], 'exhaustive': True},
    {'p': 0.5, 'n_vars': 10, 't_grid': [6], 'exhaustive': True},
    {'p': 1.0, 'n_vars': 10, 'exhaustive': True},
    {'p': 0.5, 'n_vars': 0, 'exhaustive': True},
    {'p': 0.5, 'n_vars': 21, 'exhaustive': True},
    {'p': 0.5, 'n_vars': 10},
])
def test_rejected_arguments(kwargs):
    with pytest.raises(ValueError):
        chernoff_empirical(**kwargs)


class TestEstimators:
    def test_wilson_interval_contains_estimate(self):
        lower, upper = wilson_interval(30, 100)
        assert lower < 0.3 < upper
        assert wilson_radius(30, 100) == pytest.approx(max(0.3 - lower, upper - 0.3))

    def test_all_hits(self):
        lower, upper = wilson_interval(50, 50)
        assert upper == pytest.approx(1.0)
        assert 0.9 < lower < 1.0

    def test_bad_counts(self):
        with pytest.raises(ValueError):
            wilson_interval(5, 0)
        with pytest.raises(ValueError):
            wilson_interval(6, 5)

    def test_standard_error(self):
        assert proportion_standard_error(0.5, 100) == pytest.approx(0.05)
        assert proportion_standard_error(0.0, 100) == 0
