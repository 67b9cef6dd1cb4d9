import logging
import math
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from scipy import stats

from analysis.estimators import proportion_standard_error
from modules.setup_logger import logger
from utils.utils import settings


logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 20
TOLERANCE = 1e-9


def chernoff_bound(p: float, n_vars: int, t: float, c: float) -> float:
    """2 exp(-c t^2 / (p n))"""
    return 2 * math.exp(-c * t * t / (p * n_vars))


def exact_tail(p: float, n_vars: int, t: float) -> float:
    """P(|Bin(n, p) - pn| >= t)"""
    mean = p * n_vars
    low = math.floor(mean - t + TOLERANCE)
    high = math.ceil(mean + t - TOLERANCE)
    below = stats.binom.cdf(low, n_vars, p) if low >= 0 else 0.0
    return float(below + stats.binom.sf(high - 1, n_vars, p))


def _enumerated_tail(p: float, n_vars: int, t: float) -> float:
    """Same tail summed over all 2^n outcome vectors"""
    ones = np.array([word.bit_count() for word in range(1 << n_vars)])
    weights = p ** ones * (1 - p) ** (n_vars - ones)
    return float(weights[np.abs(ones - p * n_vars) >= t - TOLERANCE].sum())


def default_grid(p: float, n_vars: int, points: int = 10) -> list:
    mean = p * n_vars
    return [mean * (i + 1) / points for i in range(points)]


def chernoff_empirical(p: float, n_vars: int, t_grid: Optional[Iterable[float]] = None,
                       samples: Optional[int] = None, rng: Optional[np.random.Generator] = None,
                       **kwargs) -> pd.DataFrame:
    """Empirical two-sided tails of a sum of Bernoulli(p) indicators against the Chernoff bound

    :param p: Success probability in (0, 1)
    :param n_vars: Number of indicators
    :param t_grid: Deviations in (0, p n_vars], ten evenly spaced points by default
    :param samples: Monte Carlo sums drawn
    :param rng: Generator, not needed in exhaustive mode
    :param c: Constant of the bound
    :param exhaustive: Enumerate all 2^n_vars outcomes instead of sampling

    :returns: DataFrame with columns t, empirical, std_error, exact_tail, bound, flagged
    """
    c = kwargs.get('c', settings('condensation')['c_chernoff'])
    exhaustive = kwargs.get('exhaustive', False)
    samples = samples or settings('harness')['chernoff_samples']

    if not 0 < p < 1:
        logger.error("Bernoulli parameter %s outside (0, 1)", p)
        raise ValueError(f'p must lie in (0, 1), got {p}')
    if n_vars < 1:
        raise ValueError('n_vars must be >= 1')
    grid = list(t_grid) if t_grid is not None else default_grid(p, n_vars)
    mean = p * n_vars
    if any(not 0 < t <= mean + TOLERANCE for t in grid):
        logger.error("Deviation grid must lie in (0, %s]", mean)
        raise ValueError(f'every t must lie in (0, {mean}]')

    if exhaustive:
        if n_vars > EXHAUSTIVE_LIMIT:
            raise ValueError(f'exhaustive mode enumerates 2^n outcomes, n_vars <= {EXHAUSTIVE_LIMIT}')
        empirical = [_enumerated_tail(p, n_vars, t) for t in grid]
        errors = [0.0] * len(grid)
    else:
        if rng is None:
            raise ValueError('rng is required unless exhaustive')
        deviation = np.abs(rng.binomial(n_vars, p, size=samples) - mean)
        empirical = [float(np.mean(deviation >= t - TOLERANCE)) for t in grid]
        errors = [proportion_standard_error(e, samples) for e in empirical]

    table = pd.DataFrame({
        't': grid,
        'empirical': empirical,
        'std_error': errors,
        'exact_tail': [exact_tail(p, n_vars, t) for t in grid],
        'bound': [chernoff_bound(p, n_vars, t, c) for t in grid],
    })
    table['flagged'] = table['empirical'] > table['bound']
    table.insert(0, 'n_vars', n_vars)
    table.insert(0, 'p', p)

    if table['flagged'].any():
        logger.warning("Chernoff bound with c=%s exceeded at p=%s n=%d for t in %s", c, p, n_vars,
                       table.loc[table['flagged'], 't'].tolist())
    return table


def chernoff_sanity(ps: Iterable[float] = (0.1, 0.5), ns: Iterable[int] = (100, 1000),
                    samples: Optional[int] = None, rng: Optional[np.random.Generator] = None,
                    **kwargs) -> pd.DataFrame:
    """chernoff_empirical over a (p, n) grid, one table"""
    frames = [chernoff_empirical(p, n, samples=samples, rng=rng, **kwargs) for p in ps for n in ns]
    return pd.concat(frames, ignore_index=True)
