import logging
import math

from scipy import stats

from modules.setup_logger import logger


logger = logging.getLogger(__name__)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple:
    """Wilson score interval for a binomial proportion

    :param successes: Number of hits
    :param trials: Number of draws
    :param confidence: Two-sided confidence level

    :returns: (lower, upper)
    """
    if trials < 1:
        raise ValueError('Wilson interval needs at least one trial')
    if not 0 <= successes <= trials:
        raise ValueError(f'successes={successes} outside [0, {trials}]')

    z = stats.norm.ppf(1 - (1 - confidence) / 2)
    phat = successes / trials
    centre = phat + z ** 2 / (2 * trials)
    spread = z * math.sqrt(phat * (1 - phat) / trials + z ** 2 / (4 * trials ** 2))
    scale = 1 + z ** 2 / trials
    return max(0.0, (centre - spread) / scale), min(1.0, (centre + spread) / scale)


def wilson_radius(successes: int, trials: int, confidence: float = 0.95) -> float:
    """Largest distance from the point estimate to either interval end"""
    lower, upper = wilson_interval(successes, trials, confidence)
    phat = successes / trials
    return max(phat - lower, upper - phat)


def proportion_standard_error(phat: float, trials: int) -> float:
    return math.sqrt(max(phat * (1 - phat), 0.0) / trials)
