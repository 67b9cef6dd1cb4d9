# -*- coding: utf-8 -*-
""""""
"""
Created on Mon Mar 25 10:47:09 2024

Random block graph of density exactly 1/2 on which the naive dependent random choice
embedding stalls, and the experiments around it.

Every upper vertex picks half of the lower blocks uniformly and is joined to all of their
vertices, so common neighborhoods of tuples are unions of whole blocks.
"""
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from modules.bigraph import BipartiteGraph, Side, VertexSet, pack_mask
from modules.blocks import BlockStructure, block_embed_cube, block_feasibility, validate_block_structure
from modules.embedder_drc import drc_embed_cube
from modules.hypercube import check_dimension
from modules.setup_logger import logger
from utils.utils import progress, settings, spawn_streams


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GammaParams:
    """Sizes of the random block graph

    k_blocks lower blocks of block_size vertices each; every upper vertex is adjacent to
    exactly k_blocks / 2 of them.
    """

    k_blocks: int
    block_size: int
    upper_count: int
    epsilon: Optional[float] = None
    n: Optional[int] = None

    def __post_init__(self):
        if self.k_blocks < 2 or self.k_blocks % 2:
            logger.error("k_blocks must be even and >= 2, got %d", self.k_blocks)
            raise ValueError(f'k_blocks must be even and >= 2, got {self.k_blocks}')
        if self.block_size < 1 or self.upper_count < 1:
            logger.error("Infeasible sizes: block_size=%d upper_count=%d", self.block_size, self.upper_count)
            raise ValueError('block_size and upper_count must be >= 1')

    @classmethod
    def from_epsilon(cls, epsilon: float, n: int) -> 'GammaParams':
        """m = ceil(2^(n - epsilon n / 2)): 2m blocks of m lowers and 2m^2 uppers"""
        if not 0 < epsilon <= 1:
            raise ValueError(f'epsilon must lie in (0, 1], got {epsilon}')
        check_dimension(n)
        m = math.ceil(2 ** (n - epsilon * n / 2))
        return cls(k_blocks=2 * m, block_size=m, upper_count=2 * m * m, epsilon=epsilon, n=n)

    @classmethod
    def desk(cls, k_blocks: int, block_size: int, upper_count: int) -> 'GammaParams':
        return cls(k_blocks=k_blocks, block_size=block_size, upper_count=upper_count)

    @property
    def half_degree(self) -> int:
        return self.k_blocks // 2

    @property
    def lower_count(self) -> int:
        return self.k_blocks * self.block_size


def generate_gamma(params: GammaParams, rng: np.random.Generator) -> tuple:
    """Draw the block subset of every upper vertex independently

    :returns: (BipartiteGraph, BlockStructure) with delta = 0 and gamma the smallest fraction of
        uppers that picked any one block
    """
    k, size, up = params.k_blocks, params.block_size, params.upper_count
    order = np.argsort(rng.random((up, k)), axis=1)[:, :params.half_degree]
    picked = np.zeros((up, k), dtype=bool)
    np.put_along_axis(picked, order, True, axis=1)

    g = BipartiteGraph.from_matrix(np.repeat(picked, size, axis=1))
    assert all(row.bit_count() == size * params.half_degree for row in g.rows)
    assert 2 * g.density() == 1

    counts = picked.sum(axis=0)
    lower_blocks = [VertexSet(Side.LOWER, g.lower_count, ((1 << size) - 1) << (ell * size)) for ell in range(k)]
    upper_sets = [VertexSet(Side.UPPER, up, pack_mask(picked[:, ell])) for ell in range(k)]
    bs = BlockStructure(Fraction(0), Fraction(int(counts.min()), up), k, size, lower_blocks, upper_sets)

    violations = validate_block_structure(g, bs)
    if violations:
        logger.warning("Generated block graph has %d block violation(s), first %s", len(violations), violations[0])
    logger.info("Block graph %dx%d: %d blocks of %d, gamma=%.4f", up, g.lower_count, k, size, float(bs.gamma))
    return g, bs


@dataclass(frozen=True)
class CoveringReport:
    """Greedy cover T of the common neighborhoods of tuples from a random upper sample S"""

    sample: tuple
    arity: int
    block_deltas: tuple
    cover_blocks: tuple
    cover_vertices: int
    excluded_weight: Fraction
    heavy_blocks: tuple
    identity_ok: bool
    covered: int
    tuple_samples: int

    @property
    def analytic_bound(self) -> float:
        """Lower bound on the covered share of tuples, 1 - sum of delta_i^arity over blocks outside T"""
        return float(1 - self.excluded_weight)

    @property
    def empirical_fraction(self) -> float:
        return self.covered / self.tuple_samples

    @property
    def standard_error(self) -> float:
        phat = self.empirical_fraction
        return math.sqrt(phat * (1 - phat) / self.tuple_samples)

    @property
    def consistent(self) -> bool:
        return self.empirical_fraction >= self.analytic_bound - 4 * self.standard_error

    def summary(self) -> dict:
        return {'sample_size': len(self.sample), 'arity': self.arity, 'cover_blocks': len(self.cover_blocks),
                'cover_vertices': self.cover_vertices, 'analytic_bound': self.analytic_bound,
                'empirical_fraction': self.empirical_fraction, 'standard_error': self.standard_error,
                'heavy_blocks': len(self.heavy_blocks), 'identity_ok': self.identity_ok}


def covering_property_estimate(g: BipartiteGraph, bs: BlockStructure, sample_size: int, arity: int,
                               rng: np.random.Generator, **kwargs) -> CoveringReport:
    """Estimate how well a few blocks cover the common neighborhoods of arity-tuples from S

    delta_i is the share of S adjacent to block i, so delta_i^arity is the share of ordered
    tuples (repetitions allowed) whose common neighborhood contains block i. Blocks are added to T
    by decreasing delta_i^arity until the excluded mass drops below 1/2, so T covers strictly
    more than half of the tuples.

    :param sample_size: |S|, drawn uniformly without replacement from the uppers
    :param arity: Tuple length
    :param tuple_samples: Tuples drawn from S for the Monte Carlo check
    :param block_budget: Stop adding blocks to T after this many
    """
    tuple_samples = kwargs.get('tuple_samples', settings('adversary')['covering_tuple_samples'])
    block_budget = kwargs.get('block_budget', bs.k)
    if not 1 <= sample_size <= g.upper_count:
        logger.error("Sample size %d outside [1, %d]", sample_size, g.upper_count)
        raise ValueError(f'sample size must lie in [1, {g.upper_count}]')
    if arity < 1 or tuple_samples < 1:
        raise ValueError('arity and tuple_samples must be >= 1')

    sample = tuple(sorted(int(v) for v in rng.choice(g.upper_count, size=sample_size, replace=False)))
    rows = [g.rows[v] for v in sample]
    counts = [sum(1 for row in rows if row & block.bits) for block in bs.lower_blocks]
    deltas = tuple(Fraction(c, sample_size) for c in counts)

    # holds whenever uppers see blocks all-or-nothing
    identity_ok = sum(c * bs.g_size for c in counts) == sum(row.bit_count() for row in rows)
    if not identity_ok:
        logger.warning("Edge accounting identity fails: some sampled upper sees a block partially")

    weights = [d ** arity for d in deltas]
    order = sorted(range(bs.k), key=lambda ell: (-weights[ell], ell))
    excluded = sum(weights, Fraction(0))
    cover = []
    for ell in order:
        if excluded < Fraction(1, 2) or len(cover) >= block_budget:
            break
        cover.append(ell)
        excluded -= weights[ell]
    heavy = tuple(ell for ell in range(bs.k) if weights[ell] * 2 * bs.k >= 1)

    cover_bits = 0
    for ell in cover:
        cover_bits |= bs.lower_blocks[ell].bits
    outside = ~cover_bits & ((1 << g.lower_count) - 1)

    draws = rng.choice(np.asarray(sample), size=(tuple_samples, arity), replace=True).tolist()
    covered = sum(1 for xs in progress(draws, desc='covering tuples')
                  if not g.common_neighborhood_bits(xs, Side.UPPER) & outside)

    report = CoveringReport(sample, arity, deltas, tuple(sorted(cover)), len(cover) * bs.g_size, excluded,
                            heavy, identity_ok, covered, tuple_samples)
    logger.info("Covering: |T| = %d blocks, bound %.4f, empirical %.4f", len(cover),
                report.analytic_bound, report.empirical_fraction)
    if not report.consistent:
        logger.warning("Empirical covered share %.4f below the bound %.4f by more than 4 standard errors",
                       report.empirical_fraction, report.analytic_bound)
    return report


def select_block_configuration(bs: BlockStructure, upper_count: int, n: int) -> tuple:
    """First feasible (u, w), else the one with the smallest union bound

    Ties (an infinite union bound whenever delta = 0) go to the configuration whose expected
    number of fully covered blocks and trimmed block size leave the most room.

    :returns: (u, w, feasible)
    """
    candidates = []
    for u in range(1, n + 1):
        for w in range(0, n - 1):
            feasibility = block_feasibility(bs, upper_count, n, u, w)
            if feasibility.feasible:
                return u, w, True
            spread = math.log(bs.gamma * (1 - bs.delta)) if bs.gamma > 0 else -math.inf
            room = min(math.log(bs.k) + u * spread - w * math.log(2),
                       feasibility.log_block_size - feasibility.log_size_needed)
            candidates.append((feasibility.log_union_bound, -room, u, w))
    if not candidates:
        return 1, 0, False
    _, _, u, w = min(candidates)
    return u, w, False


@dataclass
class DefeatReport:
    n: int
    trials: int
    u: int
    w: int
    feasible: bool
    drc_successes: int = 0
    block_successes: int = 0
    drc_stages: Counter = field(default_factory=Counter)
    block_stages: Counter = field(default_factory=Counter)
    drc_seconds: float = 0.0
    block_seconds: float = 0.0

    def summary(self) -> dict:
        return {'n': self.n, 'trials': self.trials, 'u': self.u, 'w': self.w, 'feasible': self.feasible,
                'drc_successes': self.drc_successes, 'block_successes': self.block_successes,
                'drc_stages': dict(sorted(self.drc_stages.items())),
                'block_stages': dict(sorted(self.block_stages.items()))}


def drc_defeat_experiment(g: BipartiteGraph, bs: BlockStructure, n: int, trials: int,
                          rng: np.random.Generator, **kwargs) -> DefeatReport:
    """Run the naive and the block embedder with the same number of independent trials

    :param u: Condition set size for the block embedder, chosen automatically when absent
    :param w: Facet suffix length, chosen together with u
    """
    check_dimension(n)
    if trials < 1:
        raise ValueError('trials must be >= 1')

    u, w = kwargs.get('u'), kwargs.get('w')
    if u is None or w is None:
        u, w, feasible = select_block_configuration(bs, g.upper_count, n)
    else:
        feasible = block_feasibility(bs, g.upper_count, n, u, w).feasible
    if not feasible:
        logger.warning("No feasible (u, w) for Q_%d, running the block embedder with u=%d w=%d anyway", n, u, w)

    report = DefeatReport(n, trials, u, w, feasible)
    drc_streams, block_streams = spawn_streams(rng, 2)

    start = time.perf_counter()
    for stream in progress(spawn_streams(drc_streams, trials), desc='naive trials', total=trials):
        result = drc_embed_cube(g, n, 1, stream)
        report.drc_stages.update(result.counters)
        report.drc_successes += result.ok
    report.drc_seconds = time.perf_counter() - start

    start = time.perf_counter()
    for stream in progress(spawn_streams(block_streams, trials), desc='block trials', total=trials):
        try:
            result = block_embed_cube(g, bs, n, u, w, 1, stream)
        except ValueError as exc:
            logger.warning("Block embedder rejected the configuration: %s", exc)
            report.block_stages['precondition'] += 1
            continue
        report.block_stages.update(result.counters)
        report.block_successes += result.ok
    report.block_seconds = time.perf_counter() - start

    logger.info("Defeat experiment Q_%d: naive %d/%d, block %d/%d", n, report.drc_successes, trials,
                report.block_successes, trials)
    return report
