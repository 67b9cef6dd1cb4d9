# -*- coding: utf-8 -*-
""""""
"""
Created on Wed Mar 13 16:22:08 2024

Standard pairs, condensation estimates and the Q/W/R embedder for r-regular patterns
"""
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from operator import and_
from typing import Optional, Union

import numpy as np

from analysis.estimators import wilson_radius
from modules.bigraph import BipartiteGraph, Side, VertexSet, disjoint_union, ids_from_bits, lowest_bit
from modules.embedder_drc import EmbeddingResult, PatternEmbedding, small_cn_histogram, verify_pattern_embedding
from modules.setup_logger import logger
from utils.utils import default_workers, settings, spawn_streams


logger = logging.getLogger(__name__)


def standard_constant(alpha0: float, mu: float) -> float:
    """C in the tolerance K = C r^3 of a standard pair, config value c_standard wins when set"""
    configured = settings('condensation').get('c_standard')
    if configured is not None:
        return float(configured)
    return 16 * math.exp(2 / alpha0) / (mu * alpha0 ** 2)


@dataclass(frozen=True)
class StandardPairCertificate:
    v1: int
    v2: int
    alpha0: float
    alpha: float
    mu: float
    r: int
    K: float
    cn_size: int
    upper_count: int
    L: float
    beta_grid: tuple
    bad_tuple_bounds: tuple
    bad_tuple_counts: tuple
    mode: str = 'exact'

    @property
    def delta_tilde(self) -> float:
        return self.mu / self.r

    @property
    def pair(self) -> tuple:
        return self.v1, self.v2


@dataclass
class StandardPairFailure:
    attempts: int
    best_pair: Optional[tuple]
    best_cn_size: int
    failed_condition: str
    counters: Counter = field(default_factory=Counter)


@dataclass(frozen=True)
class TupleCount:
    value: float
    exact: bool
    hits: int
    samples: int
    radius: float = 0.0


@dataclass(frozen=True)
class CondensationEstimate:
    p_hat: float
    samples: int
    M: int
    wilson_radius: float
    hits: int
    r: int

    @property
    def lower(self) -> float:
        return max(0.0, self.p_hat - self.wilson_radius)

    @property
    def upper(self) -> float:
        return min(1.0, self.p_hat + self.wilson_radius)

    def decisively_below(self, p: float) -> bool:
        return self.p_hat + self.wilson_radius < p

    def decisively_above(self, p: float) -> bool:
        # p = 1 can only be confirmed by a sample without a single miss
        if p >= 1:
            return self.hits == self.samples
        return self.p_hat - self.wilson_radius >= p


@dataclass(frozen=True)
class QWRPartition:
    """Phase-two split of the pattern's lower indices"""

    q: tuple
    w: tuple
    r: tuple
    beta0_size: float


def _pair_ids(pair) -> tuple:
    if isinstance(pair, StandardPairCertificate):
        return pair.pair
    v1, v2 = pair
    return int(v1), int(v2)


def pair_base(g: BipartiteGraph, pair) -> VertexSet:
    """CN(v1, v2) as a set of uppers"""
    return g.common_neighborhood(list(_pair_ids(pair)), Side.LOWER)


def bad_tuple_count(g: BipartiteGraph, base: VertexSet, r: int, threshold_size: float, mode: str = 'exact',
                    k: Optional[int] = None, rng: Optional[np.random.Generator] = None, **kwargs) -> TupleCount:
    """Ordered r-tuples from base whose common neighborhood has at most threshold_size lowers

    :param mode: 'exact' enumerates, 'sampled' scales the hit rate of k uniform tuples
    """
    size = len(base)
    if mode == 'exact':
        cap = kwargs.get('cap', settings('drc')['bad_tuple_cap'])
        if size ** r > cap:
            logger.error("%d^%d tuples exceed the enumeration cap %d", size, r, cap)
            raise ValueError('too many tuples for exact enumeration, use mode="sampled"')
        histogram = small_cn_histogram((g.rows[u] for u in base), r, threshold_size, g.lower_count)
        total = sum(histogram.values())
        return TupleCount(total, True, total, size ** r)

    if mode != 'sampled':
        raise ValueError(f'unknown mode {mode!r}')
    if rng is None or not k:
        raise ValueError('sampled mode needs k and rng')
    if size == 0:
        return TupleCount(0, False, 0, k)

    rows = g.rows
    draws = rng.choice(np.asarray(base.ids()), size=(k, r))
    full = (1 << g.lower_count) - 1
    hits = sum(1 for row in draws.tolist()
               if reduce(and_, (rows[u] for u in row), full).bit_count() <= threshold_size)
    scale = size ** r
    return TupleCount(hits / k * scale, False, hits, k, wilson_radius(hits, k) * scale)


def find_standard_pair(g: BipartiteGraph, alpha0: float, mu: float, r: int, attempts: int,
                       rng: np.random.Generator, **kwargs) -> Union[StandardPairCertificate, StandardPairFailure]:
    """Search for an ordered pair of lowers with a large, well-spread common neighborhood

    :param exact_cap: Largest |CN|^r counted exactly, above it tuples are sampled
    :param sampled_tuples: Tuples drawn per threshold in sampled mode
    :param c_standard: Override for the constant C in K = C r^3
    """
    config = settings('condensation')
    alpha = float(g.density())
    up, low = g.upper_count, g.lower_count

    if alpha <= alpha0:
        logger.error("Density %.6g does not exceed alpha0=%.6g", alpha, alpha0)
        raise ValueError(f'density {alpha:.6g} must exceed alpha0 {alpha0}')
    if ((1 - mu) * alpha) ** 2 * up < r ** 2:
        logger.error("((1-mu) alpha)^2 |V^up| < r^2 for r=%d", r)
        raise ValueError('((1 - mu) alpha)^2 |V^up| must be at least r^2')
    if attempts < 1:
        raise ValueError('attempts must be >= 1')

    exact_cap = kwargs.get('exact_cap', config['exact_tuple_cap'])
    k = kwargs.get('sampled_tuples', config['sampled_tuples'])
    constant = kwargs.get('c_standard') or standard_constant(alpha0, mu)

    delta_tilde = mu / r
    L = 2 / (delta_tilde * alpha ** 2)
    grid = tuple(alpha - (alpha - alpha0) * ell / r for ell in range(r))
    bounds = tuple(L * r * beta ** (2 * r) * up ** r for beta in grid)
    needed = (1 - delta_tilde) * alpha ** 2 * up

    counters = Counter()
    best, best_size, failed = None, -1, 'cn_too_small'

    for attempt in range(attempts):
        v1, v2 = (int(x) for x in rng.integers(0, low, size=2))
        base = g.common_neighborhood([v1, v2], Side.LOWER)
        size = len(base)
        if size > best_size:
            best, best_size = (v1, v2), size

        if size < needed:
            counters['cn_too_small'] += 1
            continue

        mode = 'exact' if size ** r <= exact_cap else 'sampled'
        counts = []
        for beta, bound in zip(grid, bounds):
            count = bad_tuple_count(g, base, r, beta ** r * low, mode=mode, k=k, rng=rng, cap=exact_cap)
            counts.append(count.value)
            if count.value > bound:
                counters['bad_tuples'] += 1
                failed = 'bad_tuples'
                break
        else:
            logger.info("Standard pair (%d, %d) after %d attempt(s), |CN| = %d", v1, v2, attempt + 1, size)
            return StandardPairCertificate(v1, v2, alpha0, alpha, mu, r, constant * r ** 3, size, up, L,
                                           grid, bounds, tuple(counts), mode)

    logger.warning("No standard pair in %d attempts: %s", attempts, dict(counters))
    return StandardPairFailure(attempts, best, best_size, failed, counters)


def overlap_hits(rows: tuple, base_ids: np.ndarray, r: int, M: int, samples: int,
                 rng: np.random.Generator) -> int:
    """Draws of two i.i.d. r-tuples from base_ids whose common neighborhoods share at least M lowers"""
    ys = rng.choice(base_ids, size=(samples, r)).tolist()
    zs = rng.choice(base_ids, size=(samples, r)).tolist()
    hits = 0
    for y, z in zip(ys, zs):
        cn_y = reduce(and_, (rows[u] for u in y))
        cn_z = reduce(and_, (rows[u] for u in z))
        if (cn_y & cn_z).bit_count() >= M:
            hits += 1
    return hits


def estimate_condensation(g: BipartiteGraph, pair, r: int, M: int, samples: int, rng: np.random.Generator,
                          workers: Optional[int] = None) -> CondensationEstimate:
    """Monte Carlo estimate of P(|CN(Y) & CN(Y~)| >= M) for Y, Y~ uniform r-tuples from CN(v1, v2)

    Samples are split across worker threads, each with its own child stream.
    """
    base_ids = np.asarray(pair_base(g, pair).ids())
    if base_ids.size == 0:
        logger.error("Empty common neighborhood for pair %s", _pair_ids(pair))
        raise ValueError('CN(v1, v2) is empty')
    if samples < 1 or r < 1:
        raise ValueError('samples and r must be >= 1')

    workers = workers or default_workers()
    sizes = [len(chunk) for chunk in np.array_split(np.arange(samples), workers)]
    streams = spawn_streams(rng, workers)

    if workers == 1:
        hits = overlap_hits(g.rows, base_ids, r, M, sizes[0], streams[0])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(lambda job: overlap_hits(g.rows, base_ids, r, M, *job), zip(sizes, streams)))

    p_hat = hits / samples
    return CondensationEstimate(p_hat, samples, M, wilson_radius(hits, samples), hits, r)


def overlap_pairs(cn: list, M: int) -> np.ndarray:
    """m x m booleans, |CN(Y_j) & CN(Y_j')| >= M for j != j'

    The diagonal is cleared: a set never counts as its own heavy partner, neither in the
    3^7 p m^2 cap nor in the W partner counts.
    """
    heavy = np.array([[(a & b).bit_count() >= M for b in cn] for a in cn], dtype=bool).reshape(len(cn), len(cn))
    np.fill_diagonal(heavy, False)
    return heavy


def tile_pattern(H: BipartiteGraph, copies: int) -> BipartiteGraph:
    return disjoint_union([H] * copies)


def _regular_degree(H: BipartiteGraph) -> int:
    degrees = {row.bit_count() for row in H.rows} | {col.bit_count() for col in H.columns}
    if H.upper_count != H.lower_count or len(degrees) != 1:
        logger.error("Pattern is not a regular bipartite graph with equal sides")
        raise ValueError('H must be r-regular with |V^up| = |V^down|')
    return degrees.pop()


def partition_indices(sizes, heavy: np.ndarray, beta0_size: float, p: float, guard: float = 0.0) -> QWRPartition:
    """Q: small common neighborhoods, ascending; W: heavily overlapping; R: the rest

    :param sizes: |CN| per index
    :param heavy: m x m booleans, overlap >= M
    """
    m = len(sizes)
    q = sorted((j for j in range(m) if sizes[j] <= beta0_size), key=lambda j: (sizes[j], j))
    in_q = set(q)
    partners = heavy.sum(axis=1)
    bar = math.sqrt(p) * m * (1 - guard)
    w = [j for j in range(m) if j not in in_q and partners[j] >= bar]
    in_w = set(w)
    rest = [j for j in range(m) if j not in in_q and j not in in_w]
    return QWRPartition(tuple(q), tuple(w), tuple(rest), beta0_size)


def embed_regular_noncondensed(g: BipartiteGraph, pair_cert: StandardPairCertificate, H: BipartiteGraph, M: int,
                               p: float, rng: np.random.Generator, **kwargs) -> EmbeddingResult:
    """Embed an r-regular bipartite H with its uppers inside CN(v1, v2)

    :param min_degree: Smallest accepted r
    :param resample_budget: Redraws of the upper tuple in phase one
    :param c_chernoff: Constant of the Chernoff bound, sets the candidate count h

    :returns: EmbeddingResult carrying a PatternEmbedding of H
    """
    config = settings('condensation')
    min_degree = kwargs.get('min_degree', config['min_degree'])
    budget = kwargs.get('resample_budget', config['resample_budget'])
    c_chernoff = kwargs.get('c_chernoff', config['c_chernoff'])
    guard = kwargs.get('guard_band', config['guard_band'])

    r = _regular_degree(H)
    if r < min_degree:
        logger.error("Pattern degree %d below the minimum %d", r, min_degree)
        raise ValueError(f'pattern degree {r} below min_degree {min_degree}')
    if r != pair_cert.r:
        raise ValueError(f'pattern degree {r} does not match the certificate arity {pair_cert.r}')

    result = EmbeddingResult(trials=1)
    low, alpha = g.lower_count, pair_cert.alpha
    base_ids = np.asarray(pair_base(g, pair_cert).ids())

    copies = max(1, math.ceil(alpha ** r * low / H.upper_count))
    if copies * H.upper_count > base_ids.size:
        capped = max(1, base_ids.size // H.upper_count)
        result.notes.append(f'tiling capped from {copies} to {capped} copies by |CN(v1, v2)| = {base_ids.size}')
        copies = capped
    pattern = tile_pattern(H, copies) if copies > 1 else H
    m = pattern.upper_count

    if base_ids.size < m:
        return result.fail('precondition', f'|CN(v1, v2)| = {base_ids.size} < m = {m}')

    rows = g.rows
    full = (1 << low) - 1
    index_sets = [list(pattern.neighborhood(j, Side.LOWER)) for j in range(m)]
    K = pair_cert.K

    # phase one: an upper tuple meeting the grid condition and the overlap-pair cap
    pair_cap = 3 ** 7 * p * m * m * (1 + guard)
    y = cn = heavy = None
    for _ in range(budget):
        candidate = rng.choice(base_ids, size=m, replace=False)
        cn = [reduce(and_, (rows[candidate[i]] for i in index_sets[j]), full) for j in range(m)]
        sizes = np.array([c.bit_count() for c in cn])

        if any(np.count_nonzero(sizes <= beta ** r * low) > m * K * beta ** (2 * r) * alpha ** (-2 * r) * (1 + guard)
               for beta in pair_cert.beta_grid):
            result.counters['condition_a'] += 1
            continue

        heavy = overlap_pairs(cn, M)
        if np.count_nonzero(heavy) > pair_cap:
            result.counters['condition_b'] += 1
            continue
        y = candidate
        break

    if y is None:
        return result.fail('resample_budget', f'phase one exhausted {budget} draws')

    # phase two
    beta0_pow = alpha ** (2 * r) * low / (4 * m * K)
    clamped = min(max(beta0_pow, pair_cert.alpha0 ** r), alpha ** r)
    if clamped != beta0_pow:
        result.notes.append(f'beta0^r clamped from {beta0_pow:.6g} to {clamped:.6g}')
    partition = partition_indices(sizes, heavy, clamped * low, p, guard)
    result.details['partition'] = partition

    images = [None] * m
    used = 0
    for j in partition.q + partition.w:
        free = cn[j] & ~used
        if not free:
            return result.fail('qw_stuck', f'no free common neighbor for index {j}')
        images[j] = lowest_bit(free)
        used |= 1 << images[j]

    # phase three: h candidates per remaining index, first unused one wins
    h = math.ceil(10 / c_chernoff * math.log(low)) if low > 1 else 1
    taken = used
    for j in partition.r:
        available = ids_from_bits(cn[j] & ~used, low)
        if available.size == 0:
            return result.fail('no_fresh_representative', f'index {j}: CN exhausted by Q and W')
        draws = rng.choice(available, size=min(h, available.size))
        pick = next((int(z) for z in draws if not (taken >> int(z)) & 1), None)
        if pick is None:
            return result.fail('no_fresh_representative', f'index {j}: all {draws.size} candidates taken')
        images[j] = pick
        taken |= 1 << pick

    embedding = PatternEmbedding(tuple(int(v) for v in y[:H.upper_count]), tuple(images[:H.lower_count]))
    violations = verify_pattern_embedding(g, H, embedding)
    if violations:
        logger.error("Q/W/R output failed verification: %s", violations[0])
        return result.fail('verify_failed', violations[0])

    result.embedding = embedding
    result.stage = 'success'
    result.counters['success'] += 1
    logger.info("Embedded %d-regular pattern (m=%d, |Q|=%d |W|=%d |R|=%d)", r, m,
                len(partition.q), len(partition.w), len(partition.r))
    return result
