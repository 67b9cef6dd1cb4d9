# -*- coding: utf-8 -*-
""""""
"""
Created on Tue Mar 12 09:15:31 2024

Dependent random choice embedding of Q_n

A = CN(X_1..X_s) for i.i.d. uniform lowers X_i, the odd class goes into A and
the even class is filled in greedily.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from operator import and_
from typing import Callable, Mapping, Optional

import numpy as np

from modules.bigraph import BipartiteGraph, Side, ids_from_bits, lowest_bit
from modules.hypercube import CubeVertex, check_dimension, cube_edges, cube_neighbors, even_class, odd_class
from modules.setup_logger import logger
from utils.utils import progress, settings, spawn_streams


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DrcParams:
    """s lowers sampled, tuples of arity r, threshold base beta, density bound alpha"""

    s: int
    r: int
    beta: Fraction
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'beta', Fraction(self.beta))
        object.__setattr__(self, 'alpha', Fraction(self.alpha))
        if self.s < 1 or self.r < 1:
            raise ValueError('s and r must be >= 1')
        if not 0 < self.beta <= self.alpha <= 1:
            logger.error("Need 0 < beta <= alpha <= 1, got beta=%s alpha=%s", self.beta, self.alpha)
            raise ValueError(f'need 0 < beta <= alpha <= 1, got beta={self.beta}, alpha={self.alpha}')


@dataclass(frozen=True)
class CubeEmbedding:
    """Q_n -> host, odd masks land on odd_side and even masks on the other side"""

    n: int
    odd_side: Side
    images: Mapping[int, int]

    def side_of(self, word: int) -> Side:
        return self.odd_side if word.bit_count() & 1 else self.odd_side.opposite

    def image(self, v: CubeVertex) -> tuple:
        return self.side_of(v.word), self.images[v.word]

    def items(self) -> list:
        """(mask, side, host id) sorted by mask"""
        return [(word, self.side_of(word), host) for word, host in sorted(self.images.items())]


@dataclass(frozen=True)
class PatternEmbedding:
    """Pattern upper i -> host upper upper_images[i], likewise for lowers"""

    upper_images: tuple
    lower_images: tuple


@dataclass(frozen=True)
class GreedyFailure:
    stuck: CubeVertex
    placed: int


@dataclass
class EmbeddingResult:
    """Outcome of an embedder call: the embedding, or None plus per-stage failure counts"""

    embedding: Optional[object] = None
    counters: Counter = field(default_factory=Counter)
    notes: list = field(default_factory=list)
    params: Optional[object] = None
    trials: int = 0
    stage: str = ''
    stuck: Optional[CubeVertex] = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.embedding is not None

    def fail(self, stage: str, note: str = '') -> 'EmbeddingResult':
        self.counters[stage] += 1
        self.stage = stage
        if note:
            self.notes.append(note)
        return self


def expected_cn_size_exact(g: BipartiteGraph, s: int) -> Fraction:
    """E|CN(X_1..X_s)| for i.i.d. uniform lowers, as sum over uppers of (deg/|V^down|)^s"""
    if s < 1:
        raise ValueError('s must be >= 1')
    degrees = Counter(row.bit_count() for row in g.rows)
    value = sum((count * Fraction(deg, g.lower_count) ** s for deg, count in degrees.items()), Fraction(0))
    assert value >= g.density() ** s * g.upper_count
    return value


def small_cn_histogram(rows, r: int, threshold, lower_count: int) -> Counter:
    """|CN| -> number of ordered r-tuples over `rows` whose common neighborhood has at most threshold vertices"""
    distinct = Counter(rows)
    total = sum(distinct.values())
    histogram = Counter()

    def walk(depth: int, cn: int, weight: int):
        if depth == r or cn == 0:
            size = cn.bit_count()
            if size <= threshold:
                histogram[size] += weight * total ** (r - depth)
            return
        for row, count in distinct.items():
            walk(depth + 1, cn & row, weight * count)

    walk(0, (1 << lower_count) - 1, 1)
    return histogram


def expected_bad_tuples_exact(g: BipartiteGraph, params: DrcParams, **kwargs) -> Fraction:
    """E of the (|CN(y)|/|V^down|)^s mass carried by ordered r-tuples with |CN(y)| <= beta^r |V^down|"""
    cap = kwargs.get('cap', settings('drc')['bad_tuple_cap'])
    if g.upper_count ** params.r > cap:
        logger.error("%d^%d tuples exceed the enumeration cap %d", g.upper_count, params.r, cap)
        raise ValueError('too many tuples for exact enumeration, use '
                         "condensation.bad_tuple_count(mode='sampled') instead")
    if g.density() < params.alpha:
        logger.error("Graph density %s is below the asserted alpha %s", g.density(), params.alpha)
        raise ValueError('graph density below params.alpha')

    threshold = params.beta ** params.r * g.lower_count
    histogram = small_cn_histogram(g.rows, params.r, threshold, g.lower_count)
    value = sum((count * Fraction(size, g.lower_count) ** params.s for size, count in histogram.items()),
                Fraction(0))
    assert value <= params.beta ** (params.r * params.s) * g.upper_count ** params.r
    return value


def sample_cn_sizes(g: BipartiteGraph, s: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo draws of |CN(X_1..X_s)|"""
    columns = g.columns
    draws = rng.integers(0, g.lower_count, size=(samples, s))
    return np.array([reduce(and_, (columns[x] for x in row)).bit_count() for row in draws.tolist()])


def drc_parameters(g: BipartiteGraph, n: int) -> tuple:
    """s and beta from the host sizes, clamped where the formulas degenerate

    :returns: (s, beta, notes)
    """
    alpha = g.density()
    notes = []

    if alpha == 0 or alpha == 1:
        s = 1
        notes.append(f'density {alpha}: log(1/alpha) unusable, s set to 1')
    else:
        raw = math.floor(math.log(g.upper_count / 2 ** n) / math.log(1 / alpha))
        s = max(raw, 1)
        if raw < 1:
            notes.append(f's clamped from {raw} to 1')

    beta = Fraction(2 / g.lower_count ** (1 / n))
    if alpha > 0 and beta > alpha:
        notes.append(f'beta clamped from {float(beta):.6g} to alpha={float(alpha):.6g}')
        beta = alpha
    return s, beta, notes


def drc_embed_cube(g: BipartiteGraph, n: int, trials: int, rng: np.random.Generator, **kwargs) -> EmbeddingResult:
    """Embed Q_n by dependent random choice

    :param g: Host graph
    :param n: Cube dimension
    :param trials: Independent trials, the first verified success is returned
    :param rng: Generator, one child stream is spawned per trial
    :param resample_budget: Redraws of X per trial while |A| < 2^(n-1)

    :returns: EmbeddingResult
    """
    check_dimension(n)
    if trials < 1:
        logger.error("drc_embed_cube needs at least one trial")
        raise ValueError('trials must be >= 1')

    budget = kwargs.get('resample_budget', settings('drc')['resample_budget'])
    result = EmbeddingResult()
    half = 1 << (n - 1)

    if g.upper_count < half or g.lower_count < half:
        logger.warning("Host %dx%d too small for Q_%d", g.upper_count, g.lower_count, n)
        return result.fail('precondition', f'host {g.upper_count}x{g.lower_count} has a side smaller than 2^{n - 1}')

    s, beta, notes = drc_parameters(g, n)
    result.notes.extend(notes)
    if g.density() > 0:
        result.params = DrcParams(s, n, beta, g.density())

    odd = odd_class(n)
    for trial, stream in enumerate(progress(spawn_streams(rng, trials), desc='DRC trials', total=trials)):
        result.trials += 1

        a_ids = None
        for _ in range(budget):
            xs = stream.integers(0, g.lower_count, size=s).tolist()
            a = g.common_neighborhood_bits(xs, Side.LOWER)
            if a.bit_count() >= half:
                a_ids = ids_from_bits(a, g.upper_count)
                break
            result.counters['a_too_small'] += 1

        if a_ids is None:
            result.fail('a_too_small')
            continue

        chosen = stream.permutation(a_ids)[:half]
        assignment = {v.word: int(host) for v, host in zip(odd, chosen)}

        outcome = greedy_extend(g, n, assignment, odd_side=Side.UPPER)
        if isinstance(outcome, GreedyFailure):
            result.fail('greedy_stuck')
            result.stuck = outcome.stuck
            logger.debug("trial %d: greedy stuck at %s", trial, outcome.stuck.label())
            continue

        violations = verify_embedding(g, outcome)
        if violations:
            logger.error("trial %d: greedy output failed verification: %s", trial, violations[0])
            result.fail('verify_failed')
            continue

        result.embedding = outcome
        result.stage = 'success'
        result.counters['success'] += 1
        logger.info("Q_%d embedded after %d trial(s)", n, result.trials)
        return result

    logger.info("Q_%d not embedded in %d trials: %s", n, trials, dict(result.counters))
    return result


def greedy_extend(g: BipartiteGraph, n: int, odd_assignment: Mapping[int, int], odd_side: Side = Side.UPPER,
                  neighbor_order: Optional[Callable] = None):
    """Place even vertices in ascending mask order on the lowest free common neighbor

    :param odd_assignment: odd mask -> host id on odd_side, injective
    :param neighbor_order: v -> its cube neighbors, default cube_neighbors

    :returns: CubeEmbedding or GreedyFailure
    """
    check_dimension(n)
    if set(odd_assignment) != {v.word for v in odd_class(n)}:
        logger.error("Odd assignment does not cover the odd class of Q_%d", n)
        raise ValueError('odd assignment must cover exactly the odd class')
    hosts = list(odd_assignment.values())
    if len(set(hosts)) != len(hosts):
        raise ValueError('odd assignment is not injective')
    if any(not 0 <= host < g.part_size(odd_side) for host in hosts):
        raise ValueError('odd assignment has out-of-range host ids')

    order = neighbor_order or cube_neighbors
    adjacency = g.rows if odd_side is Side.UPPER else g.columns
    full = (1 << g.part_size(odd_side.opposite)) - 1
    images = dict(odd_assignment)
    used = 0

    for placed, v in enumerate(even_class(n)):
        cn = full
        for nb in order(v):
            cn &= adjacency[images[nb.word]]
            if not cn:
                break
        free = cn & ~used
        if not free:
            return GreedyFailure(stuck=v, placed=placed)
        pick = lowest_bit(free)
        used |= 1 << pick
        images[v.word] = pick

    return CubeEmbedding(n, odd_side, images)


def verify_embedding(g: BipartiteGraph, e: CubeEmbedding) -> list:
    """Injectivity, side ranges and all n * 2^(n-1) cube edges; empty list means ok"""
    violations = []
    expected = range(1 << e.n)

    missing = sorted(set(expected) - set(e.images))
    if missing:
        violations.append(f'{len(missing)} cube vertices unmapped, first {missing[0]}')
    extra = sorted(set(e.images) - set(expected))
    if extra:
        violations.append(f'{len(extra)} images for masks outside Q_{e.n}')

    owner = {Side.UPPER: {}, Side.LOWER: {}}
    valid = {}
    for word, side, host in e.items():
        if word not in expected:
            continue
        if not 0 <= host < g.part_size(side):
            violations.append(f'mask {word} mapped to out-of-range {side.name.lower()} {host}')
            continue
        if host in owner[side]:
            violations.append(f'injectivity: masks {owner[side][host]} and {word} share '
                              f'{side.name.lower()} {host}')
        owner[side][host] = word
        valid[word] = host

    for odd, even in cube_edges(e.n):
        if odd.word not in valid or even.word not in valid:
            continue
        if e.odd_side is Side.UPPER:
            u, v = valid[odd.word], valid[even.word]
        else:
            u, v = valid[even.word], valid[odd.word]
        if not g.has_edge(u, v):
            violations.append(f'edge {odd.label()}-{even.label()} maps to non-edge ({u}, {v})')

    return violations


def verify_pattern_embedding(host: BipartiteGraph, pattern: BipartiteGraph, emb: PatternEmbedding) -> list:
    """Generic check for an embedding of a bipartite pattern; empty list means ok"""
    violations = []
    sides = ((Side.UPPER, emb.upper_images, pattern.upper_count),
             (Side.LOWER, emb.lower_images, pattern.lower_count))

    for side, images, count in sides:
        if len(images) != count:
            violations.append(f'{side.name.lower()} images: expected {count}, got {len(images)}')
            continue
        if any(not 0 <= h < host.part_size(side) for h in images):
            violations.append(f'{side.name.lower()} images out of host range')
        if len(set(images)) != len(images):
            violations.append(f'injectivity: repeated {side.name.lower()} images')
    if violations:
        return violations

    for u, v in pattern.edges():
        if not host.has_edge(emb.upper_images[u], emb.lower_images[v]):
            violations.append(f'pattern edge ({u}, {v}) maps to non-edge '
                              f'({emb.upper_images[u]}, {emb.lower_images[v]})')
    return violations
