# -*- coding: utf-8 -*-
""""""
"""
Created on Mon Mar 18 10:05:44 2024

Density trichotomy

Either a standard pair whose r-tuple neighborhoods are not condensed, or a denser subgraph,
or a block-structured subgraph. The driver strips one block of lowers per round until one of
the three outcomes is certified, embed_auto dispatches the matching embedder.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from functools import reduce
from operator import and_
from typing import ClassVar, Optional, Union

import numpy as np
import pandas as pd
import yaml

from analysis.estimators import wilson_radius
from modules.bigraph import BipartiteGraph, Side, VertexSet
from modules.blocks import BlockStructure, block_embed_cube, exact, validate_block_structure
from modules.condensation import (CondensationEstimate, StandardPairCertificate, StandardPairFailure,
                                  embed_regular_noncondensed, estimate_condensation, find_standard_pair,
                                  pair_base, standard_constant)
from modules.embedder_drc import CubeEmbedding, EmbeddingResult, drc_embed_cube, verify_embedding
from modules.harness import brute_force_embed, cube_embedding_from_pattern
from modules.hypercube import check_dimension, cube_as_bigraph
from modules.setup_logger import logger
from utils.utils import settings


logger = logging.getLogger(__name__)

C_PRIME = (-25 + math.sqrt(881)) / 128


@dataclass(frozen=True)
class ParameterSchedule:
    """Every constant of the embedding pipeline for one cube dimension and host size"""

    n: int
    upper_count: int
    lower_count: int
    mu: float
    alpha: float
    alpha0: float
    c_prime: float
    c: float
    c_chernoff: float
    c_standard: float
    c_condense: float
    M: int
    p: float
    u: int
    w: int
    h: float
    k: int
    g: int
    audit: tuple = ()

    @property
    def r(self) -> int:
        return self.n

    @property
    def m(self) -> int:
        return 1 << (self.n - 1)

    @property
    def block_size(self) -> int:
        return self.g

    def to_dict(self) -> dict:
        values = {f.name: getattr(self, f.name) for f in fields(self) if f.name != 'audit'}
        values.update(r=self.r, m=self.m, audit=list(self.audit))
        return values

    def dump(self, path) -> None:
        with open(path, 'w', encoding='utf-8') as stream:
            yaml.dump(self.to_dict(), stream, default_flow_style=False, sort_keys=False)


def _capped_exp(log_value: float, cap: float) -> float:
    return cap if log_value >= math.log(cap) else math.exp(log_value)


def build_schedule(n: int, upper_count: int, lower_count: int, overrides: Optional[dict] = None) -> ParameterSchedule:
    """Constants and derived sizes for embedding Q_n into a host of the given size

    Degenerate values at small sizes are clamped; every clamp and override lands in the audit log.

    :param overrides: Field name -> value, applied to the base constants before deriving and to
        derived fields after
    """
    if n < 2:
        logger.error("Schedule needs n >= 2, got %d", n)
        raise ValueError('n must be >= 2')
    config = settings('trichotomy')
    overrides = dict(overrides or {})
    unknown = set(overrides) - {f.name for f in fields(ParameterSchedule)} - {'audit'}
    if unknown:
        logger.error("Unknown schedule overrides %s", sorted(unknown))
        raise ValueError(f'unknown schedule fields {sorted(unknown)}')
    audit = [f'override {key}={value}' for key, value in overrides.items()]

    mu = float(overrides.get('mu', config['mu']))
    alpha = float(overrides.get('alpha', config['alpha']))
    alpha0 = float(overrides.get('alpha0', config['alpha0']))
    c_chernoff = float(overrides.get('c_chernoff', settings('condensation')['c_chernoff']))
    c_condense = float(overrides.get('c_condense', config['c_condense']))
    c_standard = float(overrides.get('c_standard', standard_constant(alpha0, mu)))
    c_prime = C_PRIME
    c = c_prime - 100 * mu

    m = 1 << (n - 1)
    low = lower_count
    log2 = math.log(2)
    shrink = math.log((1 - mu) * alpha)
    if low < 3:
        audit.append(f'log log |V^down| undefined or negative at |V^down| = {low}, taken as 0')
        loglog = 0.0
    else:
        loglog = math.log(math.log(low))

    log_M = (2 * math.log(c_chernoff) + 4 * n * shrink + 4 * math.log(low)
             - 9 * log2 - 2 * math.log(c_standard) - 3 * math.log(m) - 6 * math.log(n)
             - math.log(400) - 2 * loglog)
    M = math.floor(_capped_exp(log_M, 2.0 ** 62))
    if M < 1:
        audit.append(f'M clamped from exp({log_M:.4g}) to 1')
        M = 1

    log_root = (math.log(c_chernoff) + 2 * n * shrink + 2 * math.log(low)
                - math.log(16 * 3 ** 7) - math.log(c_standard) - 3 * math.log(n) - 2 * math.log(m)
                - math.log(20) - loglog)
    log_p = 2 * log_root
    if log_p > 0:
        audit.append(f'p clamped from exp({log_p:.4g}) to 1')
        p = 1.0
    elif log_p < math.log(config['p_floor']):
        audit.append(f'p clamped from exp({log_p:.4g}) to {config["p_floor"]}')
        p = float(config['p_floor'])
    else:
        p = math.exp(log_p)
    M = int(overrides.get('M', M))
    p = float(overrides.get('p', p))

    u = int(overrides.get('u', math.isqrt(n)))
    g = max(1, math.ceil(c_condense * p * M))
    if 'g' in overrides:
        g = int(overrides['g'])

    facet_log = math.floor(math.log2(g) - u - 1)
    w = n - facet_log
    if not 0 <= w <= n - 2:
        clamped = min(max(w, 0), n - 2)
        audit.append(f'w clamped from {w} to {clamped}')
        w = clamped
    w = int(overrides.get('w', w))

    # h from (c pM / (-h log2(p/2)))^((n+w)/n) = 2^(2w+cn-n) (1-mu)^(-3n)
    target = ((2 * w + c * n - n) * log2 - 3 * n * math.log(1 - mu)) * n / (n + w)
    log_h = math.log(c_condense * p * M) - math.log(-math.log2(p / 2)) - target
    h = float(overrides.get('h', _capped_exp(log_h, 1e300)))
    if not 0 < h < 1e300:
        audit.append(f'h clamped from exp({log_h:.4g})')
        h = min(max(h, 1e-300), 1e300)

    k = max(1, math.ceil(mu * alpha * low / g))
    if 'k' in overrides:
        k = int(overrides['k'])

    schedule = ParameterSchedule(n, upper_count, lower_count, mu, alpha, alpha0, c_prime, c, c_chernoff,
                                 c_standard, c_condense, M, p, u, w, h, k, g, tuple(audit))
    for line in audit:
        logger.info("schedule: %s", line)
    return schedule


def expected_cn_size(g: BipartiteGraph, r: int, base: Optional[VertexSet] = None) -> Fraction:
    """E|CN(Y_1..Y_r)| for i.i.d. uniform uppers from base (default all uppers), exactly"""
    if base is None:
        base = VertexSet.full(Side.UPPER, g.upper_count)
    size = len(base)
    if size == 0:
        raise ValueError('empty base')
    counts = Counter((col & base.bits).bit_count() for col in g.columns)
    return sum((count * Fraction(deg, size) ** r for deg, count in counts.items()), Fraction(0))


@dataclass(frozen=True, eq=False)
class DenseSubgraph:
    """Case (b): the induced subgraph on uppers and lowers is denser than the host"""

    kind: ClassVar[str] = 'b'

    uppers: VertexSet
    lowers: VertexSet
    density: Fraction
    bound_power: Fraction
    r: int
    h: float
    iteration: int = 0
    upper_bounds: dict = field(default_factory=dict)
    history: Optional[pd.DataFrame] = None

    @property
    def bound(self) -> float:
        """(h / (2 |V^down|))^(1/r)"""
        return float(self.bound_power) ** (1 / self.r)

    def subgraph(self, g: BipartiteGraph) -> tuple:
        return g.induced_subgraph(self.uppers, self.lowers)

    def recheck(self, g: BipartiteGraph, rng=None) -> list:
        problems = []
        sub, _ = self.subgraph(g)
        measured = sub.density()
        if measured ** self.r < self.bound_power:
            problems.append(f'density {float(measured):.6g} below {self.bound:.6g}')
        if len(self.lowers) < exact(self.h) / 2:
            problems.append(f'|S| = {len(self.lowers)} < h/2 = {self.h / 2:.6g}')
        return problems


def densify_from_expectation(g: BipartiteGraph, r: int, h_threshold, base: Optional[VertexSet] = None) \
        -> Optional[DenseSubgraph]:
    """Lowers that a uniform upper from base hits often enough

    S = {v : p_v^r >= h / (2 |V^down|)} with p_v the share of base adjacent to v. Returns None when
    E|CN(Y_1..Y_r)| < h.
    """
    if r < 1 or h_threshold <= 0:
        raise ValueError('need r >= 1 and h > 0')
    if base is None:
        base = VertexSet.full(Side.UPPER, g.upper_count)
    h = exact(h_threshold)
    if expected_cn_size(g, r, base) < h:
        return None

    size = len(base)
    bar = h / (2 * g.lower_count)
    chosen = [v for v, col in enumerate(g.columns) if Fraction((col & base.bits).bit_count(), size) ** r >= bar]
    lowers = VertexSet.from_ids(Side.LOWER, g.lower_count, chosen)
    sub, _ = g.induced_subgraph(base, lowers)
    measured = sub.density()

    assert len(lowers) >= h / 2
    assert measured ** r >= bar
    logger.info("Dense subgraph %dx%d, density %.4g >= %.4g", size, len(lowers), float(measured),
                float(bar) ** (1 / r))
    return DenseSubgraph(base, lowers, measured, bar, r, float(h_threshold))


@dataclass(frozen=True)
class DyadicSearch:
    histogram: dict
    bar: float
    outer: int
    inner: int


@dataclass(frozen=True)
class CondensedSet:
    """Lowers with large neighbor share inside CN(v1, v2), picked through one concrete r-tuple"""

    base: VertexSet
    lowers: VertexSet
    y: tuple
    dyadic_class: int
    threshold: float
    density: Fraction
    size_bound: float
    search: DyadicSearch
    shares: dict

    @property
    def bound(self) -> float:
        return self.threshold ** (1 / len(self.y))

    @property
    def size_ok(self) -> bool:
        return len(self.lowers) >= self.size_bound


@dataclass(frozen=True)
class DensifyFailure:
    reason: str
    search: Optional[DyadicSearch] = None


def _dyadic_class(hits: int, total: int, cap: int) -> Optional[int]:
    """i with hits/total in (2^-(i+1), 2^-i], None for zero or beyond the cap"""
    if hits == 0:
        return None
    i = 0
    while hits << (i + 1) <= total:
        i += 1
        if i > cap:
            return None
    return i


def densify_from_condensation(g: BipartiteGraph, pair, r: int, M: int, p: float, h_threshold,
                              rng: np.random.Generator, **kwargs) -> Union[CondensedSet, DensifyFailure]:
    """Dyadic search over conditional overlap probabilities

    Each sampled r-tuple y from CN(v1, v2) gets an inner estimate of P(|CN(y) & CN(Y~)| >= M);
    the best dyadic class with 2^-i P(class) >= p / (-2 log2(p/4)) supplies a tuple with small
    |CN(y)|, and S keeps the lowers of CN(y) whose share q_v satisfies q_v^r >= pM / (-8 h log2(p/4)).

    :param estimate: A CondensationEstimate already at hand, skips the precondition re-estimate
    :param outer_samples: Tuples y drawn
    :param inner_samples: Tuples Y~ per conditional estimate
    """
    config = settings('trichotomy')
    outer = kwargs.get('outer_samples', config['outer_samples'])
    inner = kwargs.get('inner_samples', config['inner_samples'])
    cap = kwargs.get('max_dyadic_class', config['max_dyadic_class'])
    if not 0 < p <= 1:
        raise ValueError('p must lie in (0, 1]')

    base = pair_base(g, pair)
    estimate = kwargs.get('estimate') or estimate_condensation(
        g, pair, r, M, settings('condensation')['samples'], rng)
    if not estimate.decisively_above(p):
        logger.error("Not condensed: p_hat=%.4g radius=%.4g vs p=%.4g", estimate.p_hat, estimate.wilson_radius, p)
        raise ValueError(f'collection is not confirmed (p, M)-condensed: p_hat={estimate.p_hat:.4g}, p={p}')
    h = exact(h_threshold)
    if expected_cn_size(g, r, base) > h:
        logger.error("E|CN(Y)| over CN(v1, v2) exceeds h=%s", h_threshold)
        raise ValueError('E|CN(Y)| over CN(v1, v2) exceeds h')

    rows = g.rows
    base_ids = np.asarray(base.ids())
    full = (1 << g.lower_count) - 1
    outer_tuples = rng.choice(base_ids, size=(outer, r)).tolist()
    inner_cns = [reduce(and_, (rows[v] for v in t), full) for t in rng.choice(base_ids, size=(inner, r)).tolist()]

    classes = {}
    members = {}
    for y in outer_tuples:
        cn = reduce(and_, (rows[v] for v in y), full)
        hits = sum(1 for other in inner_cns if (cn & other).bit_count() >= M)
        i = _dyadic_class(hits, inner, cap)
        if i is None:
            continue
        classes[i] = classes.get(i, 0) + 1
        members.setdefault(i, []).append((cn.bit_count(), tuple(int(v) for v in y), cn))

    log_term = -math.log2(p / 4)
    bar = p / (2 * log_term)
    search = DyadicSearch(dict(sorted(classes.items())), bar, outer, inner)
    scores = {i: 2.0 ** -i * count / outer for i, count in classes.items()}
    qualifying = [i for i in sorted(scores) if scores[i] >= bar]
    if not qualifying:
        logger.warning("No dyadic class reaches %.4g: %s", bar, search.histogram)
        return DensifyFailure('no_dyadic_class', search)

    i0 = max(qualifying, key=lambda i: (scores[i], -i))
    size_cap = float(h) * 2 * log_term / (2 ** i0 * p)
    size, y, cn = min(members[i0])
    if size > size_cap:
        return DensifyFailure('no_small_tuple', search)

    threshold = p * M / (8 * float(h) * log_term)
    columns = g.columns
    shares = {}
    chosen = []
    for v in VertexSet(Side.LOWER, g.lower_count, cn):
        share = Fraction((columns[v] & base.bits).bit_count(), len(base))
        shares[v] = share
        if share ** r >= threshold:
            chosen.append(v)
    if not chosen:
        return DensifyFailure('empty_set', search)

    lowers = VertexSet.from_ids(Side.LOWER, g.lower_count, chosen)
    sub, _ = g.induced_subgraph(base, lowers)
    found = CondensedSet(base, lowers, y, i0, threshold, sub.density(), 2.0 ** (-i0 - 2) * M, search, shares)
    logger.info("Condensed set: class %d, |S| = %d (bound %.4g), density %.4g >= %.4g", i0, len(lowers),
                found.size_bound, float(found.density), found.bound)
    return found


def check_condensed(g: BipartiteGraph, found: CondensedSet) -> Union[CondensedSet, DensifyFailure]:
    """Re-measure S on g against |S| >= 2^(-i0-2) M and d(CN(v1, v2), S) >= threshold^(1/r)"""
    if not found.size_ok:
        logger.warning("|S| = %d below the size bound %.4g", len(found.lowers), found.size_bound)
        return DensifyFailure('size_bound', found.search)
    sub, _ = g.induced_subgraph(found.base, found.lowers)
    if sub.density() < found.bound:
        logger.warning("d(CN(v1, v2), S) = %.4g below %.4g", float(sub.density()), found.bound)
        return DensifyFailure('density_bound', found.search)
    return found


@dataclass(frozen=True, eq=False)
class NonCondensed:
    """Case (a): standard pair of G^(l) whose r-tuple neighborhoods are not (p, M)-condensed"""

    kind: ClassVar[str] = 'a'

    iteration: int
    removed: VertexSet
    pair: StandardPairCertificate
    estimate: CondensationEstimate
    p: float
    history: Optional[pd.DataFrame] = None

    def subgraph(self, g: BipartiteGraph) -> BipartiteGraph:
        """G^(l): the host with the edges of earlier blocks stripped"""
        return g.remove_edges_at_lowers(self.removed)

    def recheck(self, g: BipartiteGraph, rng: Optional[np.random.Generator] = None) -> list:
        """Recount CN(v1, v2) and the interval arithmetic; with rng also re-estimate

        A fresh estimate only counts against the certificate when it is decisively condensed.
        """
        problems = []
        sub = self.subgraph(g)
        size = len(pair_base(sub, self.pair))
        if size != self.pair.cn_size:
            problems.append(f'|CN(v1, v2)| = {size}, certificate says {self.pair.cn_size}')
        est = self.estimate
        if est.hits != round(est.p_hat * est.samples):
            problems.append('p_hat does not match hits / samples')
        if abs(wilson_radius(est.hits, est.samples) - est.wilson_radius) > 1e-12:
            problems.append('Wilson radius does not match hits and samples')
        if not est.decisively_below(self.p):
            problems.append(f'p_hat + radius = {est.upper:.4g} is not below p = {self.p:.4g}')
        if rng is not None and size:
            fresh = estimate_condensation(sub, self.pair, est.r, est.M, est.samples, rng)
            if fresh.decisively_above(self.p):
                problems.append(f'fresh estimate {fresh.p_hat:.4g} is decisively condensed')
        return problems


@dataclass(frozen=True, eq=False)
class BlockCertificate:
    """Case (c): block-structured subgraph on all uppers and the stripped lowers

    lower_ids maps the subgraph's lowers back to host lowers.
    """

    kind: ClassVar[str] = 'c'

    graph: BipartiteGraph
    structure: BlockStructure
    lower_ids: tuple
    claimed_delta: float
    claimed_gamma: float
    history: Optional[pd.DataFrame] = None

    def recheck(self, g: BipartiteGraph, rng=None) -> list:
        problems = []
        if self.graph.upper_count != g.upper_count:
            problems.append('upper sides differ')
            return problems
        for u, v in self.graph.edges():
            if not g.has_edge(u, self.lower_ids[v]):
                problems.append(f'edge ({u}, {v}) is not an edge of the host')
                break
        if len(set(self.lower_ids)) != len(self.lower_ids):
            problems.append('lower map is not injective')
        problems.extend(f'bullet {item.bullet}, block {item.block}: {item.detail}'
                        for item in validate_block_structure(self.graph, self.structure))
        return problems


TrichotomyCertificate = Union[NonCondensed, DenseSubgraph, BlockCertificate]


@dataclass
class DriveFailure:
    stage: str
    iteration: int
    detail: str
    history: Optional[pd.DataFrame] = None


def _clamp_block(chosen: CondensedSet, size: int, used: int, g: BipartiteGraph) -> Optional[list]:
    """Exactly `size` fresh lowers: drop lowest shares first, pad with the best remaining shares"""
    ranked = sorted(chosen.lowers, key=lambda v: (-chosen.shares[v], v))
    if len(ranked) >= size:
        return sorted(ranked[:size])
    base_bits = chosen.base.bits
    columns = g.columns
    spare = [v for v in range(g.lower_count) if not (used >> v) & 1 and v not in chosen.lowers]
    spare.sort(key=lambda v: (-(columns[v] & base_bits).bit_count(), v))
    padded = ranked + spare[:size - len(ranked)]
    return sorted(padded) if len(padded) == size else None


def _assemble_blocks(g: BipartiteGraph, ups: list, downs: list, schedule: ParameterSchedule) \
        -> Optional[BlockCertificate]:
    """Block subgraph of the stripped lowers, None when some block has no edges"""
    lower_ids = [v for block in downs for v in block]
    size = len(downs[0])
    matrix = g.to_matrix()[:, lower_ids]
    keep = np.zeros_like(matrix)
    densities = []
    for ell, upper_set in enumerate(ups):
        cols = np.arange(ell * size, (ell + 1) * size)
        rows = np.asarray(upper_set.ids())
        keep[np.ix_(rows, cols)] = True
        densities.append(Fraction(int(matrix[np.ix_(rows, cols)].sum()), len(rows) * size))
    if min(densities) == 0:
        return None
    graph = BipartiteGraph.from_matrix(matrix & keep)

    claimed_delta = max(0.0, 1 - (schedule.c_condense * schedule.p * schedule.M
                                  / (-schedule.h * math.log2(schedule.p / 2))) ** (1 / schedule.r))
    claimed_gamma = (1 - schedule.mu) ** 3 * schedule.alpha ** 2
    measured_delta = 1 - min(densities)
    delta = max(exact(claimed_delta), measured_delta)
    if delta >= 1:
        delta = measured_delta
    gamma = min(exact(claimed_gamma), min(Fraction(len(s), g.upper_count) for s in ups))
    if delta != exact(claimed_delta) or gamma != exact(claimed_gamma):
        logger.info("Block parameters measured: delta=%.4g (claimed %.4g), gamma=%.4g (claimed %.4g)",
                    float(delta), claimed_delta, float(gamma), claimed_gamma)

    k = len(downs)
    lower_count = k * size
    lower_blocks = [VertexSet.from_ids(Side.LOWER, lower_count, range(ell * size, (ell + 1) * size))
                    for ell in range(k)]
    structure = BlockStructure(delta, gamma, k, size, tuple(lower_blocks), tuple(ups))
    return BlockCertificate(graph, structure, tuple(lower_ids), claimed_delta, claimed_gamma)


def trichotomy_drive(g: BipartiteGraph, schedule: ParameterSchedule, rng: np.random.Generator,
                     **kwargs) -> Union[TrichotomyCertificate, DriveFailure]:
    """Iterate standard pair -> condensation test -> densification until a certificate emerges

    :param pair_attempts: Draws per standard pair search
    :param samples: Initial condensation sample count, doubled while the interval straddles p
    :param max_condensation_samples: Cap on the doubling
    :param max_iterations: Rounds before giving up

    :returns: NonCondensed, DenseSubgraph or BlockCertificate with a history table, or DriveFailure
    """
    config = settings('trichotomy')
    pair_attempts = kwargs.get('pair_attempts', settings('condensation')['pair_attempts'])
    samples0 = kwargs.get('samples', settings('condensation')['samples'])
    max_samples = kwargs.get('max_condensation_samples', config['max_condensation_samples'])
    max_iterations = kwargs.get('max_iterations', config['max_iterations'])
    workers = kwargs.get('workers')

    r, M, p, h = schedule.r, schedule.M, schedule.p, schedule.h
    alpha = exact(schedule.alpha)
    mu = schedule.mu
    up, low = g.upper_count, g.lower_count
    if g.density() < alpha:
        logger.error("Density %.6g below schedule alpha %.6g", float(g.density()), schedule.alpha)
        raise ValueError(f'density {float(g.density()):.6g} below alpha {schedule.alpha}')
    if ((1 - mu) * schedule.alpha) ** 2 * up < r ** 2:
        logger.error("((1-mu) alpha)^2 |V^up| < r^2 for r=%d", r)
        raise ValueError('((1 - mu) alpha)^2 |V^up| must be at least r^2')

    block_size = schedule.block_size
    exit_round = mu * schedule.alpha * low / block_size
    current = g
    used = 0
    ups, downs = [], []
    history = []

    def table() -> pd.DataFrame:
        return pd.DataFrame(history)

    def failed(stage: str, ell: int, detail: str) -> DriveFailure:
        logger.warning("Drive failed at iteration %d, stage %s: %s", ell, stage, detail)
        return DriveFailure(stage, ell, detail, table())

    for ell in range(1, max_iterations + 1):
        floor = alpha - Fraction((ell - 1) * block_size, low)
        row = {'iteration': ell, 'density': float(current.density()), 'floor': float(floor)}
        history.append(row)
        if current.density() < floor:
            return failed('density_floor', ell, f'density {row["density"]:.6g} below floor {row["floor"]:.6g}')

        try:
            pair = find_standard_pair(current, schedule.alpha0, mu, r, pair_attempts, rng,
                                      c_standard=schedule.c_standard)
        except ValueError as exc:
            return failed('standard_pair', ell, str(exc))
        if isinstance(pair, StandardPairFailure):
            return failed('standard_pair', ell, f'{pair.failed_condition} after {pair.attempts} attempts')
        row.update(v1=pair.v1, v2=pair.v2, cn_size=pair.cn_size)

        samples = samples0
        estimate = estimate_condensation(current, pair, r, M, samples, rng, workers=workers)
        while not (estimate.decisively_below(p) or estimate.decisively_above(p)) and samples * 2 <= max_samples:
            samples *= 2
            estimate = estimate_condensation(current, pair, r, M, samples, rng, workers=workers)
        row.update(p_hat=estimate.p_hat, radius=estimate.wilson_radius, samples=estimate.samples)

        removed = VertexSet(Side.LOWER, low, used)
        if estimate.decisively_below(p):
            row['branch'] = 'a'
            logger.info("Non-condensed standard pair (%d, %d) at iteration %d", pair.v1, pair.v2, ell)
            return NonCondensed(ell, removed, pair, estimate, p, table())
        if not estimate.decisively_above(p):
            return failed('ambiguous_condensation', ell,
                          f'p_hat={estimate.p_hat:.4g} +- {estimate.wilson_radius:.4g} straddles p={p:.4g}')

        base = pair_base(current, pair)
        expectation = expected_cn_size(current, r, base)
        row['expectation'] = float(expectation)
        if expectation >= exact(h):
            dense = densify_from_expectation(current, r, h, base=base)
            row['branch'] = 'b'
            bounds = {'statement': schedule.alpha ** 2 / 2 * up,
                      'construction': (1 - mu) * ((1 - mu) * schedule.alpha) ** 2 * up}
            return replace(dense, iteration=ell, upper_bounds=bounds, history=table())

        found = densify_from_condensation(current, pair, r, M, p, h, rng, estimate=estimate)
        if isinstance(found, CondensedSet):
            found = check_condensed(current, found)
        if isinstance(found, DensifyFailure):
            row['densify'] = found.reason
            return failed('densify_condensation', ell, f'{found.reason}, classes {found.search.histogram}')
        row.update(densify='ok', condensed_lowers=len(found.lowers))

        block = _clamp_block(found, block_size, used, current)
        if block is None:
            return failed('block_size', ell, f'cannot fill a block of {block_size} fresh lowers')
        padded = max(0, block_size - len(found.lowers))
        if padded:
            logger.info("Block padded with %d lowers outside S at iteration %d", padded, ell)
        row.update(branch='strip', block_lowers=len(block), padded=padded, dyadic_class=found.dyadic_class)

        ups.append(found.base)
        downs.append(block)
        stripped = VertexSet.from_ids(Side.LOWER, low, block)
        used |= stripped.bits
        current = current.remove_edges_at_lowers(stripped)

        if ell >= exit_round:
            certificate = _assemble_blocks(g, ups, downs, schedule)
            if certificate is None:
                return failed('degenerate_block', ell, 'a block has no edges')
            history[-1]['branch'] = 'c'
            logger.info("Block structure with %d block(s) of %d lowers", len(downs), block_size)
            return replace(certificate, history=table())

    return failed('iteration_budget', max_iterations, f'no certificate within {max_iterations} iterations')


def majority_color(coloring) -> int:
    """Color owning at least half of the cut edges between the two halves, ties go to 0"""
    cut = _check_coloring(coloring)
    return 0 if 2 * np.count_nonzero(cut == 0) >= cut.size else 1


def _check_coloring(coloring) -> np.ndarray:
    coloring = np.asarray(coloring)
    N = coloring.shape[0]
    if coloring.ndim != 2 or coloring.shape != (N, N):
        raise ValueError('coloring must be a square matrix')
    if N % 2 or N < 2:
        logger.error("Equipartition needs an even N >= 2, got %d", N)
        raise ValueError(f'N must be even and >= 2, got {N}')
    off = ~np.eye(N, dtype=bool)
    if not np.array_equal(coloring, coloring.T) or not np.isin(coloring[off], (0, 1)).all():
        raise ValueError('coloring must be a symmetric 0/1 matrix')
    return coloring[:N // 2, N // 2:]


def ramsey_reduce(coloring) -> BipartiteGraph:
    """Majority-color graph across the cut {0..N/2-1} | {N/2..N-1}, density >= 1/2"""
    cut = _check_coloring(coloring)
    color = majority_color(coloring)
    g = BipartiteGraph.from_matrix(cut == color)
    assert 2 * g.density() >= 1
    return g


def _lift(embedding: CubeEmbedding, upper_ids, lower_ids) -> CubeEmbedding:
    """Map a subgraph embedding back to host ids"""
    images = {}
    for word, side, host in embedding.items():
        images[word] = int(upper_ids[host]) if side is Side.UPPER else int(lower_ids[host])
    return CubeEmbedding(embedding.n, embedding.odd_side, images)


def embed_auto(g: BipartiteGraph, n: int, rng: np.random.Generator, overrides: Optional[dict] = None,
               **kwargs) -> EmbeddingResult:
    """Drive the trichotomy and run the embedder of the certified case

    Falls through to dependent random choice on the whole host, then to exhaustive search when
    Q_n is small enough.

    :param trials: Trials for the randomized embedders
    :param strict: Passed to the block embedder
    """
    check_dimension(n)
    trials = kwargs.get('trials', 8)
    schedule = build_schedule(n, g.upper_count, g.lower_count, overrides)
    result = EmbeddingResult()
    result.details['schedule'] = schedule

    try:
        outcome = trichotomy_drive(g, schedule, rng, **{k: v for k, v in kwargs.items()
                                                         if k not in ('trials', 'strict')})
    except ValueError as exc:
        result.notes.append(f'trichotomy skipped: {exc}')
        outcome = None
    result.details['certificate'] = outcome

    embedding = None
    attempt = None
    if isinstance(outcome, NonCondensed):
        host = outcome.subgraph(g)
        pattern, odd, even = cube_as_bigraph(n)
        try:
            attempt = embed_regular_noncondensed(host, outcome.pair, pattern, schedule.M, schedule.p, rng)
        except ValueError as exc:
            result.notes.append(f'branch a: {exc}')
        if attempt is not None and attempt.ok:
            embedding = cube_embedding_from_pattern(n, attempt.embedding, swapped=False)
    elif isinstance(outcome, DenseSubgraph):
        sub, maps = outcome.subgraph(g)
        attempt = drc_embed_cube(sub, n, trials, rng)
        if attempt.ok:
            embedding = _lift(attempt.embedding, maps.upper_ids, maps.lower_ids)
    elif isinstance(outcome, BlockCertificate):
        attempt = block_embed_cube(outcome.graph, outcome.structure, n, schedule.u, schedule.w, trials, rng,
                                   strict=kwargs.get('strict', False))
        if attempt.ok:
            embedding = _lift(attempt.embedding, range(g.upper_count), outcome.lower_ids)

    if outcome is not None:
        result.details['branch'] = getattr(outcome, 'kind', 'failed')
    if attempt is not None:
        result.counters.update(attempt.counters)
        result.notes.extend(attempt.notes)

    if embedding is None:
        fallback = drc_embed_cube(g, n, trials, rng)
        result.counters.update({f'drc_{stage}': count for stage, count in fallback.counters.items()})
        if fallback.ok:
            embedding = fallback.embedding
            result.details['branch'] = 'drc'

    if embedding is None and 1 << n <= settings('harness')['brute_force_max_vertices']:
        pattern, _, _ = cube_as_bigraph(n)
        search = brute_force_embed(g, pattern)
        result.details['brute_force'] = search.status
        if search.embedding is not None:
            embedding = cube_embedding_from_pattern(n, search.embedding, swapped=search.swapped)
            result.details['branch'] = 'brute_force'

    result.trials = trials
    if embedding is None:
        return result.fail('no_embedding', 'every branch and fallback failed')

    violations = verify_embedding(g, embedding)
    if violations:
        logger.error("embed_auto output failed verification: %s", violations[0])
        return result.fail('verify_failed', violations[0])
    result.embedding = embedding
    result.stage = 'success'
    result.counters['success'] += 1
    return result
