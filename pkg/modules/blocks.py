# -*- coding: utf-8 -*-
""""""
"""
Created on Thu Mar 14 11:37:52 2024

Block-structured graphs

Lower side split into k blocks of g_size vertices, block l wired only to its upper set,
induced density at least 1 - delta inside every block. Holds the selection of condition
vertices and the facet-wise embedding of Q_n into such a graph.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Union

import numpy as np

from modules.bigraph import BipartiteGraph, GraphFormatError, Side, VertexSet, ids_from_bits
from modules.embedder_drc import EmbeddingResult, GreedyFailure, greedy_extend, verify_embedding
from modules.hypercube import check_dimension, facet_partition, ordered_neighbors_by_facet
from modules.setup_logger import logger
from utils.utils import progress, settings, spawn_streams


logger = logging.getLogger(__name__)


def exact(value) -> Fraction:
    """Decimal reading of floats, so 0.05 becomes 1/20"""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def falling(x: int, k: int) -> int:
    """x (x-1) ... (x-k+1)"""
    return math.perm(x, k) if 0 <= k <= x else 0


@dataclass(frozen=True)
class BlockStructure:
    delta: Fraction
    gamma: Fraction
    k: int
    g_size: int
    lower_blocks: tuple
    upper_sets: tuple

    def __post_init__(self):
        object.__setattr__(self, 'delta', exact(self.delta))
        object.__setattr__(self, 'gamma', exact(self.gamma))
        object.__setattr__(self, 'lower_blocks', tuple(self.lower_blocks))
        object.__setattr__(self, 'upper_sets', tuple(self.upper_sets))
        if not 0 <= self.delta < 1 or not 0 <= self.gamma <= 1:
            logger.error("Block parameters out of range: delta=%s gamma=%s", self.delta, self.gamma)
            raise ValueError('need 0 <= delta < 1 and 0 <= gamma <= 1')
        if self.k < 1 or self.g_size < 1:
            raise ValueError('k and g_size must be >= 1')
        if len(self.lower_blocks) != self.k or len(self.upper_sets) != self.k:
            raise ValueError(f'expected {self.k} lower blocks and upper sets')
        if any(s.side is not Side.LOWER for s in self.lower_blocks) or \
                any(s.side is not Side.UPPER for s in self.upper_sets):
            raise ValueError('lower_blocks must be lower sets and upper_sets upper sets')

    @property
    def upper_count(self) -> int:
        return self.upper_sets[0].size

    @property
    def lower_count(self) -> int:
        return self.lower_blocks[0].size

    @cached_property
    def block_of(self) -> dict:
        """lower id -> block index"""
        return {v: ell for ell, block in enumerate(self.lower_blocks) for v in block}


@dataclass(frozen=True)
class BlockViolation:
    bullet: int
    block: Optional[int]
    detail: str


def validate_block_structure(g: BipartiteGraph, bs: BlockStructure) -> list:
    """Check the four block conditions exactly; empty list means ok

    1. every lower block has g_size vertices and the blocks partition V^down
    2. |S_l^up| >= gamma |V^up|
    3. no edge between S_l^down and V^up minus S_l^up
    4. density of the subgraph induced on S_l^up and S_l^down is at least 1 - delta
    """
    violations = []
    if bs.upper_count != g.upper_count or bs.lower_count != g.lower_count:
        return [BlockViolation(1, None, f'structure is for {bs.upper_count}x{bs.lower_count}, '
                                        f'graph is {g.upper_count}x{g.lower_count}')]

    covered = 0
    for ell, block in enumerate(bs.lower_blocks):
        if len(block) != bs.g_size:
            violations.append(BlockViolation(1, ell, f'block has {len(block)} lowers, expected {bs.g_size}'))
        if covered & block.bits:
            violations.append(BlockViolation(1, ell, 'block overlaps an earlier block'))
        covered |= block.bits
    if covered != (1 << g.lower_count) - 1:
        missing = g.lower_count - covered.bit_count()
        violations.append(BlockViolation(1, None, f'{missing} lowers not covered by any block'))

    columns = g.columns
    for ell, (block, ups) in enumerate(zip(bs.lower_blocks, bs.upper_sets)):
        if len(ups) < bs.gamma * g.upper_count:
            violations.append(BlockViolation(2, ell, f'|S^up| = {len(ups)} < gamma |V^up| = '
                                                     f'{float(bs.gamma * g.upper_count):.6g}'))

        stray = [v for v in block if columns[v] & ~ups.bits]
        if stray:
            violations.append(BlockViolation(3, ell, f'{len(stray)} lowers with edges outside S^up, '
                                                     f'first lower {stray[0]}'))

        cells = len(ups) * len(block)
        inside = sum((columns[v] & ups.bits).bit_count() for v in block)
        if cells == 0 or Fraction(inside, cells) < 1 - bs.delta:
            measured = Fraction(inside, cells) if cells else Fraction(0)
            violations.append(BlockViolation(4, ell, f'induced density {float(measured):.6g} < 1 - delta'))

    for item in violations:
        logger.debug("block violation %s", item)
    return violations


def generate_block_graph(k: int, g_size: int, upper_count: int, gamma, delta,
                         rng: np.random.Generator) -> tuple:
    """Random block-structured graph, lower blocks contiguous

    Inside block l every (S_l^up, S_l^down) edge is kept with probability 1 - delta/2, then missing
    edges are added uniformly until the induced density reaches 1 - delta.

    :returns: (BipartiteGraph, BlockStructure)
    """
    gamma, delta = exact(gamma), exact(delta)
    t = math.ceil(gamma * upper_count)
    if k < 1 or g_size < 1:
        logger.error("Need k >= 1 and g_size >= 1, got k=%d g_size=%d", k, g_size)
        raise ValueError('k and g_size must be >= 1')
    if not 1 <= t <= upper_count:
        logger.error("ceil(gamma * upper_count) = %d outside [1, %d]", t, upper_count)
        raise ValueError(f'ceil(gamma * upper_count) = {t} must lie in [1, {upper_count}]')
    if not 0 <= delta < 1:
        raise ValueError('delta must lie in [0, 1)')

    lower_count = k * g_size
    matrix = np.zeros((upper_count, lower_count), dtype=bool)
    need = math.ceil((1 - delta) * t * g_size)
    keep = 1 - float(delta) / 2
    lower_blocks, upper_sets = [], []

    for ell in range(k):
        ups = np.sort(rng.choice(upper_count, size=t, replace=False))
        block = rng.random((t, g_size)) < keep

        deficit = need - int(np.count_nonzero(block))
        if deficit > 0:
            holes = np.flatnonzero(~block)
            block.flat[rng.choice(holes, size=deficit, replace=False)] = True

        lows = np.arange(ell * g_size, (ell + 1) * g_size)
        matrix[np.ix_(ups, lows)] = block
        lower_blocks.append(VertexSet.from_ids(Side.LOWER, lower_count, lows))
        upper_sets.append(VertexSet.from_ids(Side.UPPER, upper_count, ups))

    g = BipartiteGraph.from_matrix(matrix)
    bs = BlockStructure(delta, gamma, k, g_size, tuple(lower_blocks), tuple(upper_sets))
    violations = validate_block_structure(g, bs)
    assert not violations, violations
    logger.info("Generated block graph %dx%d, k=%d g=%d, density %.4f", upper_count, lower_count, k, g_size,
                float(g.density()))
    return g, bs


def _check_tuple_family(bs: BlockStructure, r: int, w: int):
    if not bs.g_size >= r - w >= 2 or bs.k < w + 1 or w < 0:
        logger.error("Tuple family needs g >= r - w >= 2 and k >= w + 1 (g=%d k=%d r=%d w=%d)",
                     bs.g_size, bs.k, r, w)
        raise ValueError(f'need g_size >= r - w >= 2 and k >= w + 1, got g_size={bs.g_size} k={bs.k} r={r} w={w}')


def in_tuple_family(g: BipartiteGraph, bs: BlockStructure, r: int, w: int, y, xs) -> bool:
    """Direct membership test for M(r, w; y)"""
    xs = [int(x) for x in xs]
    if len(xs) != r or len(set(xs)) != r:
        return False
    cn = g.common_neighborhood_bits(list(y), Side.UPPER)
    if any(not (cn >> x) & 1 for x in xs):
        return False
    blocks = [bs.block_of[x] for x in xs]
    head, tail = blocks[:r - w], blocks[r - w:]
    return len(set(head)) == 1 and len(set(tail)) == w and head[0] not in tail


def sample_M_tuple(g: BipartiteGraph, bs: BlockStructure, r: int, w: int, y, rng: np.random.Generator,
                   **kwargs) -> Optional[tuple]:
    """Uniform element of M(r, w; y), or None if the family is empty

    Draw l0 and distinct l1..lw, then r - w ordered distinct lowers of block l0 and one lower in each
    of the others; reject unless everything lies in CN(y).

    :param budget: Rejection rounds before giving up
    """
    _check_tuple_family(bs, r, w)
    budget = kwargs.get('budget', settings('blocks')['m_tuple_budget'])

    cn = g.common_neighborhood_bits(list(y), Side.UPPER)
    inside = [(cn & block.bits).bit_count() for block in bs.lower_blocks]
    occupied = sum(1 for c in inside if c)
    if not any(c >= r - w and occupied - 1 >= w for c in inside):
        return None

    block_ids = [np.asarray(block.ids()) for block in bs.lower_blocks]
    for _ in range(budget):
        chosen = rng.choice(bs.k, size=w + 1, replace=False)
        head = rng.choice(block_ids[chosen[0]], size=r - w, replace=False)
        tail = [rng.choice(block_ids[ell]) for ell in chosen[1:]]
        xs = tuple(int(x) for x in head) + tuple(int(x) for x in tail)
        if all((cn >> x) & 1 for x in xs):
            return xs

    logger.warning("No M-tuple accepted in %d rounds although the family is nonempty", budget)
    return None


def good_block_threshold(bs: BlockStructure, u: int) -> Fraction:
    """g (1 - delta)^(u+1)"""
    return bs.g_size * (1 - bs.delta) ** (u + 1)


def selection_probability_bound(bs: BlockStructure, u: int) -> Fraction:
    """(delta/2) (gamma (1 - delta))^u"""
    return bs.delta / 2 * (bs.gamma * (1 - bs.delta)) ** u


def selection_event(g: BipartiteGraph, bs: BlockStructure, y) -> tuple:
    """Whether y makes at least k (delta/2)(gamma(1-delta))^u blocks good

    :returns: (accepted, good block indices)
    """
    u = len(y)
    cn = g.common_neighborhood_bits(list(y), Side.UPPER)
    threshold = good_block_threshold(bs, u)
    good = tuple(ell for ell, block in enumerate(bs.lower_blocks) if (cn & block.bits).bit_count() >= threshold)
    return len(good) >= bs.k * selection_probability_bound(bs, u), good


@dataclass(frozen=True)
class AcceptanceRate:
    hits: int
    trials: int
    bound: float

    @property
    def rate(self) -> float:
        return self.hits / self.trials

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.rate * (1 - self.rate) / self.trials)


def acceptance_rate(g: BipartiteGraph, bs: BlockStructure, u: int, trials: int,
                    rng: np.random.Generator) -> AcceptanceRate:
    """Monte Carlo frequency of the selection event for u i.i.d. uniform uppers"""
    if u < 1 or trials < 1:
        raise ValueError('u and trials must be >= 1')
    draws = rng.integers(0, g.upper_count, size=(trials, u)).tolist()
    hits = sum(1 for y in progress(draws, desc='selection event') if selection_event(g, bs, y)[0])
    return AcceptanceRate(hits, trials, float(selection_probability_bound(bs, u)))


@dataclass(frozen=True)
class ConditionSelection:
    y: tuple
    good: tuple
    trials_used: int
    small_tuple_bound: Optional[float] = None


@dataclass(frozen=True)
class SelectionFailure:
    trials: int
    event_hits: int
    observed_rate: float
    event_bound: float


def select_condition_vertices(g: BipartiteGraph, bs: BlockStructure, u: int, r: int, w: int,
                              s_threshold: Optional[float] = None, trials: Optional[int] = None,
                              rng: Optional[np.random.Generator] = None,
                              min_good: Optional[int] = None) -> Union[ConditionSelection, SelectionFailure]:
    """Draw u uniform uppers per trial until the selection event holds

    :param s_threshold: When given, the Markov bound on the M-tuples with |CN| <= s_threshold that
        holds on the event is attached to the selection
    :param min_good: Additionally demand this many good blocks
    """
    if u < 1:
        logger.error("Condition set size u=%d must be >= 1", u)
        raise ValueError('u must be >= 1')
    _check_tuple_family(bs, r, w)
    if rng is None:
        raise ValueError('rng is required')
    trials = trials or settings('blocks')['selection_trials']

    event_hits = 0
    for trial in range(trials):
        y = tuple(int(v) for v in rng.integers(0, g.upper_count, size=u))
        accepted, good = selection_event(g, bs, y)
        if not accepted:
            continue
        event_hits += 1
        if min_good is not None and len(good) < min_good:
            continue

        bound = None
        if s_threshold is not None:
            slack = float(selection_probability_bound(bs, u)) / 2
            bound = small_tuple_bound(bs, g.upper_count, u, r, w, s_threshold) / slack if slack else math.inf
        logger.debug("Condition vertices %s after %d trial(s), %d good blocks", y, trial + 1, len(good))
        return ConditionSelection(y, good, trial + 1, bound)

    bound = float(selection_probability_bound(bs, u))
    logger.warning("Selection failed in %d trials: event rate %.4g vs bound %.4g", trials, event_hits / trials, bound)
    return SelectionFailure(trials, event_hits, event_hits / trials, bound)


def small_tuple_bound(bs: BlockStructure, upper_count: int, u: int, r: int, w: int, s) -> float:
    """(s/|V^up|)^u k!/(k-w-1)! g^w g!/(g-r+w)!"""
    structural = falling(bs.k, w + 1) * bs.g_size ** w * falling(bs.g_size, r - w)
    return float(exact(s) / upper_count) ** u * structural


def expected_small_tuples_exact(g: BipartiteGraph, bs: BlockStructure, u: int, r: int, w: int, s) -> Fraction:
    """Exact E #{x in M(r, w; Y) : |CN(x)| <= s} for u i.i.d. uniform uppers Y

    x lies in M(r, w; Y) iff Y lies in CN(x), so each structural tuple contributes (|CN(x)|/|V^up|)^u.
    """
    _check_tuple_family(bs, r, w)
    columns = g.columns
    full = (1 << g.upper_count) - 1
    block_ids = [block.ids() for block in bs.lower_blocks]
    total = Fraction(0)

    def heads(ids, depth, cn, chosen):
        if depth == 0:
            yield cn
            return
        for x in ids:
            if x not in chosen:
                yield from heads(ids, depth - 1, cn & columns[x], chosen | {x})

    def tails(blocks_left, cn):
        if not blocks_left:
            yield cn
            return
        for x in block_ids[blocks_left[0]]:
            yield from tails(blocks_left[1:], cn & columns[x])

    for ell0 in range(bs.k):
        others = [ell for ell in range(bs.k) if ell != ell0]
        for head_cn in heads(block_ids[ell0], r - w, full, frozenset()):
            for order in _ordered_choices(others, w):
                for cn in tails(order, head_cn):
                    size = cn.bit_count()
                    if size <= s:
                        total += Fraction(size, g.upper_count) ** u
    return total


def _ordered_choices(items: list, w: int):
    if w == 0:
        yield ()
        return
    for i, item in enumerate(items):
        for rest in _ordered_choices(items[:i] + items[i + 1:], w - 1):
            yield (item,) + rest


@dataclass(frozen=True)
class BlockFeasibility:
    """Natural logs of both sides of the three embedding conditions"""

    log_block_count: float
    log_blocks_needed: float
    log_block_size: float
    log_size_needed: float
    log_union_bound: float
    log_union_limit: float

    @property
    def enough_blocks(self) -> bool:
        return self.log_block_count >= self.log_blocks_needed

    @property
    def large_blocks(self) -> bool:
        return self.log_block_size >= self.log_size_needed

    @property
    def union_bound_ok(self) -> bool:
        return self.log_union_bound < self.log_union_limit

    @property
    def feasible(self) -> bool:
        return self.enough_blocks and self.large_blocks and self.union_bound_ok

    def summary(self) -> dict:
        return {'enough_blocks': self.enough_blocks, 'large_blocks': self.large_blocks,
                'union_bound_ok': self.union_bound_ok, 'log_union_bound': self.log_union_bound,
                'log_union_limit': self.log_union_limit, 'feasible': self.feasible}


def _log(x) -> float:
    return math.log(x) if x > 0 else -math.inf


def block_feasibility(bs: BlockStructure, upper_count: int, n: int, u: int, w: int) -> BlockFeasibility:
    """Evaluate the embedding conditions for Q_n in log space

    k (delta/2)(gamma(1-delta))^u >= 2^w,  g (1-delta)^(u+1) >= 2^(n-w),  and
    64 a^-1 (2^(n-1)/|V^up|)^u ((1-delta)^(u+1))^-n b^-(w+1) < 2^(1-n)
    with a = (delta/4)(gamma(1-delta))^u and b = (delta/2)(gamma(1-delta))^u.
    """
    log2 = math.log(2)
    log_keep = _log(1 - bs.delta)
    log_spread = _log(bs.gamma) + log_keep
    log_b = _log(bs.delta / 2) + u * log_spread
    log_a = _log(bs.delta / 4) + u * log_spread

    if math.isinf(log_b):
        union = math.inf
    else:
        union = (math.log(64) - log_a + u * ((n - 1) * log2 - math.log(upper_count))
                 - n * (u + 1) * log_keep - (w + 1) * log_b)

    return BlockFeasibility(
        log_block_count=math.log(bs.k) + log_b,
        log_blocks_needed=w * log2,
        log_block_size=math.log(bs.g_size) + (u + 1) * log_keep,
        log_size_needed=(n - w) * log2,
        log_union_bound=union,
        log_union_limit=(1 - n) * log2,
    )


def block_embed_cube(g: BipartiteGraph, bs: BlockStructure, n: int, u: int, w: int, trials: int,
                     rng: np.random.Generator, **kwargs) -> EmbeddingResult:
    """Embed Q_n facet by facet into a block-structured graph

    Odd vertices go to lowers: the class with suffix b fills a trimmed good block Z_b, the even
    vertices are then placed greedily on uppers.

    :param strict: Refuse to run when the feasibility check fails
    :param selection_trials: Draws of the condition vertices per trial

    :returns: EmbeddingResult, details carry the feasibility verdict and the block of each facet class
    """
    check_dimension(n)
    if n - w < 2 or w < 0:
        logger.error("Need 0 <= w <= n - 2, got n=%d w=%d", n, w)
        raise ValueError(f'need 0 <= w <= n - 2, got n={n} w={w}')
    if u < 1 or trials < 1:
        raise ValueError('u and trials must be >= 1')
    if bs.upper_count != g.upper_count or bs.k * bs.g_size != g.lower_count:
        raise ValueError('block structure does not match the graph')

    strict = kwargs.get('strict', False)
    selection_trials = kwargs.get('selection_trials', settings('blocks')['selection_trials'])

    result = EmbeddingResult()
    feasibility = block_feasibility(bs, g.upper_count, n, u, w)
    result.details['feasibility'] = feasibility
    result.params = {'n': n, 'u': u, 'w': w}

    half = 1 << (n - 1)
    if g.upper_count < half:
        return result.fail('precondition', f'{g.upper_count} uppers cannot hold the 2^{n - 1} even vertices')
    try:
        _check_tuple_family(bs, n, w)
    except ValueError as exc:
        return result.fail('precondition', str(exc))

    if not feasibility.feasible:
        note = f'predicted infeasible: {feasibility.summary()}'
        if strict:
            logger.warning("Block embedding refused, %s", note)
            return result.fail('infeasible', note)
        logger.info("Block embedding %s", note)
        result.notes.append(note)

    partition = facet_partition(n, w)
    facets = 1 << w
    class_size = 1 << (n - w - 1)
    size = math.ceil(good_block_threshold(bs, u))

    for trial, stream in enumerate(progress(spawn_streams(rng, trials), desc='block trials', total=trials)):
        result.trials += 1

        selection = select_condition_vertices(g, bs, u, n, w, trials=selection_trials, rng=stream, min_good=facets)
        if isinstance(selection, SelectionFailure):
            result.fail('insufficient_good_blocks' if selection.event_hits else 'selection_failed')
            continue

        cn = g.common_neighborhood_bits(list(selection.y), Side.UPPER)
        trimmed = {ell: ids_from_bits(cn & bs.lower_blocks[ell].bits, g.lower_count)[:size]
                   for ell in selection.good}
        if any(len(ids) < class_size for ids in trimmed.values()):
            result.fail('block_too_small', f'a good block keeps fewer than {class_size} lowers')
            continue

        blocks = stream.choice(np.asarray(selection.good), size=facets, replace=False)
        assignment = {}
        for b in range(facets):
            members = partition.classes[b]
            picks = stream.choice(trimmed[int(blocks[b])], size=len(members), replace=False)
            assignment.update((v.word, int(x)) for v, x in zip(members, picks))

        outcome = greedy_extend(g, n, assignment, odd_side=Side.LOWER,
                                neighbor_order=lambda v: ordered_neighbors_by_facet(v, w))
        if isinstance(outcome, GreedyFailure):
            result.fail('greedy_stuck')
            result.stuck = outcome.stuck
            continue

        violations = verify_embedding(g, outcome)
        if violations:
            logger.error("trial %d: block embedding failed verification: %s", trial, violations[0])
            result.fail('verify_failed', violations[0])
            continue

        result.embedding = outcome
        result.stage = 'success'
        result.counters['success'] += 1
        result.details.update(condition_vertices=selection.y, good_blocks=selection.good,
                              facet_blocks={b: int(blocks[b]) for b in range(facets)})
        logger.info("Q_%d embedded into block graph after %d trial(s)", n, result.trials)
        return result

    logger.info("Q_%d not embedded into block graph in %d trials: %s", n, trials, dict(result.counters))
    return result


def _format_ratio(value: Fraction) -> str:
    as_float = float(value)
    return repr(as_float) if exact(as_float) == value else str(value)


def write_block_structure(bs: BlockStructure, path) -> None:
    """`k g_size delta gamma`, then `up: ids` and `down: ids` per block"""
    with open(path, 'w', encoding='utf-8') as stream:
        stream.write(f'{bs.k} {bs.g_size} {_format_ratio(bs.delta)} {_format_ratio(bs.gamma)}\n')
        for ups, block in zip(bs.upper_sets, bs.lower_blocks):
            stream.write('up: ' + ' '.join(map(str, ups.ids())) + '\n')
            stream.write('down: ' + ' '.join(map(str, block.ids())) + '\n')


def read_block_structure(path, upper_count: int) -> BlockStructure:
    """Read a sidecar written by write_block_structure; V^up size comes from the graph"""
    with open(path, 'r', encoding='utf-8') as stream:
        lines = [(lineno, raw.split('#', 1)[0].strip()) for lineno, raw in enumerate(stream, start=1)]
    lines = [(lineno, line) for lineno, line in lines if line]
    if not lines:
        raise GraphFormatError(path, 0, 'empty block structure file')

    lineno, header = lines[0]
    try:
        k_text, g_text, delta_text, gamma_text = header.split()
        k, g_size = int(k_text), int(g_text)
        delta, gamma = Fraction(delta_text), Fraction(gamma_text)
    except ValueError:
        logger.error("%s:%d: bad block header", path, lineno)
        raise GraphFormatError(path, lineno, f'expected `k g_size delta gamma`, got {header!r}') from None

    body = lines[1:]
    if len(body) != 2 * k:
        raise GraphFormatError(path, lineno, f'expected {2 * k} block lines, got {len(body)}')

    lower_count = k * g_size
    ups, downs = [], []
    for index, (lineno, line) in enumerate(body):
        tag, _, rest = line.partition(':')
        expected, size, target = ('up', upper_count, ups) if index % 2 == 0 else ('down', lower_count, downs)
        if tag.strip() != expected:
            raise GraphFormatError(path, lineno, f'expected `{expected}:` line')
        try:
            ids = [int(x) for x in rest.split()]
            target.append(VertexSet.from_ids(Side.UPPER if expected == 'up' else Side.LOWER, size, ids))
        except ValueError as exc:
            logger.error("%s:%d: %s", path, lineno, exc)
            raise GraphFormatError(path, lineno, str(exc)) from None

    return BlockStructure(delta, gamma, k, g_size, tuple(downs), tuple(ups))
