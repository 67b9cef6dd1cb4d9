# -*- coding: utf-8 -*-
""""""
"""
Created on Thu Mar 21 16:02:18 2024

Independent tooling around the embedders: exhaustive subgraph search, random hosts and
colorings, and the embedding file format.
"""
import logging
import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from modules.bigraph import BipartiteGraph, GraphFormatError, Side, iter_bits
from modules.embedder_drc import CubeEmbedding, PatternEmbedding
from modules.hypercube import CubeVertex, check_dimension, cube_as_bigraph, even_class, odd_class, parse_label
from modules.setup_logger import logger
from utils.utils import settings


logger = logging.getLogger(__name__)

SIDE_CODES = {Side.UPPER: 'U', Side.LOWER: 'L'}


class _Timeout(Exception):
    pass


@dataclass(frozen=True)
class BruteForceResult:
    """status is 'embedded', 'impossible' or 'timeout'

    With swapped set, pattern uppers sit on host lowers: upper_images are host lower ids and
    lower_images host upper ids.
    """

    status: str
    embedding: Optional[PatternEmbedding]
    swapped: bool
    nodes: int


class _Search:
    """Backtracking with forward checking, candidates kept as host bitsets"""

    def __init__(self, host: BipartiteGraph, pattern: BipartiteGraph, deadline: float):
        self.deadline = deadline
        self.nodes = 0
        pu = pattern.upper_count
        self.upper_count = pu
        # pattern vertex x < pu is upper x, otherwise lower x - pu
        self.neighbors = [set(pu + v for v in iter_bits(row)) for row in pattern.rows]
        self.neighbors += [set(iter_bits(col)) for col in pattern.columns]
        self.degree = [len(nb) for nb in self.neighbors]
        self.host_adj = [host.rows, host.columns]

        upper_degrees = [row.bit_count() for row in host.rows]
        lower_degrees = [col.bit_count() for col in host.columns]
        self.initial = []
        for x, d in enumerate(self.degree):
            degrees = upper_degrees if x < pu else lower_degrees
            self.initial.append(sum(1 << h for h, dh in enumerate(degrees) if dh >= d))

    def is_upper(self, x: int) -> bool:
        return x < self.upper_count

    def run(self) -> Optional[dict]:
        if any(c == 0 for c in self.initial):
            return None
        return self._extend({}, list(self.initial))

    def _extend(self, assign: dict, cands: list) -> Optional[dict]:
        self.nodes += 1
        if time.perf_counter() > self.deadline:
            raise _Timeout
        free = [x for x in range(len(cands)) if x not in assign]
        if not free:
            return assign

        x = min(free, key=lambda y: (cands[y].bit_count(), -self.degree[y], y))
        adjacency = self.host_adj[0 if self.is_upper(x) else 1]
        for h in iter_bits(cands[x]):
            nxt = list(cands)
            ok = True
            for y in free:
                if y == x:
                    continue
                c = nxt[y]
                if self.is_upper(y) == self.is_upper(x):
                    c &= ~(1 << h)
                if y in self.neighbors[x]:
                    c &= adjacency[h]
                if not c:
                    ok = False
                    break
                nxt[y] = c
            if not ok:
                continue
            assign[x] = h
            found = self._extend(assign, nxt)
            if found is not None:
                return found
            del assign[x]
        return None


def _pattern_graph(pattern: Union[BipartiteGraph, int]) -> BipartiteGraph:
    if isinstance(pattern, BipartiteGraph):
        return pattern
    check_dimension(pattern)
    return cube_as_bigraph(pattern)[0]


def brute_force_embed(g: BipartiteGraph, pattern: Union[BipartiteGraph, int], **kwargs) -> BruteForceResult:
    """Exhaustive search for a copy of `pattern` in g, trying both orientations

    'impossible' is only reported once both searches ran to exhaustion.

    :param g: Host graph
    :param pattern: Pattern graph, or n for Q_n
    :param time_budget: Seconds for both orientations together
    :param max_vertices: Largest accepted pattern
    """
    time_budget = kwargs.get('time_budget', settings('harness')['brute_force_time_budget'])
    max_vertices = kwargs.get('max_vertices', settings('harness')['brute_force_max_vertices'])

    pattern = _pattern_graph(pattern)
    size = pattern.upper_count + pattern.lower_count
    if size > max_vertices:
        logger.error("Pattern has %d vertices, brute force accepts at most %d", size, max_vertices)
        raise ValueError(f'pattern has {size} vertices, limit is {max_vertices}')

    deadline = time.perf_counter() + time_budget
    nodes = 0
    timed_out = False
    for swapped in (False, True):
        host = g.transpose() if swapped else g
        if pattern.upper_count > host.upper_count or pattern.lower_count > host.lower_count:
            continue
        search = _Search(host, pattern, deadline)
        try:
            found = search.run()
        except _Timeout:
            timed_out = True
            nodes += search.nodes
            continue
        nodes += search.nodes
        if found is not None:
            pu = pattern.upper_count
            emb = PatternEmbedding(tuple(found[x] for x in range(pu)),
                                   tuple(found[pu + v] for v in range(pattern.lower_count)))
            logger.info("Brute force: pattern embedded after %d nodes (swapped=%s)", nodes, swapped)
            return BruteForceResult('embedded', emb, swapped, nodes)

    status = 'timeout' if timed_out else 'impossible'
    logger.info("Brute force: %s after %d nodes", status, nodes)
    return BruteForceResult(status, None, False, nodes)


def cube_embedding_from_pattern(n: int, emb: PatternEmbedding, swapped: bool = False) -> CubeEmbedding:
    """Read a pattern embedding of cube_as_bigraph(n) as a cube embedding"""
    odd, even = odd_class(n), even_class(n)
    if len(emb.upper_images) != len(odd) or len(emb.lower_images) != len(even):
        raise ValueError(f'pattern embedding does not match Q_{n}')
    images = {v.word: int(h) for v, h in zip(odd, emb.upper_images)}
    images.update({v.word: int(h) for v, h in zip(even, emb.lower_images)})
    return CubeEmbedding(n, Side.LOWER if swapped else Side.UPPER, images)


def gen_random_bipartite(upper_count: int, lower_count: int, density: float,
                         rng: np.random.Generator) -> BipartiteGraph:
    """Every edge present independently with probability `density`"""
    if not 0 <= density <= 1:
        logger.error("Edge probability %s outside [0, 1]", density)
        raise ValueError(f'density must lie in [0, 1], got {density}')
    g = BipartiteGraph.from_matrix(rng.random((upper_count, lower_count)) < density)
    logger.info("Random %dx%d graph: target density %s, measured %.6f",
                upper_count, lower_count, density, float(g.density()))
    return g


def random_coloring(N: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform 2-coloring of the edges of K_N as a symmetric 0/1 matrix with zero diagonal"""
    if N < 2:
        raise ValueError('N must be >= 2')
    upper = np.triu(rng.integers(0, 2, size=(N, N), dtype=np.int8), k=1)
    return upper + upper.T


def write_embedding(e: CubeEmbedding, g: BipartiteGraph, path) -> None:
    """Header `n upper_count lower_count`, then one `mask side id` line per cube vertex"""
    with open(path, 'w', encoding='utf-8') as stream:
        stream.write(f'{e.n} {g.upper_count} {g.lower_count}\n')
        for word, side, host in e.items():
            stream.write(f'{CubeVertex(e.n, word).label()} {SIDE_CODES[side]} {host}\n')


def read_embedding(path) -> tuple:
    """Parse an embedding file

    :returns: (CubeEmbedding, (upper_count, lower_count))
    """
    header = None
    images = {}
    odd_side = None
    sides = {code: side for side, code in SIDE_CODES.items()}

    with open(path, 'r', encoding='utf-8') as stream:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            fields = line.split()

            if header is None:
                try:
                    header = tuple(int(f) for f in fields)
                    if len(header) != 3:
                        raise ValueError
                    check_dimension(header[0])
                except ValueError:
                    logger.error("%s:%d: bad embedding header", path, lineno)
                    raise GraphFormatError(path, lineno, f'bad header {line!r}') from None
                continue

            n = header[0]
            if len(fields) != 3 or fields[1] not in sides or len(fields[0]) != n \
                    or set(fields[0]) - {'0', '1'} or not fields[2].isdigit():
                logger.error("%s:%d: expected `mask side id`", path, lineno)
                raise GraphFormatError(path, lineno, f'expected `mask side id`, got {line!r}')

            v = parse_label(fields[0])
            side = sides[fields[1]]
            host = int(fields[2])
            if host >= header[1 if side is Side.UPPER else 2]:
                raise GraphFormatError(path, lineno, f'{side.name.lower()} id {host} out of range')
            if v.word in images:
                raise GraphFormatError(path, lineno, f'mask {fields[0]} listed twice')

            implied = side if v.is_odd else side.opposite
            if odd_side is None:
                odd_side = implied
            elif implied is not odd_side:
                raise GraphFormatError(path, lineno, f'mask {fields[0]} on the wrong side for its parity')
            images[v.word] = host

    if header is None:
        raise GraphFormatError(path, 0, 'missing header')
    return CubeEmbedding(header[0], odd_side or Side.UPPER, images), header[1:]
