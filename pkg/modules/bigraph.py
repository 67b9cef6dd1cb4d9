# -*- coding: utf-8 -*-
""""""
"""
Created on Mon Mar 11 10:02:17 2024

Bipartite graphs with bit-row adjacency

Rows are Python ints: bit v of row u is set iff (upper u, lower v) is an edge.
The lower-side view (columns) is built on first use and cached.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

import numpy as np
from bitstring import BitArray, Bits

from modules.setup_logger import logger
from utils.utils import settings


logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Malformed graph, sidecar or embedding file"""

    def __init__(self, path, line: int, message: str):
        super().__init__(f'{path}:{line}: {message}')
        self.path = path
        self.line = line


class Side(Enum):
    UPPER = 'U'
    LOWER = 'L'

    @property
    def opposite(self) -> 'Side':
        return Side.LOWER if self is Side.UPPER else Side.UPPER


def iter_bits(bits: int) -> Iterator[int]:
    """Set bit positions in ascending order"""
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


def lowest_bit(bits: int) -> int:
    return (bits & -bits).bit_length() - 1


def pack_mask(mask: np.ndarray) -> int:
    """Boolean vector -> int, index i becomes bit i"""
    return int.from_bytes(np.packbits(mask, bitorder='little').tobytes(), 'little')


def unpack_mask(bits: int, size: int) -> np.ndarray:
    raw = np.frombuffer(bits.to_bytes((size + 7) // 8, 'little'), dtype=np.uint8)
    return np.unpackbits(raw, count=size, bitorder='little').astype(bool)


def bits_from_ids(ids: Iterable[int], size: int) -> int:
    ids = np.asarray(list(ids), dtype=np.int64)
    if ids.size == 0:
        return 0
    if ids.min() < 0 or ids.max() >= size:
        logger.error("Vertex ids out of range [0, %d)", size)
        raise ValueError(f'vertex ids out of range [0, {size})')
    mask = np.zeros(size, dtype=bool)
    mask[ids] = True
    return pack_mask(mask)


def ids_from_bits(bits: int, size: int) -> np.ndarray:
    return np.flatnonzero(unpack_mask(bits, size))


@dataclass(frozen=True)
class VertexSet:
    """Subset of one side of a bipartite graph"""

    side: Side
    size: int
    bits: int = 0

    def __post_init__(self):
        if self.size < 1 or self.bits < 0 or self.bits >> self.size:
            raise ValueError(f'bits exceed part size {self.size}')

    @classmethod
    def from_ids(cls, side: Side, size: int, ids: Iterable[int]) -> 'VertexSet':
        return cls(side, size, bits_from_ids(ids, size))

    @classmethod
    def full(cls, side: Side, size: int) -> 'VertexSet':
        return cls(side, size, (1 << size) - 1)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.bits)

    def __contains__(self, v: int) -> bool:
        return 0 <= v < self.size and (self.bits >> v) & 1 == 1

    def ids(self) -> list:
        return ids_from_bits(self.bits, self.size).tolist()

    def _same_part(self, other: 'VertexSet'):
        if self.side is not other.side or self.size != other.size:
            raise ValueError('vertex sets live on different parts')

    def __and__(self, other: 'VertexSet') -> 'VertexSet':
        self._same_part(other)
        return VertexSet(self.side, self.size, self.bits & other.bits)

    def __or__(self, other: 'VertexSet') -> 'VertexSet':
        self._same_part(other)
        return VertexSet(self.side, self.size, self.bits | other.bits)

    def __sub__(self, other: 'VertexSet') -> 'VertexSet':
        self._same_part(other)
        return VertexSet(self.side, self.size, self.bits & ~other.bits)

    def to_bits(self) -> Bits:
        """Membership as a bitstring, position i is vertex i"""
        bitvector = BitArray(uint=self.bits, length=self.size)
        bitvector.reverse()
        return Bits(bitvector)


@dataclass(frozen=True)
class IndexMaps:
    """new id -> old id for each side of an induced subgraph"""

    upper_ids: tuple
    lower_ids: tuple

    def new_upper(self, old: int) -> int:
        return self.upper_ids.index(old)

    def new_lower(self, old: int) -> int:
        return self.lower_ids.index(old)


class BipartiteGraph:
    """Immutable bipartite graph (V^up, V^down, E)"""

    def __init__(self, upper_count: int, lower_count: int, rows: Iterable[int]) -> None:
        if upper_count < 1 or lower_count < 1:
            logger.error("Both sides need at least one vertex, got %d x %d", upper_count, lower_count)
            raise ValueError('upper_count and lower_count must be >= 1')

        self._upper_count = upper_count
        self._lower_count = lower_count
        self._rows = tuple(int(row) for row in rows)

        if len(self._rows) != upper_count:
            raise ValueError(f'expected {upper_count} rows, got {len(self._rows)}')

        for u, row in enumerate(self._rows):
            if row < 0 or row >> lower_count:
                logger.error("Row %d has bits beyond lower_count %d", u, lower_count)
                raise ValueError(f'row {u} has bits beyond lower_count')

        self._columns = None
        self._edge_count = sum(row.bit_count() for row in self._rows)

    @classmethod
    def from_matrix(cls, matrix) -> 'BipartiteGraph':
        """Build from a boolean upper_count x lower_count matrix"""
        matrix = np.asarray(matrix, dtype=bool)
        packed = np.packbits(matrix, axis=1, bitorder='little')
        return cls(matrix.shape[0], matrix.shape[1],
                   (int.from_bytes(row.tobytes(), 'little') for row in packed))

    @classmethod
    def from_edges(cls, upper_count: int, lower_count: int, edges: Iterable) -> 'BipartiteGraph':
        rows = [0] * upper_count
        for u, v in edges:
            if not (0 <= u < upper_count and 0 <= v < lower_count):
                raise ValueError(f'edge ({u}, {v}) out of range')
            rows[u] |= 1 << v
        return cls(upper_count, lower_count, rows)

    @property
    def upper_count(self) -> int:
        return self._upper_count

    @property
    def lower_count(self) -> int:
        return self._lower_count

    @property
    def rows(self) -> tuple:
        return self._rows

    @property
    def columns(self) -> tuple:
        """Lower-indexed adjacency, bit u of column v set iff (u, v) is an edge"""
        if self._columns is None:
            packed = np.packbits(self.to_matrix().T, axis=1, bitorder='little')
            self._columns = tuple(int.from_bytes(col.tobytes(), 'little') for col in packed)
        return self._columns

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def part_size(self, side: Side) -> int:
        return self._upper_count if side is Side.UPPER else self._lower_count

    def _check_vertex(self, v: int, side: Side):
        if not 0 <= v < self.part_size(side):
            logger.error("%s vertex %d out of range", side.name.lower(), v)
            raise ValueError(f'{side.name.lower()} vertex {v} out of range [0, {self.part_size(side)})')

    def adjacency(self, v: int, side: Side) -> int:
        self._check_vertex(v, side)
        return self._rows[v] if side is Side.UPPER else self.columns[v]

    def has_edge(self, u: int, v: int) -> bool:
        self._check_vertex(u, Side.UPPER)
        self._check_vertex(v, Side.LOWER)
        return (self._rows[u] >> v) & 1 == 1

    def degree(self, v: int, side: Side) -> int:
        return self.adjacency(v, side).bit_count()

    def neighborhood(self, v: int, side: Side) -> VertexSet:
        """N(v) as a set on the opposite side"""
        return VertexSet(side.opposite, self.part_size(side.opposite), self.adjacency(v, side))

    def common_neighborhood_bits(self, vs: Union[Sequence[int], VertexSet], side: Side) -> int:
        if isinstance(vs, VertexSet):
            if vs.side is not side:
                logger.error("Common neighborhood over mixed sides requested")
                raise ValueError('vertex set side does not match requested side')
            vs = list(vs)
        for v in vs:
            self._check_vertex(v, side)

        adjacency = self._rows if side is Side.UPPER else self.columns
        bits = (1 << self.part_size(side.opposite)) - 1
        for v in vs:
            bits &= adjacency[v]
            if not bits:
                break
        return bits

    def common_neighborhood(self, vs: Union[Sequence[int], VertexSet], side: Side) -> VertexSet:
        """Intersection of neighborhoods; repeats allowed, empty list gives the whole opposite side"""
        return VertexSet(side.opposite, self.part_size(side.opposite), self.common_neighborhood_bits(vs, side))

    def density(self) -> Fraction:
        return Fraction(self._edge_count, self._upper_count * self._lower_count)

    def edges(self) -> Iterator[tuple]:
        """Edges (u, v) in lexicographic order"""
        for u, row in enumerate(self._rows):
            for v in iter_bits(row):
                yield u, v

    def to_matrix(self) -> np.ndarray:
        nbytes = (self._lower_count + 7) // 8
        raw = np.frombuffer(b''.join(row.to_bytes(nbytes, 'little') for row in self._rows), dtype=np.uint8)
        return np.unpackbits(raw.reshape(self._upper_count, nbytes), axis=1,
                             count=self._lower_count, bitorder='little').astype(bool)

    def induced_subgraph(self, uppers: VertexSet, lowers: VertexSet) -> tuple:
        """Subgraph on uppers x lowers with dense ids

        :returns: (BipartiteGraph, IndexMaps)
        """
        if uppers.side is not Side.UPPER or lowers.side is not Side.LOWER:
            raise ValueError('induced_subgraph expects (uppers, lowers)')
        if not uppers or not lowers:
            logger.error("Induced subgraph needs both sides nonempty")
            raise ValueError('induced subgraph on an empty side')

        upper_ids = uppers.ids()
        lower_ids = np.asarray(lowers.ids())
        rows = [pack_mask(unpack_mask(self._rows[u], self._lower_count)[lower_ids]) for u in upper_ids]
        maps = IndexMaps(tuple(upper_ids), tuple(lower_ids.tolist()))
        return BipartiteGraph(len(upper_ids), len(lower_ids), rows), maps

    def remove_edges_at_lowers(self, lowers: VertexSet) -> 'BipartiteGraph':
        """Same vertex sets, every edge touching `lowers` dropped"""
        keep = ~lowers.bits & ((1 << self._lower_count) - 1)
        return BipartiteGraph(self._upper_count, self._lower_count, (row & keep for row in self._rows))

    def transpose(self) -> 'BipartiteGraph':
        """Sides swapped, lower v becomes upper v"""
        return BipartiteGraph(self._lower_count, self._upper_count, self.columns)

    def is_subgraph_of(self, other: 'BipartiteGraph') -> bool:
        if (self._upper_count, self._lower_count) != (other.upper_count, other.lower_count):
            return False
        return all(not row & ~big for row, big in zip(self._rows, other.rows))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (self._upper_count, self._lower_count, self._rows) == \
            (other._upper_count, other._lower_count, other._rows)

    def __hash__(self) -> int:
        return hash((self._upper_count, self._lower_count, self._rows))

    def __repr__(self) -> str:
        return f'BipartiteGraph({self._upper_count}x{self._lower_count}, edges={self._edge_count})'


def disjoint_union(graphs: Sequence[BipartiteGraph]) -> BipartiteGraph:
    """Side-wise disjoint union, copy i occupies the i-th id range on both sides"""
    rows = []
    offset = 0
    for graph in graphs:
        rows.extend(row << offset for row in graph.rows)
        offset += graph.lower_count
    return BipartiteGraph(len(rows), offset, rows)


def read_graph(path) -> BipartiteGraph:
    """Read `upper_count lower_count` header plus `u v` edge lines, `#` starts a comment"""
    max_part = settings('graph')['max_part_size']
    header = None
    uppers, lowers = [], []

    with open(path, 'r', encoding='utf-8') as stream:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue

            fields = line.split()
            try:
                if len(fields) != 2:
                    raise ValueError
                a, b = int(fields[0]), int(fields[1])
            except ValueError:
                logger.error("%s:%d: expected two integers", path, lineno)
                raise GraphFormatError(path, lineno, f'expected two integers, got {line!r}') from None

            if header is None:
                if a < 1 or b < 1:
                    logger.error("%s:%d: bad header", path, lineno)
                    raise GraphFormatError(path, lineno, 'header sizes must be >= 1')
                if a > max_part or b > max_part:
                    logger.error("%s:%d: dimension overflow", path, lineno)
                    raise GraphFormatError(path, lineno, f'dimension overflow (limit {max_part})')
                header = (a, b)
                continue

            if not (0 <= a < header[0] and 0 <= b < header[1]):
                logger.error("%s:%d: edge out of range", path, lineno)
                raise GraphFormatError(path, lineno, f'edge ({a}, {b}) out of range for {header[0]}x{header[1]}')
            uppers.append(a)
            lowers.append(b)

    if header is None:
        raise GraphFormatError(path, 0, 'missing header')

    matrix = np.zeros(header, dtype=bool)
    matrix[np.asarray(uppers, dtype=np.intp), np.asarray(lowers, dtype=np.intp)] = True
    logger.info("Read %s: %dx%d, %d edge lines", path, header[0], header[1], len(uppers))
    return BipartiteGraph.from_matrix(matrix)


def write_graph(g: BipartiteGraph, path) -> None:
    with open(path, 'w', encoding='utf-8') as stream:
        stream.write(f'{g.upper_count} {g.lower_count}\n')
        for u, v in g.edges():
            stream.write(f'{u} {v}\n')
