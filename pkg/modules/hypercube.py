# -*- coding: utf-8 -*-
""""""
"""
Created on Mon Mar 11 14:40:55 2024

The hypercube Q_n as bit masks

Bit i of a mask is set iff coordinate i+1 of the {-1, 1} vector equals -1,
so the top w bits are the last w coordinates.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, Mapping

from bitstring import Bits

from modules.bigraph import BipartiteGraph
from modules.setup_logger import logger
from utils.utils import settings


logger = logging.getLogger(__name__)


def check_dimension(n: int) -> None:
    max_n = settings('hypercube')['max_n']
    if not 1 <= n <= max_n:
        logger.error("Cube dimension %d outside [1, %d]", n, max_n)
        raise ValueError(f'cube dimension n={n} outside [1, {max_n}]')


@dataclass(frozen=True, order=True)
class CubeVertex:
    n: int
    word: int

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.word < 1 << self.n:
            raise ValueError(f'mask {self.word} is not a vertex of Q_{self.n}')

    @property
    def parity(self) -> int:
        return self.word.bit_count() & 1

    @property
    def is_odd(self) -> bool:
        return self.parity == 1

    def flip(self, i: int) -> 'CubeVertex':
        return CubeVertex(self.n, self.word ^ (1 << i))

    def suffix(self, w: int) -> int:
        """Pattern of the last w coordinates as a w-bit mask"""
        return self.word >> (self.n - w)

    def label(self) -> str:
        """Fixed-width binary, most significant coordinate first"""
        return Bits(uint=self.word, length=self.n).bin

    def coordinates(self) -> tuple:
        bits = Bits(uint=self.word, length=self.n)
        return tuple(-1 if bit else 1 for bit in reversed(bits))


def parse_label(label: str) -> CubeVertex:
    return CubeVertex(len(label), Bits(bin=label).uint)


def odd_class(n: int) -> list:
    """The 2^(n-1) vertices with an odd number of -1 coordinates, ascending"""
    check_dimension(n)
    return [CubeVertex(n, word) for word in range(1 << n) if word.bit_count() & 1]


def even_class(n: int) -> list:
    check_dimension(n)
    return [CubeVertex(n, word) for word in range(1 << n) if not word.bit_count() & 1]


def cube_neighbors(v: CubeVertex) -> list:
    return [v.flip(i) for i in range(v.n)]


def cube_edges(n: int) -> Iterator[tuple]:
    """All n * 2^(n-1) edges as (odd, even) pairs"""
    for v in odd_class(n):
        for nb in cube_neighbors(v):
            yield v, nb


@dataclass(frozen=True)
class FacetPartition:
    """Odd class split by the pattern b of the last w coordinates"""

    n: int
    w: int
    classes: Mapping[int, tuple]

    def class_of(self, v: CubeVertex) -> int:
        return v.suffix(self.w)


def _check_suffix_length(n: int, w: int):
    check_dimension(n)
    if not 0 <= w <= n - 2:
        logger.error("Suffix length w=%d outside [0, %d]", w, n - 2)
        raise ValueError(f'suffix length w={w} outside [0, n-2] for n={n}')


def facet_partition(n: int, w: int) -> FacetPartition:
    _check_suffix_length(n, w)
    classes = {b: [] for b in range(1 << w)}
    for v in odd_class(n):
        classes[v.suffix(w)].append(v)
    return FacetPartition(n, w, {b: tuple(members) for b, members in classes.items()})


def ordered_neighbors_by_facet(v: CubeVertex, w: int) -> list:
    """Neighbors of an even vertex: the n-w flips inside its facet first, then one per suffix coordinate"""
    _check_suffix_length(v.n, w)
    if v.is_odd:
        logger.error("ordered_neighbors_by_facet needs an even vertex, got %s", v.label())
        raise ValueError(f'vertex {v.label()} has odd parity')
    inside = [v.flip(i) for i in range(v.n - w)]
    across = [v.flip(i) for i in range(v.n - w, v.n)]
    return inside + across


def cube_as_bigraph(n: int) -> tuple:
    """Q_n with uppers = odd class and lowers = even class, both ascending

    :returns: (BipartiteGraph, odd vertices, even vertices)
    """
    odd = odd_class(n)
    even = even_class(n)
    position = {v.word: j for j, v in enumerate(even)}
    rows = []
    for v in odd:
        row = 0
        for nb in cube_neighbors(v):
            row |= 1 << position[nb.word]
        rows.append(row)
    return BipartiteGraph(len(odd), len(even), rows), tuple(odd), tuple(even)
