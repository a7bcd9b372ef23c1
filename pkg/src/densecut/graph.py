"""Graph, cost and cut primitives shared by every solver module.

Vertices are dense 0-based integers.  A cut side is an arbitrary-precision
membership bitmask, so any n is supported by one representation.  All ratio
objectives are evaluated in exact rational arithmetic so oracle comparisons
need no tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DegenerateCut

Rational = int | Fraction

# Below this size cut primitives use per-vertex bitmasks; above it they use
# vectorized edge-array arithmetic (exact: all values are small integers).
_MASK_LIMIT = 512


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_to_bools(mask: int, n: int) -> np.ndarray:
    """Boolean membership vector of length n for a bitmask."""
    nbytes = (n + 7) // 8
    raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[:n]
    return bits.astype(bool)


@dataclass(frozen=True)
class Cut:
    """One side of a cut, stored as a vertex-membership bitmask."""

    mask: int

    @staticmethod
    def of(vertices: Iterable[int]) -> "Cut":
        return Cut(mask_of(vertices))

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def members(self) -> Iterator[int]:
        return iter_bits(self.mask)

    def to_list(self) -> list[int]:
        return list(self.members())

    def complement(self, n: int) -> "Cut":
        return Cut(((1 << n) - 1) ^ self.mask)

    def __contains__(self, v: int) -> bool:
        return (self.mask >> v) & 1 == 1


class Graph:
    """Undirected unweighted simple graph with a degree table.

    Immutable after construction.  Neighbor sets, per-vertex bitmasks and a
    dense boolean adjacency matrix are derived lazily from the edge list and
    cached; they all describe the same symmetric, loop-free edge set.
    """

    def __init__(self, n: int, edges) -> None:
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        self.n = n
        arr = np.asarray(edges, dtype=np.int64)
        if arr.size == 0:
            arr = np.empty((0, 2), dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("edges must be pairs")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise ValueError("self-loops are not allowed")
        u = np.minimum(arr[:, 0], arr[:, 1])
        v = np.maximum(arr[:, 0], arr[:, 1])
        keys = np.unique(u * n + v)
        self.edges = np.column_stack((keys // n, keys % n)) if n else keys.reshape(0, 2)
        self.degrees = np.bincount(self.edges.ravel(), minlength=n).astype(np.int64)
        self._neighbors: tuple[frozenset[int], ...] | None = None
        self._masks: list[int] | None = None
        self._dense: np.ndarray | None = None

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def neighbors(self, v: int) -> frozenset[int]:
        if self._neighbors is None:
            sets: list[set[int]] = [set() for _ in range(self.n)]
            for a, b in self.edges:
                sets[a].add(int(b))
                sets[b].add(int(a))
            self._neighbors = tuple(frozenset(s) for s in sets)
        return self._neighbors[v]

    def adj_masks(self) -> list[int]:
        """Per-vertex neighbor bitmasks."""
        if self._masks is None:
            masks = [0] * self.n
            for a, b in self.edges:
                masks[a] |= 1 << int(b)
                masks[b] |= 1 << int(a)
            self._masks = masks
        return self._masks

    def adj_matrix(self) -> np.ndarray:
        """Dense boolean adjacency matrix (cached)."""
        if self._dense is None:
            mat = np.zeros((self.n, self.n), dtype=bool)
            if self.m:
                mat[self.edges[:, 0], self.edges[:, 1]] = True
                mat[self.edges[:, 1], self.edges[:, 0]] = True
            self._dense = mat
        return self._dense

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors(u)

    @staticmethod
    def complete(n: int) -> "Graph":
        return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])

    @staticmethod
    def cycle(n: int) -> "Graph":
        return Graph(n, [(i, (i + 1) % n) for i in range(n)])

    @staticmethod
    def empty(n: int) -> "Graph":
        return Graph(n, [])

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class VertexCosts:
    """Nonnegative integer vertex costs with a cached total."""

    c: tuple[int, ...]
    total: int = 0

    def __post_init__(self):
        vals = tuple(int(x) for x in self.c)
        n = len(vals)
        for x in vals:
            if x < 0 or x > n:
                raise ValueError("costs must satisfy 0 <= c_v <= n")
        object.__setattr__(self, "c", vals)
        object.__setattr__(self, "total", sum(vals))

    @staticmethod
    def uniform(n: int, value: int | None = None) -> "VertexCosts":
        return VertexCosts(tuple([n if value is None else value] * n))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.c, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.c)

    def __getitem__(self, v: int) -> int:
        return self.c[v]


@dataclass(frozen=True)
class DensityParams:
    """Density parameters: min-degree/n and min-cost/n."""

    delta: Fraction
    c0: Fraction


def cut_size(g: Graph, s: Cut) -> int:
    """Number of edges with exactly one endpoint in s."""
    if g.n <= _MASK_LIMIT:
        masks = g.adj_masks()
        inv = ((1 << g.n) - 1) ^ s.mask
        return sum((masks[v] & inv).bit_count() for v in iter_bits(s.mask))
    side = mask_to_bools(s.mask, g.n)
    if g.m == 0:
        return 0
    return int(np.count_nonzero(side[g.edges[:, 0]] != side[g.edges[:, 1]]))


def volume(g: Graph, s: Cut) -> int:
    """Sum of degrees over s."""
    if g.n <= _MASK_LIMIT:
        return sum(int(g.degrees[v]) for v in iter_bits(s.mask))
    side = mask_to_bools(s.mask, g.n)
    return int(g.degrees[side].sum())


def cost(c: VertexCosts, s: Cut) -> int:
    """Total cost of the vertices in s."""
    n = len(c)
    if n <= _MASK_LIMIT:
        return sum(c.c[v] for v in iter_bits(s.mask))
    side = mask_to_bools(s.mask, n)
    return int(c.as_array()[side].sum())


def internal_edges(g: Graph, s: Cut) -> int:
    """Number of edges with both endpoints in s."""
    if g.n <= _MASK_LIMIT:
        masks = g.adj_masks()
        twice = sum((masks[v] & s.mask).bit_count() for v in iter_bits(s.mask))
        return twice // 2
    side = mask_to_bools(s.mask, g.n)
    if g.m == 0:
        return 0
    return int(np.count_nonzero(side[g.edges[:, 0]] & side[g.edges[:, 1]]))


def density_params(g: Graph, c: VertexCosts) -> DensityParams:
    """Extract (delta, c0) = (min degree / n, min cost / n)."""
    if g.n < 1:
        raise ValueError("need at least one vertex")
    min_deg = int(g.degrees.min()) if g.n else 0
    min_cost = min(c.c)
    return DensityParams(Fraction(min_deg, g.n), Fraction(min_cost, g.n))


class ObjectiveKind(str, Enum):
    """Ratio objectives from the problem family, by short CLI code."""

    UNIFORM_SPARSEST_CUT = "usc"
    EDGE_EXPANSION = "ee"
    CONDUCTANCE = "cond"
    NORMALIZED_CUT = "nc"
    MIN_QUOTIENT_CUT = "mqc"
    PRODUCT_SPARSEST_CUT = "psc"


def objective(kind: ObjectiveKind, g: Graph, c: VertexCosts | None, s: Cut) -> Fraction:
    """Evaluate a ratio objective exactly.

    Raises DegenerateCut when the denominator vanishes (empty or full side
    for the cardinality objectives, zero volume or zero cost otherwise).
    """
    kind = ObjectiveKind(kind)
    cut = cut_size(g, s)
    ns = s.size
    nbar = g.n - ns
    if kind is ObjectiveKind.UNIFORM_SPARSEST_CUT:
        den = ns * nbar
    elif kind is ObjectiveKind.EDGE_EXPANSION:
        den = min(ns, nbar)
    elif kind is ObjectiveKind.CONDUCTANCE:
        vol = volume(g, s)
        den = min(vol, 2 * g.m - vol)
    elif kind is ObjectiveKind.NORMALIZED_CUT:
        vol = volume(g, s)
        den = vol * (2 * g.m - vol)
    elif kind is ObjectiveKind.MIN_QUOTIENT_CUT:
        if c is None:
            raise ValueError("quotient cut needs vertex costs")
        cs = cost(c, s)
        den = min(cs, c.total - cs)
    elif kind is ObjectiveKind.PRODUCT_SPARSEST_CUT:
        if c is None:
            raise ValueError("product sparsest cut needs vertex costs")
        cs = cost(c, s)
        den = cs * (c.total - cs)
    else:  # pragma: no cover
        raise ValueError(kind)
    if den == 0:
        raise DegenerateCut(f"zero denominator for {kind.value}")
    return Fraction(cut, den)
