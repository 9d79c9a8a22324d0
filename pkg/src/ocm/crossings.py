"""Crossing numbers, crossing/delta matrices and total crossing counts.

``c[u, v]`` is the number of crossings between edges of ``u`` and edges of
``v`` when ``u`` is placed before ``v``.  Edges sharing a fixed endpoint never
cross, so shared neighbors contribute to neither ``c[u, v]`` nor ``c[v, u]``.
All arithmetic is exact integer arithmetic.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .instance import BipartiteInstance, check_permutation

DEFAULT_LARGE_THRESHOLD = 10_000


class InstanceTooLarge(Exception):
    """The instance exceeds the matrix budget; use the matrix-free paths."""


@dataclass(frozen=True)
class CrossingsBudget:
    large_threshold: int = DEFAULT_LARGE_THRESHOLD

    def __post_init__(self):
        if self.large_threshold <= 0:
            raise ValueError("large_threshold must be positive")

    def fits(self, inst: BipartiteInstance) -> bool:
        return inst.n_free <= self.large_threshold


@dataclass(frozen=True)
class CrossingMatrix:
    """Dense crossing matrix over free indices plus ``delta = c - c.T``."""

    c: np.ndarray
    delta: np.ndarray
    n_fixed: int
    degree: np.ndarray

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def pair(self, u: int, v: int) -> int:
        """``c_uv`` addressed by free labels."""
        return int(self.c[u - self.n_fixed - 1, v - self.n_fixed - 1])

    def label(self, i: int) -> int:
        return i + self.n_fixed + 1

    def index(self, label: int) -> int:
        return label - self.n_fixed - 1


def pair_count(nu: Sequence[int], nv: Sequence[int]) -> int:
    """``c_uv`` from sorted neighbor lists: pairs ``x in N(v), y in N(u)`` with ``x < y``.

    Loops over the shorter list and binary-searches the longer one.
    """
    if len(nv) <= len(nu):
        total = len(nv) * len(nu)
        return total - sum(bisect_right(nu, x) for x in nv)
    return sum(bisect_left(nv, y) for y in nu)


def crossing_number_pair(inst: BipartiteInstance, u: int, v: int) -> int:
    if u == v:
        raise ValueError("crossing number needs two distinct free vertices")
    return pair_count(inst.neighbors(u), inst.neighbors(v))


def _incidence(inst: BipartiteInstance) -> sparse.csr_matrix:
    rows = [i for i, nb in enumerate(inst.adj_free) for _ in nb]
    cols = [a - 1 for nb in inst.adj_free for a in nb]
    data = np.ones(len(rows), dtype=np.int64)
    return sparse.csr_matrix(
        (data, (rows, cols)), shape=(inst.n_free, max(inst.n_fixed, 1)), dtype=np.int64
    )


def build_crossing_matrix(
    inst: BipartiteInstance, budget: Optional[CrossingsBudget] = None, chunk: int = 512
) -> CrossingMatrix:
    """All pairwise crossing numbers.

    Uses ``c = D @ L.T`` with ``D`` the free-by-fixed incidence matrix and
    ``L[v, y] = |{x in N(v) : x < y}|``; columns are produced in chunks so
    peak memory stays at ``chunk * n_fixed`` entries.
    """
    budget = budget or CrossingsBudget()
    if not budget.fits(inst):
        raise InstanceTooLarge(
            f"{inst.n_free} free vertices exceed the threshold {budget.large_threshold}"
        )
    n = inst.n_free
    c = np.zeros((n, n), dtype=np.int64)
    if n and inst.n_edges:
        d = _incidence(inst)
        for lo in range(0, n, chunk):
            dense = d[lo : lo + chunk].toarray()
            below = np.cumsum(dense, axis=1) - dense
            c[:, lo : lo + chunk] = d @ below.T
    np.fill_diagonal(c, 0)
    degree = np.array([len(nb) for nb in inst.adj_free], dtype=np.int64)
    return CrossingMatrix(c, c - c.T, inst.n_fixed, degree)


def count_crossings_naive(inst: BipartiteInstance, ordering: Sequence[int]) -> int:
    """Reference count: test every pair of edges."""
    check_permutation(inst, ordering)
    pos = {v: i for i, v in enumerate(ordering)}
    edges = inst.edges()
    if len(edges) < 2:
        return 0
    a = np.array([e[0] for e in edges], dtype=np.int64)
    p = np.array([pos[e[1]] for e in edges], dtype=np.int64)
    total = 0
    step = 1024
    for lo in range(0, len(a), step):
        da = np.sign(a[lo : lo + step, None] - a[None, :])
        dp = np.sign(p[lo : lo + step, None] - p[None, :])
        total += int(np.count_nonzero(da * dp < 0))
    return total // 2


class SegmentTree:
    """Point-add / range-sum tree over ``size`` slots, reusable via ``reset``."""

    def __init__(self, size: int):
        self.size = 1
        while self.size < max(size, 1):
            self.size *= 2
        self.tree = [0] * (2 * self.size)
        self._dirty = []

    def reset(self) -> None:
        tree = self.tree
        for i in self._dirty:
            i += self.size
            while i and tree[i]:
                tree[i] = 0
                i >>= 1
        self._dirty.clear()

    def add(self, i: int, value: int = 1) -> None:
        self._dirty.append(i)
        tree = self.tree
        i += self.size
        while i:
            tree[i] += value
            i >>= 1

    def sum(self, lo: int, hi: int) -> int:
        """Sum of slots ``lo <= i < hi``."""
        tree = self.tree
        total = 0
        lo += self.size
        hi += self.size
        while lo < hi:
            if lo & 1:
                total += tree[lo]
                lo += 1
            if hi & 1:
                hi -= 1
                total += tree[hi]
            lo >>= 1
            hi >>= 1
        return total


def count_crossings_fast(
    inst: BipartiteInstance,
    ordering: Sequence[int],
    tree: Optional[SegmentTree] = None,
) -> int:
    """Sweep fixed vertices left to right, counting earlier edges ending further right."""
    check_permutation(inst, ordering)
    n = inst.n_free
    if tree is None or tree.size < n:
        tree = SegmentTree(n)
    else:
        tree.reset()
    offset = inst.n_fixed + 1
    pos = [0] * n
    for i, v in enumerate(ordering):
        pos[v - offset] = i
    total = 0
    for nb in inst.adj_fixed:
        if not nb:
            continue
        ps = sorted(pos[b - offset] for b in nb)
        for p in ps:
            total += tree.sum(p + 1, n)
            tree.add(p)
    tree.reset()
    return total


def ordering_cost(matrix: CrossingMatrix, index_order: Sequence[int]) -> int:
    """Total crossings of an ordering given as free indices."""
    if len(index_order) < 2:
        return 0
    o = np.asarray(index_order)
    return int(np.triu(matrix.c[np.ix_(o, o)], 1).sum())


def trivial_lower_bound(matrix: CrossingMatrix) -> int:
    return int(np.minimum(matrix.c, matrix.c.T).sum() // 2)


def subset_dp_optimum(matrix: CrossingMatrix) -> int:
    """Exact optimum by dynamic programming over subsets (n up to ~20)."""
    n = matrix.n
    c = matrix.c.tolist()
    best = [0] + [None] * ((1 << n) - 1)
    for mask in range(1, 1 << n):
        val = None
        m = mask
        while m:
            low = m & -m
            v = low.bit_length() - 1
            m ^= low
            prev = mask ^ low
            cost = best[prev] + sum(c[u][v] for u in range(n) if prev >> u & 1)
            if val is None or cost < val:
                val = cost
        best[mask] = val
    return int(best[(1 << n) - 1])
