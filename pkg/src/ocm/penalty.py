"""Penalty graph, strongly connected components and instance splitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

from .crossings import (
    CrossingMatrix,
    CrossingsBudget,
    build_crossing_matrix,
    count_crossings_fast,
)
from .instance import BipartiteInstance, Solution

__all__ = [
    "PenaltyGraph",
    "SplitPart",
    "SplitPlan",
    "build_penalty_graph",
    "scc_decomposition",
    "split_by_scc",
    "split_by_intervals",
    "merge_solutions",
]


@dataclass
class PenaltyGraph:
    """Weighted digraph; arc ``(u, v)`` means "u before v" is the cheaper side.

    Also used as the generic weighted digraph of the feedback arc set code,
    so vertices may be any hashable, sortable ids.
    """

    vertices: tuple
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = tuple(self.vertices)
        self._succ = None

    @property
    def arcs(self) -> list:
        return list(self.weights)

    def successors(self) -> dict:
        if self._succ is None:
            succ = {v: [] for v in self.vertices}
            for u, v in sorted(self.weights):
                succ[u].append(v)
            self._succ = succ
        return self._succ

    def without(self, removed: Iterable) -> "PenaltyGraph":
        removed = set(removed)
        return PenaltyGraph(
            self.vertices, {a: w for a, w in self.weights.items() if a not in removed}
        )

    def is_acyclic(self) -> bool:
        return topological_order(self) is not None


def topological_order(g: PenaltyGraph) -> Optional[list]:
    """Kahn's algorithm, smallest vertex first among the ready ones; None if cyclic."""
    import heapq

    indeg = {v: 0 for v in g.vertices}
    for _, v in g.weights:
        indeg[v] += 1
    ready = [v for v in g.vertices if indeg[v] == 0]
    heapq.heapify(ready)
    succ = g.successors()
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    return order if len(order) == len(g.vertices) else None


def build_penalty_graph(matrix: CrossingMatrix) -> PenaltyGraph:
    c = matrix.c
    us, vs = np.nonzero(c < c.T)
    weights = {
        (matrix.label(int(u)), matrix.label(int(v))): int(c[v, u] - c[u, v])
        for u, v in zip(us, vs)
    }
    return PenaltyGraph(tuple(matrix.label(i) for i in range(matrix.n)), weights)


def scc_decomposition(pg: PenaltyGraph) -> list:
    """Strongly connected components, in topological order of the condensation.

    Iterative Tarjan; Tarjan emits sinks first, so the output is reversed.
    Each component is returned sorted.
    """
    succ = pg.successors()
    index = {}
    low = {}
    on_stack = set()
    stack = []
    comps = []
    counter = 0
    for root in pg.vertices:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    comps.reverse()
    return comps


@dataclass(frozen=True)
class SplitPart:
    instance: BipartiteInstance
    free_map: tuple  # sub free index -> original free label

    def to_original(self, ordering: Sequence[int]) -> list:
        inst = self.instance
        return [self.free_map[inst.index(v)] for v in ordering]


@dataclass(frozen=True)
class SplitPlan:
    """Subinstances in concatenation order; isolated vertices go last, ascending."""

    instance: BipartiteInstance
    parts: tuple
    isolated: tuple

    def __post_init__(self):
        seen = [v for p in self.parts for v in p.free_map] + list(self.isolated)
        if sorted(seen) != list(self.instance.free_labels):
            raise ValueError("split parts must partition the free vertices")


def _plan(inst: BipartiteInstance, groups: Sequence[Sequence[int]]) -> SplitPlan:
    parts = tuple(SplitPart(*inst.induced(g)) for g in groups)
    return SplitPlan(inst, parts, tuple(inst.isolated()))


def split_by_scc(
    inst: BipartiteInstance,
    matrix: Optional[CrossingMatrix] = None,
    budget: Optional[CrossingsBudget] = None,
) -> SplitPlan:
    if matrix is None:
        matrix = build_crossing_matrix(inst, budget)
    isolated = set(inst.isolated())
    comps = scc_decomposition(build_penalty_graph(matrix))
    return _plan(inst, [c for c in comps if not (len(c) == 1 and c[0] in isolated)])


def split_by_intervals(inst: BipartiteInstance) -> SplitPlan:
    """Group free vertices whose neighborhood spans overlap (endpoints inclusive)."""
    spans = sorted(
        (nb[0], nb[-1], inst.label(i)) for i, nb in enumerate(inst.adj_free) if nb
    )
    groups = []
    hi = None
    for lo, top, v in spans:
        if hi is None or lo > hi:
            groups.append([])
            hi = top
        else:
            hi = max(hi, top)
        groups[-1].append(v)
    return _plan(inst, [sorted(g) for g in groups])


def merge_solutions(plan: SplitPlan, solutions: Sequence[Solution]) -> Solution:
    if len(solutions) != len(plan.parts):
        raise ValueError(
            f"expected {len(plan.parts)} sub-solutions, got {len(solutions)}"
        )
    order = []
    for part, sol in zip(plan.parts, solutions):
        if sorted(sol.ordering) != list(part.instance.free_labels):
            raise ValueError("sub-solution does not match its subinstance")
        order.extend(part.to_original(sol.ordering))
    order.extend(plan.isolated)
    return Solution(tuple(order), count_crossings_fast(plan.instance, order))
