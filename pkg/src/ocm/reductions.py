"""Partial-order data reductions (RR1, RR2, modified RRlarge, RRLO1).

A :class:`PartialOrder` stores one bit row per free vertex (Python ints as
packed bitsets): bit ``j`` of ``rows[i]`` means "i before j".  Vertices are
addressed by dense free index.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .crossings import CrossingMatrix, build_crossing_matrix, ordering_cost, trivial_lower_bound
from .instance import BipartiteInstance, Solution, check_permutation

__all__ = [
    "InconsistentOrder",
    "PartialOrder",
    "ReductionOutcome",
    "apply_rr1",
    "apply_rr2",
    "apply_rrlarge_modified",
    "transitive_close",
    "apply_rrlo1",
    "reduce_pipeline",
]


class InconsistentOrder(RuntimeError):
    """A commitment contradicts the order (cannot happen for sound rules)."""


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


class PartialOrder:
    def __init__(self, n: int):
        self.n = n
        self.rows = [0] * n
        self.closed = True

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable) -> "PartialOrder":
        p = cls(n)
        for a, b in pairs:
            p.commit(a, b)
        return p

    def commit(self, a: int, b: int) -> bool:
        """Record "a before b"; returns False if it was already known."""
        if a == b:
            raise InconsistentOrder(f"cannot order vertex {a} before itself")
        if self.rows[b] >> a & 1:
            raise InconsistentOrder(f"{a} before {b} contradicts {b} before {a}")
        if self.rows[a] >> b & 1:
            return False
        self.rows[a] |= 1 << b
        self.closed = False
        return True

    def before(self, a: int, b: int) -> bool:
        return bool(self.rows[a] >> b & 1)

    def pairs(self) -> list:
        return [(a, b) for a in range(self.n) for b in _bits(self.rows[a])]

    def predecessors(self) -> list:
        preds = [0] * self.n
        for a in range(self.n):
            bit = 1 << a
            for b in _bits(self.rows[a]):
                preds[b] |= bit
        return preds

    def __len__(self) -> int:
        return sum(r.bit_count() for r in self.rows)

    def copy(self) -> "PartialOrder":
        p = PartialOrder(self.n)
        p.rows = list(self.rows)
        p.closed = self.closed
        return p


def apply_rr1(matrix: CrossingMatrix, p: PartialOrder) -> bool:
    """Commit a before b whenever c_ab = 0.

    Mutually zero pairs are ordered by ascending label; vertices without
    edges are left alone since they are mutually zero with everything and
    any direction forced on them could clash with other rules.
    """
    c = matrix.c
    zero = c == 0
    np.fill_diagonal(zero, False)
    live = matrix.degree > 0
    zero &= live[:, None] & live[None, :]
    mutual = zero & zero.T
    zero &= ~mutual | np.triu(np.ones_like(zero), 1)
    changed = False
    for a, b in zip(*np.nonzero(zero)):
        changed |= p.commit(int(a), int(b))
    return changed


def apply_rr2(inst: BipartiteInstance, p: PartialOrder) -> bool:
    """Chain each class of vertices with identical neighborhoods by label."""
    classes = defaultdict(list)
    for i, nb in enumerate(inst.adj_free):
        if nb:
            classes[nb].append(i)
    changed = False
    for members in classes.values():
        for a, b in zip(members, members[1:]):
            changed |= p.commit(a, b)
    return changed


def apply_rrlarge_modified(
    matrix: CrossingMatrix, p: PartialOrder, lower_bound: int, upper_bound: int
) -> bool:
    """Commit a before b when c_ba + lower_bound - c_ab > upper_bound."""
    if lower_bound > upper_bound:
        raise ValueError(f"lower bound {lower_bound} exceeds upper bound {upper_bound}")
    forced = -matrix.delta > upper_bound - lower_bound
    changed = False
    for a, b in zip(*np.nonzero(forced)):
        changed |= p.commit(int(a), int(b))
    return changed


def transitive_close(p: PartialOrder) -> PartialOrder:
    """Close ``p`` in place by OR-ing rows in reverse topological order."""
    n = p.n
    indeg = [0] * n
    for a in range(n):
        for b in _bits(p.rows[a]):
            indeg[b] += 1
    stack = [v for v in range(n) if indeg[v] == 0]
    topo = []
    while stack:
        v = stack.pop()
        topo.append(v)
        for w in _bits(p.rows[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    if len(topo) != n:
        raise InconsistentOrder("partial order contains a cycle")
    rows = p.rows
    for v in reversed(topo):
        reach = rows[v]
        for w in _bits(rows[v]):
            reach |= rows[w]
        rows[v] = reach
    p.closed = True
    return p


@dataclass
class ReductionOutcome:
    instance: BipartiteInstance
    reduced: BipartiteInstance
    free_map: tuple  # reduced free index -> original label
    order: PartialOrder  # closed, over original free indices
    fixed_positions: dict  # original label -> 1-based position in the final order
    committed: list = field(default_factory=list)  # pairs in reduced labels

    @property
    def removed(self) -> int:
        return len(self.fixed_positions)

    def committed_original(self) -> list:
        inst = self.instance
        return [(inst.label(a), inst.label(b)) for a, b in self.order.pairs()]

    def reconstruct(self, reduced_ordering: Sequence[int]) -> list:
        """Insert the removed vertices at their fixed positions."""
        check_permutation(self.reduced, reduced_ordering)
        order = [self.free_map[self.reduced.index(v)] for v in reduced_ordering]
        for v, pos in sorted(self.fixed_positions.items(), key=lambda kv: kv[1]):
            order.insert(pos - 1, v)
        return order


def _outcome(inst, p, fixed_positions) -> ReductionOutcome:
    survivors = [v for v in inst.free_labels if v not in fixed_positions]
    reduced, free_map = inst.induced(survivors)
    local = {inst.index(v): i for i, v in enumerate(free_map)}
    committed = [
        (reduced.label(local[a]), reduced.label(local[b]))
        for a, b in p.pairs()
        if a in local and b in local
    ]
    return ReductionOutcome(inst, reduced, free_map, p, fixed_positions, committed)


def apply_rrlo1(
    inst: BipartiteInstance, p: PartialOrder, active: Optional[Sequence[int]] = None
) -> ReductionOutcome:
    """Remove every vertex comparable to all other active vertices.

    ``active`` lists the free indices taking part (default: all); inactive
    vertices are neither considered nor removed here.
    """
    if not p.closed:
        raise ValueError("RRLO1 needs a transitively closed order")
    active = list(range(inst.n_free)) if active is None else list(active)
    mask = 0
    for v in active:
        mask |= 1 << v
    preds = p.predecessors()
    fixed = {}
    for v in active:
        others = mask & ~(1 << v)
        if (p.rows[v] | preds[v]) & others == others:
            fixed[inst.label(v)] = (preds[v] & mask).bit_count() + 1
    return _outcome(inst, p, fixed)


def reduce_pipeline(
    inst: BipartiteInstance,
    upper_bound_solution: Optional[Solution] = None,
    matrix: Optional[CrossingMatrix] = None,
) -> ReductionOutcome:
    """RR1, RR2 and modified RRlarge to a fixed point, close, then RRLO1.

    Vertices without edges are removed up front and placed after everything
    else in ascending label order.
    """
    if matrix is None:
        matrix = build_crossing_matrix(inst)
    p = PartialOrder(inst.n_free)
    apply_rr1(matrix, p)
    apply_rr2(inst, p)
    if upper_bound_solution is not None:
        lb = trivial_lower_bound(matrix)
        ordering = upper_bound_solution.ordering
        check_permutation(inst, ordering)
        ub = ordering_cost(matrix, [inst.index(v) for v in ordering])
        while True:
            changed = apply_rrlarge_modified(matrix, p, lb, ub)
            transitive_close(p)
            if not changed:
                break
    transitive_close(p)

    live = [i for i, nb in enumerate(inst.adj_free) if nb]
    outcome = apply_rrlo1(inst, p, live)
    tail = len(live)
    for k, v in enumerate(inst.isolated(), 1):
        outcome.fixed_positions[v] = tail + k
    return _outcome(inst, p, outcome.fixed_positions)
