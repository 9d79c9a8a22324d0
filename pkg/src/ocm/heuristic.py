"""Median/barycenter seeds, sifting local search and the large-graph heuristic.

Randomness comes from ``numpy.random.Generator`` (PCG64) seeded through
``HeuristicParams.seed``; identical seeds and iteration quotas give
identical results.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .budget import Budget
from .crossings import (
    CrossingMatrix,
    SegmentTree,
    count_crossings_fast,
    ordering_cost,
    pair_count,
)
from .instance import BipartiteInstance, Solution

__all__ = [
    "HeuristicParams",
    "OrderState",
    "Constraints",
    "median_order",
    "barycenter_order",
    "sift_vertex",
    "sift_all",
    "force_swap_phase",
    "swap_distances",
    "local_search",
    "large_graph_heuristic",
]


@dataclass(frozen=True)
class HeuristicParams:
    restart_stall_limit: int = 592
    swap_step: int = 9
    swap_max_distance: int = 90
    large_initial_phase_fraction: float = 0.10
    large_sift_crossing_cap: int = 20_000
    large_sift_distance_cap: int = 2_000
    seed: int = 0

    def __post_init__(self):
        caps = (
            self.restart_stall_limit,
            self.swap_step,
            self.swap_max_distance,
            self.large_sift_crossing_cap,
            self.large_sift_distance_cap,
        )
        if min(caps) <= 0:
            raise ValueError("heuristic caps must be positive")
        if not 0 < self.large_initial_phase_fraction < 1:
            raise ValueError("large_initial_phase_fraction must lie in (0, 1)")


def swap_distances(params: HeuristicParams) -> list:
    return list(range(1, params.swap_max_distance + 1, params.swap_step))


# -- seeds ------------------------------------------------------------------


def median_order(inst: BipartiteInstance, odd_first: bool = False) -> tuple:
    """Sort by lower median neighbor (0 for isolated vertices), ties by label.

    With ``odd_first`` ties put odd-degree vertices first, the tie rule under
    which the median heuristic is a 3-approximation.
    """

    def key(i):
        nb = inst.adj_free[i]
        med = nb[(len(nb) - 1) // 2] if nb else 0
        parity = 0 if not odd_first else (0 if len(nb) % 2 else 1)
        return med, parity, i

    return tuple(inst.label(i) for i in sorted(range(inst.n_free), key=key))


def barycenter_order(inst: BipartiteInstance) -> tuple:
    def key(i):
        nb = inst.adj_free[i]
        return (Fraction(sum(nb), len(nb)) if nb else Fraction(0)), i

    return tuple(inst.label(i) for i in sorted(range(inst.n_free), key=key))


# -- order state --------------------------------------------------------------


class OrderState:
    """A permutation of free indices, its inverse and its crossing count."""

    __slots__ = ("order", "pos", "count")

    def __init__(self, order: Sequence[int], count: int):
        self.order = np.asarray(order, dtype=np.int64).copy()
        self.pos = np.empty_like(self.order)
        self.pos[self.order] = np.arange(len(self.order))
        self.count = int(count)

    @classmethod
    def from_order(cls, matrix: CrossingMatrix, order: Sequence[int]) -> "OrderState":
        return cls(order, ordering_cost(matrix, order))

    def copy(self) -> "OrderState":
        s = OrderState.__new__(OrderState)
        s.order = self.order.copy()
        s.pos = self.pos.copy()
        s.count = self.count
        return s

    def labels(self, inst: BipartiteInstance) -> tuple:
        return tuple(inst.label(int(i)) for i in self.order)

    def move(self, v: int, k: int) -> None:
        p = int(self.pos[v])
        order = self.order
        if k < p:
            order[k + 1 : p + 1] = order[k:p].copy()
        elif k > p:
            order[p:k] = order[p + 1 : k + 1].copy()
        else:
            return
        order[k] = v
        lo, hi = min(p, k), max(p, k)
        self.pos[order[lo : hi + 1]] = np.arange(lo, hi + 1)


class Constraints:
    """Pairs "a before b" (free indices) that every produced order must respect."""

    def __init__(self, n: int, pairs: Iterable = ()):
        self.n = n
        before = [[] for _ in range(n)]
        after = [[] for _ in range(n)]
        self.pairs = []
        for a, b in pairs:
            before[b].append(a)
            after[a].append(b)
            self.pairs.append((a, b))
        self.before = [np.array(x, dtype=np.int64) for x in before]
        self.after = [np.array(x, dtype=np.int64) for x in after]

    def __bool__(self) -> bool:
        return bool(self.pairs)

    def with_pair(self, a: int, b: int) -> "Constraints":
        return Constraints(self.n, self.pairs + [(a, b)])

    def satisfied(self, pos: np.ndarray) -> bool:
        return all(pos[a] < pos[b] for a, b in self.pairs)

    def window(self, pos: np.ndarray, v: int, p: int, n: int) -> tuple:
        """Allowed insertion slots ``lo..hi`` for ``v`` once removed from ``p``."""
        lo, hi = 0, n - 1
        b = self.before[v]
        if len(b):
            rp = pos[b]
            lo = int((rp - (rp > p)).max()) + 1
        a = self.after[v]
        if len(a):
            rp = pos[a]
            hi = int((rp - (rp > p)).min())
        return lo, hi


def linear_extension(n: int, constraints: Optional[Constraints], priority: Sequence) -> list:
    """Order respecting ``constraints`` that follows ``priority`` where possible."""
    if not constraints:
        return sorted(range(n), key=lambda v: priority[v])
    indeg = [len(constraints.before[v]) for v in range(n)]
    ready = [(priority[v], v) for v in range(n) if indeg[v] == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        _, v = heapq.heappop(ready)
        out.append(v)
        for w in constraints.after[v]:
            w = int(w)
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, (priority[w], w))
    if len(out) != n:
        raise ValueError("constraints contain a cycle")
    return out


# -- sifting ------------------------------------------------------------------


def sift_vertex(
    state: OrderState,
    matrix: CrossingMatrix,
    v: int,
    constraints: Optional[Constraints] = None,
) -> int:
    """Move free index ``v`` to its best slot (leftmost among ties).

    Returns the change in crossings (never positive).
    """
    n = len(state.order)
    if n < 2:
        return 0
    p = int(state.pos[v])
    rest = np.delete(state.order, p)
    profile = np.zeros(n, dtype=np.int64)
    np.cumsum(matrix.delta[rest, v], out=profile[1:])
    if constraints:
        lo, hi = constraints.window(state.pos, v, p, n)
    else:
        lo, hi = 0, n - 1
    k = lo + int(np.argmin(profile[lo : hi + 1]))
    change = int(profile[k] - profile[p])
    if change > 0:
        return 0
    state.move(v, k)
    state.count += change
    return change


def sift_all(
    state: OrderState,
    matrix: CrossingMatrix,
    rng: np.random.Generator,
    constraints: Optional[Constraints] = None,
    budget: Optional[Budget] = None,
) -> OrderState:
    """Sift every vertex in a fresh random sequence until a pass gains nothing."""
    n = len(state.order)
    while True:
        improved = False
        for v in rng.permutation(n):
            if sift_vertex(state, matrix, int(v), constraints) < 0:
                improved = True
            if budget is not None and budget.expired():
                return state
        if not improved:
            return state


def force_swap_phase(
    state: OrderState,
    matrix: CrossingMatrix,
    params: HeuristicParams,
    rng: np.random.Generator,
    constraints: Optional[Constraints] = None,
    budget: Optional[Budget] = None,
) -> OrderState:
    """Swap vertex pairs at growing distances, re-sift with the pair pinned.

    A candidate replaces the current best only if it has fewer crossings.
    """
    base = constraints or Constraints(len(state.order))
    best = state.copy()
    n = len(best.order)
    for d in swap_distances(params):
        if d >= n:
            break
        for v in rng.permutation(n):
            if budget is not None and budget.expired():
                return best
            v = int(v)
            i = int(best.pos[v])
            j = i + d
            if j >= n:
                continue
            u = int(best.order[j])
            cand = best.copy()
            cand.order[i], cand.order[j] = u, v
            cand.pos[u], cand.pos[v] = i, j
            pinned = base.with_pair(u, v)
            if not pinned.satisfied(cand.pos):
                continue
            cand.count = ordering_cost(matrix, cand.order)
            sift_all(cand, matrix, rng, pinned, budget)
            if cand.count < best.count:
                best = cand
    return best


def local_search(
    inst: BipartiteInstance,
    matrix: CrossingMatrix,
    params: Optional[HeuristicParams] = None,
    committed_pairs: Iterable = (),
    budget: Optional[Budget] = None,
    lower_bound: Optional[int] = None,
) -> Solution:
    """Median seed plus sifting, then random restarts with force swapping.

    ``committed_pairs`` are (label, label) pairs every output respects.
    The search ends when the budget's time or iteration quota runs out, or
    as soon as the best count reaches ``lower_bound``.
    """
    params = params or HeuristicParams()
    budget = budget or Budget(iterations=0)
    if budget.deadline is None and budget.iterations is None:
        raise ValueError("local search needs a time limit or an iteration quota")
    n = inst.n_free
    if n == 0:
        return Solution((), 0)
    rng = np.random.default_rng(params.seed)
    cons = Constraints(n, [(inst.index(a), inst.index(b)) for a, b in committed_pairs])

    rank = {v: r for r, v in enumerate(median_order(inst))}
    seed_order = linear_extension(n, cons, [rank[inst.label(i)] for i in range(n)])
    best = sift_all(OrderState.from_order(matrix, seed_order), matrix, rng, cons, budget)

    def done(it):
        if lower_bound is not None and best.count <= lower_bound:
            return True
        if budget.iterations is not None and it >= budget.iterations:
            return True
        return budget.expired()

    it = stall = 0
    while not done(it):
        it += 1
        start = linear_extension(n, cons, rng.permutation(n))
        cand = sift_all(OrderState.from_order(matrix, start), matrix, rng, cons, budget)
        if cand.count < best.count:
            best, stall = cand, 0
            continue
        stall += 1
        if stall >= params.restart_stall_limit:
            best = force_swap_phase(best, matrix, params, rng, cons, budget)
            stall = 0
    return Solution(best.labels(inst), best.count)


# -- large graphs -------------------------------------------------------------


def _pair_delta(inst: BipartiteInstance, u: int, v: int) -> int:
    """Change in crossings when index ``u`` passes from before ``v`` to after it."""
    nu, nv = inst.adj_free[u], inst.adj_free[v]
    return pair_count(nv, nu) - pair_count(nu, nv)


def _adjacent_swaps(inst, order: list, budget: Optional[Budget]) -> list:
    improved = True
    while improved:
        improved = False
        for i in range(len(order) - 1):
            if budget is not None and budget.expired():
                return order
            u, v = order[i], order[i + 1]
            if _pair_delta(inst, u, v) < 0:
                order[i], order[i + 1] = v, u
                improved = True
    return order


def _capped_sift(inst, order: list, v: int, params: HeuristicParams) -> int:
    p = order.index(v)
    n = len(order)
    best_k, best = p, 0
    running = 0
    for j in range(p + 1, min(n, p + params.large_sift_distance_cap + 1)):
        running += _pair_delta(inst, v, order[j])
        if running < best:
            best_k, best = j, running
        if running > params.large_sift_crossing_cap:
            break
    running = 0
    for j in range(p - 1, max(-1, p - params.large_sift_distance_cap - 1), -1):
        running += _pair_delta(inst, order[j], v)
        if running <= best and (running < best or j < best_k):
            best_k, best = j, running
        if running > params.large_sift_crossing_cap:
            break
    if best < 0:
        order.pop(p)
        order.insert(best_k, v)
    return best


def large_graph_heuristic(
    inst: BipartiteInstance,
    params: Optional[HeuristicParams] = None,
    budget: Optional[Budget] = None,
) -> Solution:
    """Matrix-free heuristic: adjacent swaps from both seeds, then capped sifting."""
    params = params or HeuristicParams()
    budget = budget or Budget()
    n = inst.n_free
    if n == 0:
        return Solution((), 0)
    tree = SegmentTree(n)
    seeds = []
    for seed in (median_order(inst), barycenter_order(inst)):
        order = [inst.index(v) for v in seed]
        if budget.remaining() > 0 and not budget.expired():
            phase = budget.slice(params.large_initial_phase_fraction)
            order = _adjacent_swaps(inst, order, phase)
        count = count_crossings_fast(inst, [inst.label(i) for i in order], tree)
        seeds.append((count, order))
    count, order = min(seeds, key=lambda s: s[0])

    rng = np.random.default_rng(params.seed)
    passes = 0
    while not budget.expired():
        if budget.iterations is not None and passes >= budget.iterations:
            break
        passes += 1
        gained = 0
        for v in rng.permutation(n):
            if budget.expired():
                break
            gained += _capped_sift(inst, order, int(v), params)
        count += gained
        if gained == 0:
            break
    return Solution(tuple(inst.label(i) for i in order), count)
