"""Weighted feedback arc set: lazy cycle generation over a restricted cover problem.

The restricted problem keeps an arc universe and a growing list of cycles;
a cover picks at least one arc per cycle.  The default backend solves it by
branch and bound with a packing lower bound and a randomized greedy
incumbent.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from .budget import Budget, BudgetExceeded
from .crossings import CrossingMatrix
from .penalty import PenaltyGraph, topological_order

__all__ = [
    "Cycle",
    "RestrictedFasProblem",
    "FasSolution",
    "IlpModel",
    "LinearOrderingModel",
    "RestrictedMasterBackend",
    "BranchAndBoundBackend",
    "HighsBackend",
    "contradicting_arcs",
    "shortest_cycle_through",
    "packing_lower_bound",
    "randomized_greedy_ub",
    "branch_and_bound",
    "lazy_cycle_fas",
    "fas_to_ordering",
    "build_cycle_ilp_model",
    "build_linear_ordering_model",
]


@dataclass(frozen=True)
class Cycle:
    arcs: tuple  # ((u, v), ...) head-to-tail, closing back on the first tail

    def __post_init__(self):
        arcs = self.arcs
        if not arcs:
            raise ValueError("empty cycle")
        for (_, v), (x, _) in zip(arcs, arcs[1:] + arcs[:1]):
            if v != x:
                raise ValueError("cycle arcs are not consecutive")
        if len(set(arcs)) != len(arcs):
            raise ValueError("cycle repeats an arc")

    def __len__(self) -> int:
        return len(self.arcs)


@dataclass
class RestrictedFasProblem:
    """Arcs with positive weights and cycles given as tuples of arc ids."""

    arcs: list
    weights: list
    cycles: list = field(default_factory=list)
    _arc_id: dict = field(default_factory=dict, repr=False)
    _seen: set = field(default_factory=set, repr=False)

    def __post_init__(self):
        if len(self.arcs) != len(self.weights):
            raise ValueError("one weight per arc")
        if any(w <= 0 for w in self.weights):
            raise ValueError("arc weights must be positive")
        self._arc_id = {a: i for i, a in enumerate(self.arcs)}
        cycles, self.cycles = self.cycles, []
        for c in cycles:
            self.add_cycle(c)

    @classmethod
    def from_graph(cls, g: PenaltyGraph) -> "RestrictedFasProblem":
        arcs = sorted(g.weights)
        return cls(arcs, [g.weights[a] for a in arcs])

    def arc_id(self, arc) -> int:
        return self._arc_id[arc]

    def add_cycle(self, cycle) -> bool:
        """Add a cycle (a :class:`Cycle` or a sequence of arc ids); False if known."""
        ids = tuple(self._arc_id[a] for a in cycle.arcs) if isinstance(cycle, Cycle) else tuple(cycle)
        if any(not 0 <= i < len(self.arcs) for i in ids):
            raise ValueError("cycle references an unknown arc")
        key = frozenset(ids)
        if key in self._seen:
            return False
        self._seen.add(key)
        self.cycles.append(ids)
        return True


@dataclass(frozen=True)
class FasSolution:
    selected: frozenset  # arc ids for restricted problems, arcs for graphs
    weight: int
    optimal: bool = False

    def covers(self, problem: RestrictedFasProblem) -> bool:
        return all(any(i in self.selected for i in c) for c in problem.cycles)


@dataclass
class IlpModel:
    """Solver-agnostic 0/1 program: ``min objective . x`` s.t. rows ``(coeffs, sense, rhs)``."""

    variables: list
    objective: dict
    constraints: list = field(default_factory=list)

    def __post_init__(self):
        known = set(self.variables)
        for coeffs, sense, _ in self.constraints:
            if sense not in ("<=", ">=", "=="):
                raise ValueError(f"bad constraint sense {sense!r}")
            if not set(coeffs) <= known:
                raise ValueError("constraint references an undeclared variable")
        if not set(self.objective) <= known:
            raise ValueError("objective references an undeclared variable")


# -- graph helpers ------------------------------------------------------------


def contradicting_arcs(pg: PenaltyGraph, ordering: Sequence) -> tuple:
    """Arcs pointing backwards in ``ordering`` and their total weight."""
    if sorted(ordering) != sorted(pg.vertices) or len(set(ordering)) != len(ordering):
        raise ValueError("ordering is not a permutation of the graph's vertices")
    pos = {v: i for i, v in enumerate(ordering)}
    arcs = frozenset(a for a in pg.weights if pos[a[1]] < pos[a[0]])
    return arcs, sum(pg.weights[a] for a in arcs)


def shortest_cycle_through(graph: PenaltyGraph, arc) -> Optional[Cycle]:
    """BFS from the arc's head back to its tail; None if unreachable."""
    u, v = arc
    if arc not in graph.weights:
        return None
    succ = graph.successors()
    parent = {v: None}
    queue = deque([v])
    while queue:
        x = queue.popleft()
        if x == u:
            break
        for y in succ[x]:
            if y not in parent:
                parent[y] = x
                queue.append(y)
    if u not in parent:
        return None
    path = [u]
    while path[-1] != v:
        path.append(parent[path[-1]])
    path.reverse()  # v ... u
    arcs = [(u, v)] + list(zip(path, path[1:]))
    return Cycle(tuple(arcs))


def _any_cycle_arc(graph: PenaltyGraph):
    """Some arc lying on a cycle of ``graph`` (None if acyclic)."""
    from .penalty import scc_decomposition

    for comp in scc_decomposition(graph):
        if len(comp) > 1:
            members = set(comp)
            for a in sorted(graph.weights):
                if a[0] in members and a[1] in members:
                    return a
    return None


def fas_to_ordering(pg: PenaltyGraph, removed) -> list:
    order = topological_order(pg.without(removed))
    if order is None:
        raise ValueError("graph minus the arc set still has a cycle")
    return order


# -- restricted problem solvers -------------------------------------------------


def _packing(cycles, residual: list) -> float:
    bound = 0
    for c in cycles:
        m = min(residual[i] for i in c)
        if m == 0:
            continue
        if m == float("inf"):
            return m
        bound += m
        for i in c:
            residual[i] -= m
    return bound


def packing_lower_bound(problem: RestrictedFasProblem) -> int:
    """Cycle packing with weight deduction; cycles in insertion order."""
    return int(_packing(problem.cycles, list(problem.weights)))


def _cover_weight(problem, sel) -> int:
    return sum(problem.weights[i] for i in sel)


def _greedy_complete(problem, selected: set, rng: np.random.Generator) -> set:
    w = problem.weights
    uncovered = [c for c in problem.cycles if not selected.intersection(c)]
    while uncovered:
        hits = {}
        for c in uncovered:
            for i in c:
                hits[i] = hits.get(i, 0) + 1
        cand = sorted(hits)
        score = np.array([hits[i] / w[i] for i in cand])
        pick = cand[int(rng.choice(len(cand), p=score / score.sum()))]
        selected.add(pick)
        uncovered = [c for c in uncovered if pick not in c]
    # drop arcs that became redundant, most expensive first
    for i in sorted(selected, key=lambda i: -w[i]):
        rest = selected - {i}
        if all(rest.intersection(c) for c in problem.cycles):
            selected = rest
    return selected


def randomized_greedy_ub(
    problem: RestrictedFasProblem,
    rng: Optional[np.random.Generator] = None,
    iterations: int = 200,
    removal_fraction: float = 0.3,
) -> FasSolution:
    """Randomized greedy cover, then ruin-and-recreate rounds on the incumbent.

    Arcs are drawn with probability proportional to uncovered cycles hit per
    unit weight.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    if not problem.cycles:
        return FasSolution(frozenset(), 0)
    best = _greedy_complete(problem, set(), rng)
    best_w = _cover_weight(problem, best)
    for _ in range(iterations - 1):
        keep = [i for i in sorted(best) if rng.random() >= removal_fraction]
        cand = _greedy_complete(problem, set(keep), rng)
        cw = _cover_weight(problem, cand)
        if cw < best_w:
            best, best_w = cand, cw
    return FasSolution(frozenset(best), best_w)


def branch_and_bound(
    problem: RestrictedFasProblem,
    initial: Optional[FasSolution] = None,
    budget: Optional[Budget] = None,
) -> FasSolution:
    """Minimum-weight cover of the problem's cycles.

    Depth-first over an explicit stack: pick the first uncovered cycle, try
    its arcs heaviest first; the k-th branch forbids the arcs tried before
    it.  A node is pruned when its weight plus the packing bound of the
    uncovered cycles reaches the incumbent.
    """
    if initial is None:
        initial = randomized_greedy_ub(problem)
    if not initial.covers(problem):
        raise ValueError("initial solution does not cover every cycle")
    cycles = problem.cycles
    w = problem.weights
    inf = float("inf")
    best_sel, best_w = frozenset(initial.selected), initial.weight
    order = [sorted(c, key=lambda i: (-w[i], c.index(i))) for c in cycles]

    stack = [(frozenset(), frozenset(), 0)]
    nodes = 0
    while stack:
        sel, forbidden, weight = stack.pop()
        nodes += 1
        if budget is not None and nodes % 256 == 0 and budget.expired():
            raise BudgetExceeded("branch and bound ran out of time")
        if weight >= best_w:
            continue
        open_idx = [k for k, c in enumerate(cycles) if sel.isdisjoint(c)]
        if not open_idx:
            best_sel, best_w = sel, weight
            continue
        residual = [inf if i in forbidden else w[i] for i in range(len(w))]
        if weight + _packing([cycles[k] for k in open_idx], residual) >= best_w:
            continue
        branch = [i for i in order[open_idx[0]] if i not in forbidden]
        children = []
        tried = set(forbidden)
        for i in branch:
            children.append((sel | {i}, frozenset(tried), weight + w[i]))
            tried.add(i)
        stack.extend(reversed(children))
    return FasSolution(best_sel, best_w, optimal=True)


class RestrictedMasterBackend(Protocol):
    name: str

    def solve(self, problem: RestrictedFasProblem, budget: Optional[Budget] = None) -> FasSolution:
        ...


class BranchAndBoundBackend:
    name = "branch_and_bound"

    def __init__(self, seed: int = 0, greedy_iterations: int = 200, removal_fraction: float = 0.3):
        self.seed = seed
        self.greedy_iterations = greedy_iterations
        self.removal_fraction = removal_fraction

    def solve(self, problem, budget=None) -> FasSolution:
        rng = np.random.default_rng(self.seed)
        ub = randomized_greedy_ub(problem, rng, self.greedy_iterations, self.removal_fraction)
        return branch_and_bound(problem, ub, budget)


class HighsBackend:
    """Cycle ILP solved by SciPy's HiGHS MILP interface (optional)."""

    name = "highs"

    def solve(self, problem, budget=None) -> FasSolution:
        from scipy.optimize import Bounds, LinearConstraint, milp

        model = build_cycle_ilp_model(problem)
        n = len(model.variables)
        if not model.constraints:
            return FasSolution(frozenset(), 0, optimal=True)
        col = {v: j for j, v in enumerate(model.variables)}
        a = np.zeros((len(model.constraints), n))
        for r, (coeffs, _, _) in enumerate(model.constraints):
            for v, x in coeffs.items():
                a[r, col[v]] = x
        cost = np.array([model.objective.get(v, 0) for v in model.variables], dtype=float)
        options = {}
        if budget is not None and budget.deadline is not None:
            options["time_limit"] = max(budget.remaining(), 1e-3)
        res = milp(
            cost,
            constraints=LinearConstraint(a, lb=1, ub=np.inf),
            integrality=np.ones(n),
            bounds=Bounds(0, 1),
            options=options,
        )
        if res.status != 0:
            raise BudgetExceeded(f"MILP backend did not finish: {res.message}")
        sel = frozenset(j for j in range(n) if res.x[j] > 0.5)
        return FasSolution(sel, _cover_weight(problem, sel), optimal=True)


# -- lazy cycle generation ---------------------------------------------------


def lazy_cycle_fas(
    pg: PenaltyGraph,
    heuristic_ordering: Sequence,
    backend: Optional[RestrictedMasterBackend] = None,
    budget: Optional[Budget] = None,
    stats: Optional[dict] = None,
) -> FasSolution:
    """Optimal feedback arc set of ``pg`` by lazily generating cycles.

    Cycles are collected through the arcs that contradict the heuristic
    ordering, the restricted problem is solved, and the loop repeats on the
    graph with the chosen arcs removed until the chosen weight matches the
    heuristic's cost or the remaining graph is acyclic.
    """
    backend = backend or BranchAndBoundBackend()
    contra, heuristic_cost = contradicting_arcs(pg, heuristic_ordering)
    problem = RestrictedFasProblem.from_graph(pg)
    chosen = frozenset()
    graph = pg
    rounds = 0
    while True:
        if budget is not None and budget.expired():
            raise BudgetExceeded("lazy cycle generation ran out of time")
        added = 0
        for arc in sorted(contra):
            if arc in chosen:
                continue
            cyc = shortest_cycle_through(graph, arc)
            if cyc is not None:
                added += problem.add_cycle(cyc)
        if not added:
            arc = _any_cycle_arc(graph)
            if arc is None:
                break
            added += problem.add_cycle(shortest_cycle_through(graph, arc))
            assert added, "cycle left in the residual graph was already known"
        rounds += 1
        sol = backend.solve(problem, budget)
        chosen = frozenset(problem.arcs[i] for i in sol.selected)
        graph = pg.without(chosen)
        if sol.weight == heuristic_cost:
            # the heuristic ordering is optimal; keep its arc set
            chosen = contra
            break
        if graph.is_acyclic():
            break
    if stats is not None:
        stats["rounds"] = rounds
        stats["cycles"] = len(problem.cycles)
        stats["heuristic_cost"] = heuristic_cost
    return FasSolution(chosen, sum(pg.weights[a] for a in chosen), optimal=True)


# -- ILP formulations -----------------------------------------------------------


def build_cycle_ilp_model(problem: RestrictedFasProblem) -> IlpModel:
    names = [f"y_{i}" for i in range(len(problem.arcs))]
    objective = {n: w for n, w in zip(names, problem.weights)}
    rows = [({names[i]: 1 for i in c}, ">=", 1) for c in problem.cycles]
    return IlpModel(names, objective, rows)


@dataclass
class LinearOrderingModel(IlpModel):
    """Ordering ILP; ``transitivity`` rows are kept apart for row generation."""

    vertices: tuple = ()
    transitivity: list = field(default_factory=list)

    def without_transitivity(self) -> IlpModel:
        return IlpModel(self.variables, self.objective, list(self.constraints))

    def full(self) -> IlpModel:
        return IlpModel(self.variables, self.objective, self.constraints + self.transitivity)

    def violated_transitivity(self, assignment: dict) -> list:
        """Triples (u, v, w) with m_uv + m_vw - m_uw > 1 under ``assignment``."""
        out = []
        for u, v, w in itertools.permutations(self.vertices, 3):
            if assignment[(u, v)] + assignment[(v, w)] - assignment[(u, w)] > 1:
                out.append((u, v, w))
        return out


def build_linear_ordering_model(matrix: CrossingMatrix) -> LinearOrderingModel:
    """One 0/1 variable per ordered pair; objective over penalty arcs."""
    vertices = tuple(matrix.label(i) for i in range(matrix.n))
    var = {(u, v): f"m_{u}_{v}" for u, v in itertools.permutations(vertices, 2)}
    c = matrix.c
    objective = {}
    for (u, v), name in var.items():
        # m_uv = 1 puts u first, paying the penalty arc (v, u) if it exists
        cu, cv = matrix.index(u), matrix.index(v)
        if c[cv, cu] < c[cu, cv]:
            objective[name] = int(c[cu, cv] - c[cv, cu])
    symmetry = [
        ({var[u, v]: 1, var[v, u]: 1}, "==", 1)
        for u, v in itertools.combinations(vertices, 2)
    ]
    trans = [
        ({var[u, v]: 1, var[v, w]: 1, var[u, w]: -1}, "<=", 1)
        for u, v, w in itertools.permutations(vertices, 3)
    ]
    return LinearOrderingModel(list(var.values()), objective, symmetry, vertices, trans)
