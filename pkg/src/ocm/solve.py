"""End-to-end drivers for the heuristic, exact and parameterized tracks."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .budget import Budget, BudgetExceeded
from .crossings import (
    CrossingMatrix,
    CrossingsBudget,
    InstanceTooLarge,
    build_crossing_matrix,
    count_crossings_fast,
    ordering_cost,
    trivial_lower_bound,
)
from .fas import (
    BranchAndBoundBackend,
    HighsBackend,
    contradicting_arcs,
    fas_to_ordering,
    lazy_cycle_fas,
)
from .heuristic import HeuristicParams, large_graph_heuristic, local_search
from .instance import BipartiteInstance, Solution
from .penalty import PenaltyGraph, SplitPart, build_penalty_graph, split_by_intervals, split_by_scc
from .reductions import reduce_pipeline

__all__ = [
    "SolverConfig",
    "RunStats",
    "IncompleteSolve",
    "exact_solve",
    "parameterized_solve",
    "heuristic_solve",
    "constrain_penalty_graph",
]


class IncompleteSolve(Exception):
    """The exact pipeline could not prove optimality within its budget."""


@dataclass(frozen=True)
class SolverConfig:
    params: HeuristicParams = field(default_factory=HeuristicParams)
    large_threshold: int = 10_000
    use_interval_split: bool = True
    use_scc_split: bool = True
    use_reductions: bool = True
    # heuristic run ahead of the exact solver: share of the budget, seconds cap, restart cap
    heuristic_fraction: float = 0.2
    heuristic_cap: float = 60.0
    heuristic_iterations: Optional[int] = 32
    backend: str = "bnb"
    bnb_fas_threshold: int = 10
    greedy_iterations: int = 200
    greedy_removal_fraction: float = 0.3


@dataclass
class RunStats:
    instance: str = ""
    mode: str = ""
    status: str = "ok"
    n_fixed: int = 0
    n_free: int = 0
    n_edges: int = 0
    components: int = 0
    largest_component: int = 0
    isolated: int = 0
    removed_by_reduction: int = 0
    remaining_free: int = 0
    crossings: Optional[int] = None
    fas_weight: Optional[int] = None
    lower_bound: Optional[int] = None
    upper_bound: Optional[int] = None
    backends: str = ""
    t_split: float = 0.0
    t_reduce: float = 0.0
    t_heuristic: float = 0.0
    t_exact: float = 0.0
    t_total: float = 0.0

    @classmethod
    def columns(cls) -> list:
        return [f.name for f in fields(cls)]

    def row(self) -> dict:
        return asdict(self)


@contextmanager
def _timed(stats: RunStats, attr: str):
    t0 = time.perf_counter()
    try:
        yield
    finally:
        setattr(stats, attr, getattr(stats, attr) + time.perf_counter() - t0)


def _components(inst: BipartiteInstance, cfg: SolverConfig, stats: RunStats) -> tuple:
    """Final parts (free labels mapped to ``inst``) and the isolated vertices."""
    budget = CrossingsBudget(cfg.large_threshold)
    if cfg.use_interval_split:
        plan = split_by_intervals(inst)
        blocks, isolated = list(plan.parts), list(plan.isolated)
    else:
        blocks, isolated = [SplitPart(inst, tuple(inst.free_labels))], []
    parts = []
    for block in blocks:
        if cfg.use_scc_split and budget.fits(block.instance) and block.instance.n_free > 1:
            sub = split_by_scc(block.instance, budget=budget)
            isolated.extend(block.free_map[block.instance.index(v)] for v in sub.isolated)
            for p in sub.parts:
                outer = tuple(block.free_map[block.instance.index(v)] for v in p.free_map)
                parts.append(SplitPart(p.instance, outer))
        else:
            parts.append(block)
    stats.components = len(parts)
    stats.largest_component = max((p.instance.n_free for p in parts), default=0)
    stats.isolated = len(isolated)
    return parts, sorted(isolated)


def constrain_penalty_graph(pg: PenaltyGraph, pairs) -> tuple:
    """Penalty graph forcing every committed pair "a before b".

    The arc ``(b, a)`` is deleted (its weight is a fixed cost) and ``(a, b)``
    gets a weight above the total of all others so no optimal arc set
    removes it.  Returns ``(graph, fixed_cost)``.
    """
    if not pairs:
        return pg, 0
    weights = dict(pg.weights)
    big = sum(weights.values()) + 1
    fixed = 0
    for a, b in pairs:
        fixed += weights.pop((b, a), 0)
        weights[(a, b)] = big
    return PenaltyGraph(pg.vertices, weights), fixed


def _constrained_lower_bound(matrix: CrossingMatrix, pairs, inst: BipartiteInstance) -> int:
    lb = trivial_lower_bound(matrix)
    c = matrix.c
    for a, b in pairs:
        i, j = inst.index(a), inst.index(b)
        lb += int(c[i, j] - min(c[i, j], c[j, i]))
    return lb


def _backend(name: str, cfg: SolverConfig, seed: int):
    if name == "bnb":
        return BranchAndBoundBackend(seed, cfg.greedy_iterations, cfg.greedy_removal_fraction)
    if name == "highs":
        return HighsBackend()
    raise ValueError(f"unknown backend {name!r}")


def _exact_component(
    part: SplitPart,
    budget: Budget,
    cfg: SolverConfig,
    stats: RunStats,
    parameterized: bool,
    used_backends: set,
) -> list:
    inst = part.instance
    if inst.n_free == 1:
        return list(inst.free_labels)
    try:
        matrix = build_crossing_matrix(inst, CrossingsBudget(cfg.large_threshold))
    except InstanceTooLarge as exc:
        raise IncompleteSolve(str(exc)) from exc
    params = cfg.params
    lb = trivial_lower_bound(matrix)

    with _timed(stats, "t_heuristic"):
        hb = budget.slice(cfg.heuristic_fraction, cfg.heuristic_cap, cfg.heuristic_iterations)
        upper = local_search(inst, matrix, params, (), hb, lower_bound=lb)

    target, tmatrix, pairs, outcome = inst, matrix, [], None
    if cfg.use_reductions:
        with _timed(stats, "t_reduce"):
            outcome = reduce_pipeline(inst, upper, matrix)
        stats.removed_by_reduction += outcome.removed
        target, pairs = outcome.reduced, outcome.committed
        if target.n_free == 0:
            stats.remaining_free += 0
            return outcome.reconstruct([])
        tmatrix = build_crossing_matrix(target, CrossingsBudget(cfg.large_threshold))
    stats.remaining_free += target.n_free

    with _timed(stats, "t_heuristic"):
        if outcome is None:
            guide = upper
        else:
            hb = budget.slice(cfg.heuristic_fraction, cfg.heuristic_cap, cfg.heuristic_iterations)
            guide = local_search(
                target, tmatrix, params, pairs, hb,
                lower_bound=_constrained_lower_bound(tmatrix, pairs, target),
            )

    with _timed(stats, "t_exact"):
        pg, fixed = constrain_penalty_graph(build_penalty_graph(tmatrix), pairs)
        name = cfg.backend
        if parameterized:
            _, heuristic_fas = contradicting_arcs(pg, guide.ordering)
            if heuristic_fas < cfg.bnb_fas_threshold:
                name = "bnb"
        used_backends.add(name)
        fas = lazy_cycle_fas(pg, guide.ordering, _backend(name, cfg, params.seed), budget)
        order = fas_to_ordering(pg, fas.selected)
    cost = ordering_cost(tmatrix, [target.index(v) for v in order])
    if cost != trivial_lower_bound(tmatrix) + fixed + fas.weight:
        raise AssertionError("ordering cost disagrees with lower bound plus arc set weight")
    return outcome.reconstruct(order) if outcome is not None else order


def _run_exact(inst, budget, cfg, stats, parameterized) -> Solution:
    budget = budget or Budget()
    cfg = cfg or SolverConfig()
    stats = stats if stats is not None else RunStats()
    t0 = time.perf_counter()
    stats.mode = "parameterized" if parameterized else "exact"
    stats.n_fixed, stats.n_free, stats.n_edges = inst.n_fixed, inst.n_free, inst.n_edges
    with _timed(stats, "t_split"):
        parts, isolated = _components(inst, cfg, stats)
    order = []
    used = set()
    fas_total = 0
    try:
        for part in parts:
            sub = _exact_component(part, budget, cfg, stats, parameterized, used)
            order.extend(part.to_original(sub))
            if part.instance.n_free > 1:
                m = build_crossing_matrix(part.instance, CrossingsBudget(cfg.large_threshold))
                _, w = contradicting_arcs(build_penalty_graph(m), sub)
                fas_total += w
    except BudgetExceeded as exc:
        stats.status = "incomplete"
        raise IncompleteSolve(str(exc)) from exc
    except IncompleteSolve:
        stats.status = "incomplete"
        raise
    order.extend(isolated)
    count = count_crossings_fast(inst, order)
    if CrossingsBudget(cfg.large_threshold).fits(inst):
        lb = trivial_lower_bound(build_crossing_matrix(inst))
        if count != lb + fas_total:
            raise AssertionError("final crossings differ from lower bound plus arc set weight")
        stats.lower_bound = lb
    stats.crossings = stats.upper_bound = count
    stats.fas_weight = fas_total
    stats.backends = "+".join(sorted(used))
    stats.t_total = time.perf_counter() - t0
    return Solution(tuple(order), count)


def exact_solve(
    inst: BipartiteInstance,
    budget: Optional[Budget] = None,
    config: Optional[SolverConfig] = None,
    stats: Optional[RunStats] = None,
) -> Solution:
    """Provably optimal ordering, or :class:`IncompleteSolve` when out of budget."""
    return _run_exact(inst, budget, config, stats, parameterized=False)


def parameterized_solve(
    inst: BipartiteInstance,
    budget: Optional[Budget] = None,
    config: Optional[SolverConfig] = None,
    stats: Optional[RunStats] = None,
) -> Solution:
    """Exact pipeline that always uses branch and bound on cheap components.

    Any numbering attached to the instance is ignored.
    """
    return _run_exact(inst, budget, config, stats, parameterized=True)


def heuristic_solve(
    inst: BipartiteInstance,
    budget: Optional[Budget] = None,
    config: Optional[SolverConfig] = None,
    stats: Optional[RunStats] = None,
) -> Solution:
    """Best ordering found within the budget; always a valid permutation."""
    budget = budget or Budget(iterations=0)
    cfg = config or SolverConfig()
    stats = stats if stats is not None else RunStats()
    t0 = time.perf_counter()
    stats.mode = "heuristic"
    stats.n_fixed, stats.n_free, stats.n_edges = inst.n_fixed, inst.n_free, inst.n_edges
    with _timed(stats, "t_split"):
        parts, isolated = _components(inst, cfg, stats)
    fits = CrossingsBudget(cfg.large_threshold)
    params = cfg.params
    left = sum(p.instance.n_free for p in parts)
    order = []
    for part in parts:
        sub = part.instance
        share = budget.slice(sub.n_free / left if left else 1.0)
        left -= sub.n_free
        if sub.n_free == 1:
            order.extend(part.free_map)
            continue
        if not fits.fits(sub):
            with _timed(stats, "t_heuristic"):
                sol = large_graph_heuristic(sub, params, share)
            order.extend(part.to_original(sol.ordering))
            stats.remaining_free += sub.n_free
            continue
        matrix = build_crossing_matrix(sub, fits)
        target, tmatrix, pairs, outcome = sub, matrix, [], None
        if cfg.use_reductions:
            with _timed(stats, "t_heuristic"):
                seed = local_search(sub, matrix, params, (), Budget(iterations=0))
            with _timed(stats, "t_reduce"):
                outcome = reduce_pipeline(sub, seed, matrix)
            stats.removed_by_reduction += outcome.removed
            target, pairs = outcome.reduced, outcome.committed
            tmatrix = build_crossing_matrix(target, fits) if target.n_free else None
        stats.remaining_free += target.n_free
        with _timed(stats, "t_heuristic"):
            if target.n_free:
                lb = _constrained_lower_bound(tmatrix, pairs, target)
                sol = local_search(target, tmatrix, params, pairs, share, lower_bound=lb)
                sub_order = list(sol.ordering)
            else:
                sub_order = []
        if outcome is not None:
            sub_order = outcome.reconstruct(sub_order)
        order.extend(part.to_original(sub_order))
    order.extend(isolated)
    count = count_crossings_fast(inst, order)
    stats.crossings = stats.upper_bound = count
    if fits.fits(inst):
        stats.lower_bound = trivial_lower_bound(build_crossing_matrix(inst))
    stats.t_total = time.perf_counter() - t0
    return Solution(tuple(order), count)
