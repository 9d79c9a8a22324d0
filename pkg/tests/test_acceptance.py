"""End-to-end acceptance checks, one test per criterion.

Random families use fixed seeds so every run sees the same cases.
"""

import random
import subprocess
import sys
import time

import numpy as np

from ocm import (
    BipartiteInstance,
    Budget,
    Solution,
    SolverConfig,
    build_crossing_matrix,
    build_penalty_graph,
    count_crossings_fast,
    count_crossings_naive,
    crossing_number_pair,
    exact_solve,
    local_search,
    reduce_pipeline,
    trivial_lower_bound,
    verify_solution,
)
from ocm.fas import (
    BranchAndBoundBackend,
    RestrictedFasProblem,
    branch_and_bound,
    lazy_cycle_fas,
    packing_lower_bound,
    randomized_greedy_ub,
    shortest_cycle_through,
)
from ocm.heuristic import HeuristicParams, OrderState, sift_vertex
from ocm.instance import write_instance
from ocm.penalty import PenaltyGraph
from ocm.reductions import PartialOrder, transitive_close
from oracles import (
    brute_force_cover,
    brute_force_optimum,
    fas_by_orderings,
    floyd_warshall_closure,
    is_acyclic,
    random_digraph,
    random_instance,
    subset_optimum,
)

FAMILY_SIZE = 500


def family(seed=2024, count=FAMILY_SIZE):
    rng = random.Random(seed)
    return [random_instance(rng, 8, 8) for _ in range(count)]


def cyclic_family(seed=99, count=150):
    """Instances with n_free <= 8 whose penalty graph has a cycle."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n_fixed, n_free = rng.randint(15, 40), rng.randint(4, 8)
        p = rng.choice([0.15, 0.3, 0.5])
        edges = [
            (a, n_fixed + b)
            for a in range(1, n_fixed + 1)
            for b in range(1, n_free + 1)
            if rng.random() < p
        ]
        inst = BipartiteInstance.from_edges(n_fixed, n_free, edges)
        if not build_penalty_graph(build_crossing_matrix(inst)).is_acyclic():
            out.append(inst)
    return out


_OPTIMA = {}
_CYCLIC = []


def cyclic_optima():
    if not _CYCLIC:
        _CYCLIC.extend((inst, subset_optimum(inst)) for inst in cyclic_family())
    return _CYCLIC


def optima():
    if not _OPTIMA:
        for k, inst in enumerate(family()):
            _OPTIMA[k] = subset_optimum(inst)
    return [(inst, _OPTIMA[k]) for k, inst in enumerate(family())]


def test_criterion_1_reference_values(record_property, e1, e2):
    assert verify_solution(e1, Solution((4, 5, 6))) == 5
    assert verify_solution(e1, Solution((6, 5, 4))) == 0
    table = {(10, 11): 1, (11, 10): 2, (10, 12): 9, (12, 10): 6, (11, 12): 2, (12, 11): 3}
    assert {p: crossing_number_pair(e2, *p) for p in table} == table
    assert build_penalty_graph(build_crossing_matrix(e2)).weights == {
        (10, 11): 1,
        (11, 12): 1,
        (12, 10): 3,
    }
    record_property("detail", "E1 counts 5/0, E2 table and penalty arcs exact")


def test_criterion_2_exact_matches_enumeration(record_property):
    # the subset DP oracle must agree with plain permutation enumeration
    for inst in family(seed=7, count=40):
        if inst.n_free <= 6:
            assert subset_optimum(inst) == brute_force_optimum(inst)[0]
    wrong = 0
    elapsed = 0.0
    cases = optima()
    for inst, opt in cases:
        t0 = time.perf_counter()
        sol = exact_solve(inst)
        elapsed += time.perf_counter() - t0
        wrong += sol.crossings != opt or count_crossings_naive(inst, sol.ordering) != opt
    hard_wrong = 0
    hard = cyclic_optima()
    for inst, opt in hard:
        sol = exact_solve(inst)
        hard_wrong += sol.crossings != opt or count_crossings_naive(inst, sol.ordering) != opt
    record_property(
        "detail",
        f"{len(cases) - wrong}/{len(cases)} optimal in {elapsed:.1f}s; "
        f"cyclic-penalty family {len(hard) - hard_wrong}/{len(hard)}",
    )
    assert wrong == 0 and hard_wrong == 0
    assert elapsed < 60


def test_criterion_3_fas_matches_brute_force(record_property):
    rng = random.Random(3)
    wrong = 0
    total = 500
    for k in range(total):
        vertices, weights = random_digraph(rng, 6, density=rng.choice([0.3, 0.5, 0.8]))
        g = PenaltyGraph(vertices, weights)
        guess = list(vertices)
        rng.shuffle(guess)
        sol = lazy_cycle_fas(g, guess, BranchAndBoundBackend(seed=k))
        acyclic = is_acyclic(vertices, [a for a in weights if a not in sol.selected])
        wrong += not acyclic or sol.weight != fas_by_orderings(vertices, weights)
    record_property("detail", f"{total - wrong}/{total} digraphs at the minimum weight")
    assert wrong == 0


def test_criterion_4_reductions_and_splits_are_sound(record_property, e1):
    off = SolverConfig(use_interval_split=False, use_scc_split=False, use_reductions=False)
    mismatches = 0
    cases = optima() + cyclic_optima()
    for inst, opt in cases:
        on = exact_solve(inst).crossings
        bare = exact_solve(inst, config=off).crossings
        mismatches += not (on == bare == opt)
    out = reduce_pipeline(e1)
    assert out.reduced.n_free == 0 and out.reconstruct([]) == [6, 5, 4]
    record_property(
        "detail",
        f"{len(cases) - mismatches}/{len(cases)} equal with and without (cyclic family included); "
        "E1 reduced to 0 free",
    )
    assert mismatches == 0


def test_criterion_5_fast_paths(record_property):
    rng = random.Random(5)
    checked = 0
    for _ in range(1000):
        n_fixed = rng.randint(1, 200)
        n_free = rng.randint(1, 200)
        m = rng.randint(0, min(2000, n_fixed * n_free))
        cells = rng.sample(range(n_fixed * n_free), m)
        edges = [(c // n_free + 1, n_fixed + c % n_free + 1) for c in cells]
        inst = BipartiteInstance.from_edges(n_fixed, n_free, edges)
        order = list(inst.free_labels)
        rng.shuffle(order)
        assert count_crossings_fast(inst, order) == count_crossings_naive(inst, order)
        checked += 1
    dags = 0
    for _ in range(120):
        n = rng.randint(1, 64)
        perm = list(range(n))
        rng.shuffle(perm)
        density = rng.choice([0.02, 0.05, 0.15])
        pairs = [(perm[i], perm[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
        closed = transitive_close(PartialOrder.from_pairs(n, pairs))
        assert set(closed.pairs()) == floyd_warshall_closure(n, pairs)
        dags += 1
    record_property("detail", f"{checked} counts equal; {dags} closures equal")


def test_criterion_6_bounds(record_property, e2):
    for inst, opt in optima():
        assert trivial_lower_bound(build_crossing_matrix(inst)) <= opt
    rng = random.Random(6)
    for k in range(300):
        n = rng.randint(1, 8)
        weights = [rng.randint(1, 9) for _ in range(n)]
        cycles = [tuple(rng.sample(range(n), rng.randint(1, min(n, 4)))) for _ in range(rng.randint(0, 6))]
        p = RestrictedFasProblem(list(range(n)), weights, cycles)
        opt = brute_force_cover(weights, p.cycles)
        assert packing_lower_bound(p) <= opt
        ub = randomized_greedy_ub(p, np.random.default_rng(k), 20)
        assert ub.covers(p) and ub.weight >= opt
    m = build_crossing_matrix(e2)
    g = build_penalty_graph(m)
    problem = RestrictedFasProblem.from_graph(g)
    problem.add_cycle(shortest_cycle_through(g, (10, 11)))
    assert trivial_lower_bound(m) == 9
    assert exact_solve(e2).crossings == 10
    assert branch_and_bound(problem).weight == 1
    record_property("detail", "all bounds hold; E2 lower bound 9, optimum 10, arc set weight 1")


def test_criterion_7_heuristic_quality(record_property):
    hits = worse = 0
    cases = optima() + cyclic_optima()
    for k, (inst, opt) in enumerate(cases):
        m = build_crossing_matrix(inst)
        sol = local_search(inst, m, HeuristicParams(seed=k), budget=Budget(iterations=10_000), lower_bound=opt)
        assert sol.crossings >= opt
        hits += sol.crossings == opt
        worse += sol.crossings > 3 * opt
    # sifting never increases the count
    rng = random.Random(7)
    for inst, _ in cases[::5]:
        m = build_crossing_matrix(inst)
        order = list(range(inst.n_free))
        rng.shuffle(order)
        s = OrderState.from_order(m, order)
        for _ in range(2 * inst.n_free):
            before = s.count
            assert sift_vertex(s, m, rng.randrange(inst.n_free)) <= 0 and s.count <= before
    rate = hits / len(cases)
    record_property("detail", f"optimum on {hits}/{len(cases)} ({rate:.1%}, cyclic family included), over 3x optimum on {worse}")
    assert rate >= 0.95 and worse == 0


def test_criterion_8_determinism(record_property, tmp_path):
    rng = random.Random(8)
    identical = 0
    for k in range(3):
        inst = random_instance(rng, 30, 60)
        path = tmp_path / f"i{k}.gr"
        path.write_text(write_instance(inst))
        outs = []
        for run in range(2):
            out = tmp_path / f"i{k}.{run}.sol"
            subprocess.run(
                [sys.executable, "-m", "ocm.cli", "solve", str(path),
                 "--seed", "11", "--iterations", "25", "-o", str(out)],
                check=True,
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        identical += 1
    record_property("detail", f"{identical}/3 instance pairs byte-identical")
