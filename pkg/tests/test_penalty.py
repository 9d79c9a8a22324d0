import itertools

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from ocm import BipartiteInstance, Solution, build_crossing_matrix, build_penalty_graph, merge_solutions
from ocm import split_by_intervals, split_by_scc
from ocm.crossings import subset_dp_optimum
from ocm.penalty import PenaltyGraph, scc_decomposition, topological_order
from oracles import random_digraph, random_instance


def test_penalty_graph_examples(e1, e2):
    g2 = build_penalty_graph(build_crossing_matrix(e2))
    assert g2.weights == {(10, 11): 1, (11, 12): 1, (12, 10): 3}
    assert not g2.is_acyclic()
    g1 = build_penalty_graph(build_crossing_matrix(e1))
    assert g1.weights == {(5, 4): 1, (6, 4): 3, (6, 5): 1}
    assert topological_order(g1) == [6, 5, 4]


def test_scc_examples(e1, e2):
    assert scc_decomposition(build_penalty_graph(build_crossing_matrix(e2))) == [[10, 11, 12]]
    assert scc_decomposition(build_penalty_graph(build_crossing_matrix(e1))) == [[6], [5], [4]]


def test_scc_split_examples(e1, e2):
    plan = split_by_scc(e1)
    assert [p.free_map for p in plan.parts] == [(6,), (5,), (4,)]
    sols = [Solution(tuple(p.instance.free_labels)) for p in plan.parts]
    merged = merge_solutions(plan, sols)
    assert merged.ordering == (6, 5, 4) and merged.crossings == 0

    plan = split_by_scc(e2)
    assert len(plan.parts) == 1 and plan.parts[0].free_map == (10, 11, 12)
    assert plan.parts[0].instance == e2


def test_interval_split_examples(e2, e3):
    plan = split_by_intervals(e3)
    assert [p.free_map for p in plan.parts] == [(5, 7, 9), (6, 8, 10)]
    sub = [Solution(tuple(p.instance.free_labels)) for p in plan.parts]
    merged = merge_solutions(plan, sub)
    assert merged.ordering == (5, 7, 9, 6, 8, 10) and merged.crossings == 6
    assert [p.free_map for p in split_by_intervals(e2).parts] == [(10, 11, 12)]


def test_interval_endpoints_are_inclusive():
    inst = BipartiteInstance.from_edges(3, 2, [(1, 4), (2, 4), (2, 5), (3, 5)])
    assert len(split_by_intervals(inst).parts) == 1
    inst = BipartiteInstance.from_edges(4, 3, [(1, 5), (2, 5), (3, 6), (4, 6)])
    plan = split_by_intervals(inst)
    assert [p.free_map for p in plan.parts] == [(5,), (6,)]
    assert plan.isolated == (7,)


def test_merge_rejects_mismatch(e3):
    plan = split_by_intervals(e3)
    with pytest.raises(ValueError):
        merge_solutions(plan, [Solution((5, 7, 9))])
    with pytest.raises(ValueError):
        merge_solutions(plan, [Solution((5, 7)), Solution((6, 8, 10))])


@settings(max_examples=80, deadline=None)
@given(st.randoms(use_true_random=False))
def test_scc_matches_networkx(r):
    vertices, weights = random_digraph(r, max_vertices=9, density=0.3)
    pg = PenaltyGraph(vertices, weights)
    comps = scc_decomposition(pg)
    g = nx.DiGraph()
    g.add_nodes_from(vertices)
    g.add_edges_from(weights)
    assert sorted(map(sorted, comps)) == sorted(sorted(c) for c in nx.strongly_connected_components(g))
    # consecutive components: no arc points from a later one to an earlier one
    where = {v: k for k, c in enumerate(comps) for v in c}
    assert all(where[u] <= where[v] for u, v in weights)


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_splits_preserve_optimum(r):
    inst = random_instance(r, 7, 7)
    opt = subset_dp_optimum(build_crossing_matrix(inst))
    for plan in (split_by_scc(inst), split_by_intervals(inst)):
        covered = sorted(v for p in plan.parts for v in p.free_map) + list(plan.isolated)
        assert sorted(covered) == list(inst.free_labels)
        sols = []
        for part in plan.parts:
            m = build_crossing_matrix(part.instance)
            best = min(
                itertools.permutations(part.instance.free_labels),
                key=lambda o: sum(m.pair(a, b) for i, a in enumerate(o) for b in o[i + 1:]),
            )
            sols.append(Solution(best))
        assert merge_solutions(plan, sols).crossings == opt

