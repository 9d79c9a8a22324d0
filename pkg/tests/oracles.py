"""Independent reference implementations used only by the tests."""

import itertools
import random

from ocm.instance import BipartiteInstance


def naive_crossings(edges, ordering):
    """Pure-Python pair test over edges given as (fixed, free) label pairs."""
    pos = {v: i for i, v in enumerate(ordering)}
    total = 0
    for (a, b), (x, y) in itertools.combinations(edges, 2):
        if (a < x and pos[b] > pos[y]) or (a > x and pos[b] < pos[y]):
            total += 1
    return total


def brute_force_optimum(inst):
    """Minimum crossings and the set of optimal orderings, by enumeration."""
    edges = inst.edges()
    best, arg = None, []
    for perm in itertools.permutations(inst.free_labels):
        c = naive_crossings(edges, perm)
        if best is None or c < best:
            best, arg = c, [perm]
        elif c == best:
            arg.append(perm)
    return best, arg


def pair_oracle(inst, u, v):
    """c_uv by enumerating N(u) x N(v)."""
    return sum(1 for y in inst.neighbors(u) for x in inst.neighbors(v) if x < y)


def floyd_warshall_closure(n, pairs):
    reach = [[False] * n for _ in range(n)]
    for a, b in pairs:
        reach[a][b] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j]:
                        reach[i][j] = True
    return {(i, j) for i in range(n) for j in range(n) if reach[i][j]}


def is_acyclic(vertices, arcs):
    succ = {v: [] for v in vertices}
    indeg = {v: 0 for v in vertices}
    for u, v in arcs:
        succ[u].append(v)
        indeg[v] += 1
    ready = [v for v in vertices if indeg[v] == 0]
    seen = 0
    while ready:
        u = ready.pop()
        seen += 1
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    return seen == len(vertices)


def brute_force_fas(vertices, weights):
    """Minimum weight of an arc subset whose removal leaves a DAG."""
    arcs = sorted(weights)
    best = sum(weights.values())
    for r in range(len(arcs) + 1):
        for sub in itertools.combinations(arcs, r):
            w = sum(weights[a] for a in sub)
            if w < best and is_acyclic(vertices, [a for a in arcs if a not in sub]):
                best = w
    return best


def fas_by_orderings(vertices, weights):
    """Minimum FAS weight as the cheapest set of backward arcs over all vertex orders."""
    best = sum(weights.values())
    for perm in itertools.permutations(vertices):
        pos = {v: i for i, v in enumerate(perm)}
        best = min(best, sum(w for (u, v), w in weights.items() if pos[u] > pos[v]))
    return best


def brute_force_cover(weights, cycles):
    """Minimum-weight arc-id subset hitting every cycle."""
    n = len(weights)
    best = None
    for mask in range(1 << n):
        if all(any(mask >> i & 1 for i in c) for c in cycles):
            w = sum(weights[i] for i in range(n) if mask >> i & 1)
            if best is None or w < best:
                best = w
    return best


def random_instance(rng: random.Random, max_fixed=8, max_free=8, probs=(0.2, 0.5, 0.8)):
    n_fixed = rng.randint(1, max_fixed)
    n_free = rng.randint(1, max_free)
    p = rng.choice(probs)
    edges = [
        (a, n_fixed + b)
        for a in range(1, n_fixed + 1)
        for b in range(1, n_free + 1)
        if rng.random() < p
    ]
    return BipartiteInstance.from_edges(n_fixed, n_free, edges)


def random_digraph(rng: random.Random, max_vertices=6, density=0.5, max_weight=9):
    n = rng.randint(1, max_vertices)
    vertices = list(range(n))
    weights = {}
    for u, v in itertools.permutations(vertices, 2):
        if rng.random() < density:
            weights[(u, v)] = rng.randint(1, max_weight)
    return vertices, weights


def subset_optimum(inst):
    """Exact minimum crossings by DP over subsets, with c_uv from pair_oracle."""
    free = list(inst.free_labels)
    n = len(free)
    c = [[pair_oracle(inst, u, v) if u != v else 0 for v in free] for u in free]
    best = [0] * (1 << n)
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if mask >> i & 1]
        best[mask] = min(
            best[mask ^ (1 << v)] + sum(c[u][v] for u in members if u != v) for v in members
        )
    return best[(1 << n) - 1]
