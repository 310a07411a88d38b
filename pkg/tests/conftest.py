import math
import random

import pytest

from tropmc.graphs import Graph, MetricAssignment, bridges, is_connected


def random_connected_multigraph(rng: random.Random, nv: int, ne: int,
                                legs: int = 0, self_loops: bool = True) -> Graph:
    """Connected multigraph on nv vertices with ne edges: a random spanning
    tree plus random extra edges (parallel edges allowed)."""
    assert ne >= nv - 1
    edges = []
    for v in range(1, nv):
        edges.append((rng.randrange(v), v))
    while len(edges) < ne:
        u = rng.randrange(nv)
        v = rng.randrange(nv)
        if u == v and not self_loops:
            continue
        edges.append((min(u, v), max(u, v)))
    leg_list = tuple(rng.randrange(nv) for _ in range(legs))
    g = Graph(nv, tuple(edges), leg_list)
    assert is_connected(g)
    return g


def random_bridgeless_multigraph(rng: random.Random, nv: int, ne: int, legs: int = 0) -> Graph:
    """Rejection-sample a connected bridgeless (1PI) multigraph."""
    for _ in range(2000):
        g = random_connected_multigraph(rng, nv, ne, legs=legs, self_loops=False)
        if not bridges(g):
            return g
    raise AssertionError("could not find a bridgeless graph at this size")


def random_coords(rng: random.Random, n: int) -> MetricAssignment:
    return MetricAssignment(tuple(1.0 - rng.random() for _ in range(n)))


def brute_force_log_u_tropical(g: Graph, m: MetricAssignment) -> float:
    """max over spanning trees of the complement product, by enumeration."""
    from tropmc.graphs import spanning_trees

    best = -math.inf
    for tree in spanning_trees(g):
        tset = set(tree)
        val = 0.0
        for i, c in enumerate(m.coords):
            if i not in tset:
                val += math.log(c)
        best = max(best, val)
    return best


def brute_force_log_u_exact(g: Graph, m: MetricAssignment) -> float:
    from tropmc.graphs import spanning_trees

    total = 0.0
    for tree in spanning_trees(g):
        tset = set(tree)
        prod = 1.0
        for i, c in enumerate(m.coords):
            if i not in tset:
                prod *= c
        total += prod
    return math.log(total)


@pytest.fixture
def rng():
    return random.Random(20240817)
