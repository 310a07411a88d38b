"""Labelled multigraphs with external legs and the surgeries the samplers need.

A graph is a number of vertices, an edge list of unordered vertex pairs
(parallel edges and self-loops allowed), and a list of legs.  Legs are
external attachment points; the position in the leg list is the leg label
(1-based).  A graph may carry an ordered pair of special leg labels, which
marks it as playing the beaded role.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass


class GraphError(ValueError):
    """Contract violation on a graph operation."""


class DisconnectedGraphError(GraphError):
    """Operation requires a connected graph (no spanning tree exists)."""


@dataclass(frozen=True)
class Graph:
    vertex_count: int
    edges: tuple[tuple[int, int], ...] = ()
    legs: tuple[int, ...] = ()
    special_legs: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        object.__setattr__(self, "legs", tuple(int(v) for v in self.legs))
        n = self.vertex_count
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) out of range for {n} vertices")
        for v in self.legs:
            if not (0 <= v < n):
                raise GraphError(f"leg vertex {v} out of range for {n} vertices")
        if self.special_legs is not None:
            i, j = self.special_legs
            if i == j or not (1 <= i <= len(self.legs)) or not (1 <= j <= len(self.legs)):
                raise GraphError(f"special legs {self.special_legs} invalid")
            object.__setattr__(self, "special_legs", (int(i), int(j)))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def leg_count(self) -> int:
        return len(self.legs)

    def leg_vertex(self, label: int) -> int:
        """Vertex that leg `label` (1-based) attaches to."""
        return self.legs[label - 1]

    def degrees(self) -> list[int]:
        """Per-vertex degree counting edge ends (self-loops twice) and legs."""
        deg = [0] * self.vertex_count
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        for v in self.legs:
            deg[v] += 1
        return deg


@dataclass(frozen=True)
class MetricAssignment:
    """Cubical edge coordinates in (0, 1], aligned with Graph.edges order."""

    coords: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        for c in self.coords:
            if not (0.0 < c <= 1.0):
                raise GraphError(f"coordinate {c} outside (0, 1]")

    def __len__(self) -> int:
        return len(self.coords)


def is_k_regular(g: Graph, k: int) -> bool:
    return all(d == k for d in g.degrees())


def connected_component_count(g: Graph) -> int:
    parent = list(range(g.vertex_count))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    n = g.vertex_count
    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            n -= 1
    return n


def is_connected(g: Graph) -> bool:
    return g.vertex_count <= 1 or connected_component_count(g) == 1


def loop_number(g: Graph) -> int:
    """First Betti number |E| - |V| + (number of connected components)."""
    return g.edge_count - g.vertex_count + connected_component_count(g)


def bridges(g: Graph) -> list[int]:
    """Indices of internal edges whose deletion disconnects the graph.

    Iterative lowpoint traversal; parallel edges and self-loops are never
    bridges.  Legs are not edges and play no role here.
    """
    n = g.vertex_count
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i, (u, v) in enumerate(g.edges):
        if u == v:
            continue
        adj[u].append((v, i))
        adj[v].append((u, i))

    disc = [-1] * n
    low = [0] * n
    out: list[int] = []
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        # stack entries: (vertex, incoming edge index, iterator position)
        stack = [(root, -1, 0)]
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            v, in_edge, ptr = stack[-1]
            if ptr < len(adj[v]):
                stack[-1] = (v, in_edge, ptr + 1)
                w, ei = adj[v][ptr]
                if ei == in_edge:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, ei, 0))
                else:
                    low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[v])
                    if low[v] > disc[p]:
                        out.append(in_edge)
    out.sort()
    return out


def is_one_particle_irreducible(g: Graph) -> bool:
    """Connected and bridgeless.  A single vertex with legs qualifies."""
    return is_connected(g) and not bridges(g)


def is_beaded(g: Graph) -> bool:
    """Connected, two special legs, and every bridge separates them."""
    if g.special_legs is None or not is_connected(g):
        return False
    i, j = g.special_legs
    vi, vj = g.leg_vertex(i), g.leg_vertex(j)
    for b in bridges(g):
        rest = [e for idx, e in enumerate(g.edges) if idx != b]
        cut = Graph(g.vertex_count, rest)
        if _same_component(cut, vi, vj):
            return False
    return True


def _same_component(g: Graph, a: int, b: int) -> bool:
    parent = list(range(g.vertex_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return find(a) == find(b)


def glue_special_legs(g: Graph) -> Graph:
    """Join the two special legs into a new internal edge.

    The new edge is appended last in edge order, the two special legs are
    removed, and the remaining legs are relabelled preserving their order.
    """
    if g.special_legs is None:
        raise GraphError("glue_special_legs requires a special-leg pair")
    i, j = g.special_legs
    u, v = g.leg_vertex(i), g.leg_vertex(j)
    legs = tuple(w for lbl, w in enumerate(g.legs, start=1) if lbl not in (i, j))
    return Graph(g.vertex_count, g.edges + ((u, v),), legs, None)


def concatenate_beaded(a: Graph, b: Graph, leg_assignment) -> Graph:
    """Bridge a 1PI graph onto the front of a beaded graph.

    `a`'s second leg is joined to `b`'s first special leg by a new edge,
    `a`'s first leg becomes the first special leg of the result, and the
    plain legs are relabelled: the sorted labels in `leg_assignment` go to
    `a`'s legs 3.. in order, the complement of `leg_assignment` within
    {3..n} goes to `b`'s plain legs in order.  Edge order is `a`'s edges,
    then `b`'s, then the bridge.
    """
    if a.leg_count < 2:
        raise GraphError("head graph needs at least 2 legs")
    if b.special_legs is None:
        raise GraphError("tail graph must be beaded (special legs set)")
    bs1, bs2 = b.special_legs
    n = a.leg_count + b.leg_count - 2
    sel = sorted(int(x) for x in leg_assignment)
    if len(sel) != a.leg_count - 2:
        raise GraphError(
            f"leg assignment size {len(sel)} != {a.leg_count - 2} head plain legs"
        )
    if sel and (sel[0] < 3 or sel[-1] > n or len(set(sel)) != len(sel)):
        raise GraphError(f"leg assignment {sel} outside 3..{n} or duplicated")

    off = a.vertex_count
    edges = a.edges + tuple((u + off, v + off) for u, v in b.edges)
    edges += ((a.leg_vertex(2), b.leg_vertex(bs1) + off),)

    rest = [x for x in range(3, n + 1) if x not in set(sel)]
    b_plain = [lbl for lbl in range(1, b.leg_count + 1) if lbl not in (bs1, bs2)]
    legs = [0] * n
    legs[0] = a.leg_vertex(1)
    legs[1] = b.leg_vertex(bs2) + off
    for lbl, head_lbl in zip(sel, range(3, a.leg_count + 1)):
        legs[lbl - 1] = a.leg_vertex(head_lbl)
    for lbl, tail_lbl in zip(rest, b_plain):
        legs[lbl - 1] = b.leg_vertex(tail_lbl) + off
    return Graph(a.vertex_count + b.vertex_count, edges, tuple(legs), (1, 2))


def spanning_trees(g: Graph) -> list[tuple[int, ...]]:
    """All spanning trees as sorted tuples of edge indices (brute force).

    Exponential; intended as a test oracle and for small-graph utilities.
    """
    n = g.vertex_count
    if not is_connected(g):
        raise DisconnectedGraphError("graph has no spanning tree")
    need = n - 1
    cand = [i for i, (u, v) in enumerate(g.edges) if u != v]
    trees = []
    for sub in itertools.combinations(cand, need):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for i in sub:
            u, v = g.edges[i]
            ru, rv = find(u), find(v)
            if ru == rv:
                ok = False
                break
            parent[ru] = rv
        if ok:
            trees.append(sub)
    return trees


# -- canonical form ----------------------------------------------------------

_CANONICAL_MAX_VERTICES = 10


def canonical_key(g: Graph, with_legs: bool = True):
    """Canonical hashable form via exhaustive vertex-permutation minimization.

    Only supported up to 10 vertices; larger graphs are never binned.
    With `with_legs=False` the leg structure is ignored (useful when the
    quantity of interest does not depend on legs).
    """
    if g.vertex_count > _CANONICAL_MAX_VERTICES:
        raise GraphError(f"canonical form limited to {_CANONICAL_MAX_VERTICES} vertices")
    legs = g.legs if with_legs else ()
    special = g.special_legs if with_legs else None

    # invariant-based vertex classes cut the permutation count sharply
    deg = [0] * g.vertex_count
    loops = [0] * g.vertex_count
    for u, v in g.edges:
        if u == v:
            loops[u] += 1
        deg[u] += 1
        deg[v] += 1
    leg_sig = [[] for _ in range(g.vertex_count)]
    for lbl, v in enumerate(legs, start=1):
        leg_sig[v].append(lbl)
    inv = [(deg[v], loops[v], tuple(leg_sig[v])) for v in range(g.vertex_count)]
    classes: dict = {}
    for v, key in enumerate(inv):
        classes.setdefault(key, []).append(v)
    groups = [classes[k] for k in sorted(classes)]

    best = None
    for placement in itertools.product(*(itertools.permutations(grp) for grp in groups)):
        perm = [0] * g.vertex_count
        pos = 0
        for grp_sorted in placement:
            for v in grp_sorted:
                perm[v] = pos
                pos += 1
        edges = tuple(sorted(tuple(sorted((perm[u], perm[v]))) for u, v in g.edges))
        lv = tuple(perm[v] for v in legs)
        cand = (g.vertex_count, edges, lv, special)
        if best is None or cand < best:
            best = cand
    return best


# -- text serialization ------------------------------------------------------


def to_text(g: Graph) -> str:
    """One-line form `V=<n> E=<u:v,...> LEGS=<v,...> SPECIAL=<i,j|none>`."""
    e = ",".join(f"{u}:{v}" for u, v in g.edges)
    l = ",".join(str(v) for v in g.legs)
    s = "none" if g.special_legs is None else f"{g.special_legs[0]},{g.special_legs[1]}"
    return f"V={g.vertex_count} E={e} LEGS={l} SPECIAL={s}"


def from_text(line: str) -> Graph:
    fields = {}
    for tok in line.split():
        key, _, val = tok.partition("=")
        fields[key] = val
    try:
        n = int(fields["V"])
        edges = tuple(
            tuple(int(x) for x in pair.split(":")) for pair in fields["E"].split(",") if pair
        )
        legs = tuple(int(x) for x in fields["LEGS"].split(",") if x)
        special = None
        if fields["SPECIAL"] != "none":
            i, j = fields["SPECIAL"].split(",")
            special = (int(i), int(j))
    except (KeyError, ValueError) as exc:
        raise GraphError(f"unparseable graph line: {line!r}") from exc
    return Graph(n, edges, legs, special)
