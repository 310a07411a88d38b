"""Exact (exponential-time) tropical-integral oracles.

Everything here is a test oracle for the polynomial-time tables and
samplers: the edge-deletion recursion for the tropicalized integral value
of a single graph, its renormalized positive variant, a plain Monte Carlo
check on the cube, and exact ensemble sums obtained by enumerating all
labelled vertex/half-edge configurations of a sector.

All arithmetic is exact `fractions.Fraction`; dimensions enter as rationals.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .errors import InvalidSectorError, NonGenericDimensionError
from .graphs import Graph, spanning_trees
from .tables import sector_edge_count, sector_vertex_count

DEFAULT_MAX_VERTICES = 7


def as_fraction(d) -> Fraction:
    """Dimensions as exact rationals; floats convert via their exact binary
    value."""
    if isinstance(d, (Fraction, int, str, float)):
        return Fraction(d)
    raise TypeError(f"cannot interpret {d!r} as a rational dimension")


# -- canonical multigraph keys ------------------------------------------------

_PERM_POOL: dict[int, list[tuple[int, ...]]] = {}


def _perms(n: int) -> list[tuple[int, ...]]:
    if n not in _PERM_POOL:
        _PERM_POOL[n] = list(itertools.permutations(range(n)))
    return _PERM_POOL[n]


def _canon_multigraph(vcount: int, edges: tuple[tuple[int, int], ...]):
    """Leg-free canonical key; isolated vertices are dropped (they change
    neither the loop number nor the value of any bound)."""
    if not edges:
        return (0, b"")
    used = sorted({w for e in edges for w in e})
    remap = {w: i for i, w in enumerate(used)}
    nv = len(used)
    adj = np.zeros((nv, nv), dtype=np.uint8)
    for u, v in edges:
        a, b = remap[u], remap[v]
        adj[a, b] += 1
        if a != b:
            adj[b, a] += 1

    deg = adj.sum(axis=1) + np.diagonal(adj)
    sloops = np.diagonal(adj)
    classes: dict[tuple[int, int], list[int]] = {}
    for w in range(nv):
        classes.setdefault((int(deg[w]), int(sloops[w])), []).append(w)
    groups = [classes[key] for key in sorted(classes)]

    perm_rows = [
        list(itertools.chain.from_iterable(choice))
        for choice in itertools.product(*(_class_perms(grp) for grp in groups))
    ]
    P = np.array(perm_rows, dtype=np.intp)
    B = adj[P[:, :, None], P[:, None, :]].reshape(len(perm_rows), nv * nv)
    buf = np.ascontiguousarray(B).tobytes()
    row = nv * nv
    best = min(buf[i * row : (i + 1) * row] for i in range(len(perm_rows)))
    return (nv, best)


def _class_perms(group: list[int]):
    return list(itertools.permutations(group))


# -- the edge-deletion recursion ----------------------------------------------


def _bridge_indices(vcount, edges):
    from .graphs import bridges as graph_bridges

    return graph_bridges(Graph(vcount, edges))


def _components(vcount, edges):
    parent = list(range(vcount))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    comp: dict[int, list[int]] = {}
    for w in range(vcount):
        comp.setdefault(find(w), []).append(w)
    return list(comp.values())


def _hepp_value(vcount, edges, d: Fraction, positive: bool, memo: dict) -> Fraction:
    if not edges:
        return Fraction(1)
    key = _canon_multigraph(vcount, edges)
    hit = memo.get(key)
    if hit is not None:
        return hit

    bridge_set = set(_bridge_indices(vcount, edges))
    ncomp = len(_components(vcount, edges))
    if not bridge_set and ncomp == 1:
        value = _hepp_1pi(vcount, edges, d, positive, memo)
    else:
        # factorization: drop bridges, take the bridge-free blocks
        kept = [e for i, e in enumerate(edges) if i not in bridge_set]
        value = Fraction(1)
        for block in _components(vcount, kept):
            block_set = set(block)
            bedges = [e for e in kept if e[0] in block_set]
            if not bedges:
                continue
            remap = {w: i for i, w in enumerate(sorted(block_set))}
            sub = tuple((remap[u], remap[v]) for u, v in bedges)
            value *= _hepp_value(len(remap), sub, d, positive, memo)
    memo[key] = value
    return value


def _hepp_1pi(vcount, edges, d, positive, memo) -> Fraction:
    ne = len(edges)
    loops = ne - vcount + 1
    omega = Fraction(ne) - d * Fraction(loops, 2)
    if positive and omega <= 0:
        return Fraction(0)
    if omega == 0:
        raise NonGenericDimensionError(
            f"omega vanishes at D={d} on a subgraph with {ne} edges, {loops} loops",
            subject=Graph(vcount, edges),
        )
    total = Fraction(0)
    for i in range(ne):
        rest = edges[:i] + edges[i + 1 :]
        total += _hepp_value(vcount, rest, d, positive, memo)
    return total / omega


def hepp_exact(g: Graph, d) -> Fraction:
    """Tropicalized integral value of a single graph by edge deletion.

    Requires a generic dimension: any subgraph reached by the recursion with
    vanishing divergence degree raises NonGenericDimensionError.
    """
    return _hepp_value(g.vertex_count, g.edges, as_fraction(d), False, {})


def hepp_positive_exact(g: Graph, d) -> Fraction:
    """Renormalized variant: bridge-free subcalls with omega <= 0 give 0."""
    return _hepp_value(g.vertex_count, g.edges, as_fraction(d), True, {})


def _maximal_forests(g: Graph):
    """Maximal spanning forests as tuples of edge indices: one spanning tree
    per connected component (for connected graphs these are the spanning
    trees)."""
    comps = _components(g.vertex_count, g.edges)
    per_comp = []
    for block in comps:
        block_set = set(block)
        eidx = [i for i, (u, v) in enumerate(g.edges) if u in block_set]
        remap = {w: i for i, w in enumerate(sorted(block_set))}
        sub = Graph(len(block), tuple((remap[u], remap[v]) for u, v in
                                      (g.edges[i] for i in eidx)))
        per_comp.append([tuple(eidx[i] for i in tree) for tree in spanning_trees(sub)])
    forests = []
    for choice in itertools.product(*per_comp):
        forests.append(tuple(sorted(itertools.chain.from_iterable(choice))))
    return forests


def hepp_cubical_mc(g: Graph, d: float, n_samples: int, seed=0) -> tuple[float, float]:
    """Plain Monte Carlo estimate of the unit-cube integral of U_tr^(-D/2).

    Returns (mean, standard error).  Brute-force forest enumeration keeps
    this completely independent of the greedy evaluators.
    """
    trees = _maximal_forests(g)
    ne = g.edge_count
    comp = np.ones((len(trees), ne))
    for row, tree in enumerate(trees):
        for i in tree:
            comp[row, i] = 0.0
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        chunk = min(200_000, n_samples - done)
        z = 1.0 - rng.random((chunk, ne))
        logu_tr = (np.log(z) @ comp.T).max(axis=1)
        vals = np.exp(-0.5 * d * logu_tr)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += chunk
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    return mean, math.sqrt(var / n_samples)


# -- labelled configuration enumeration ---------------------------------------


def _labelled_multigraphs(degrees: tuple[int, ...]):
    """All labelled multigraphs with the given degree vector.

    Yields (edges, n_matchings) where n_matchings counts the perfect
    matchings of labelled half-edge slots realizing that multigraph:
    prod_v d_v! / (prod_{u<w} m_uw! * prod_v 2^s_v s_v!).
    """
    nv = len(degrees)
    residual = list(degrees)
    edges: list[tuple[int, int]] = []
    out = []

    def rec():
        u = next((i for i in range(nv) if residual[i] > 0), None)
        if u is None:
            mult: dict[tuple[int, int], int] = {}
            for e in edges:
                mult[e] = mult.get(e, 0) + 1
            nmatch = 1
            for dv in degrees:
                nmatch *= math.factorial(dv)
            for (a, b), m in mult.items():
                if a == b:
                    nmatch //= 2**m * math.factorial(m)
                else:
                    nmatch //= math.factorial(m)
            out.append((tuple(edges), nmatch))
            return
        r = residual[u]
        partners = [w for w in range(u + 1, nv) if residual[w] > 0]

        def place(rem, idx):
            if rem == 0:
                saved = residual[u]
                residual[u] = 0
                rec()
                residual[u] = saved
                return
            if idx == len(partners):
                return
            w = partners[idx]
            cap = min(rem, residual[w])
            for cnt in range(cap, -1, -1):
                residual[w] -= cnt
                edges.extend([(u, w)] * cnt)
                place(rem - cnt, idx + 1)
                del edges[len(edges) - cnt :]
                residual[w] += cnt

        for s in range(r // 2, -1, -1):
            edges.extend([(u, u)] * s)
            place(r - 2 * s, 0)
            del edges[len(edges) - s :]

    rec()
    return out


_MULTIGRAPH_CACHE: dict[tuple[int, ...], list] = {}


def _multigraphs_cached(degrees: tuple[int, ...]):
    if degrees not in _MULTIGRAPH_CACHE:
        _MULTIGRAPH_CACHE[degrees] = _labelled_multigraphs(degrees)
    return _MULTIGRAPH_CACHE[degrees]


def _is_1pi_multigraph(vcount, edges):
    g = Graph(vcount, edges)
    from .graphs import bridges as graph_bridges
    from .graphs import is_connected

    return is_connected(g) and not graph_bridges(g)


def _leg_multisets(n: int, nv: int, k: int):
    """Non-increasing leg-count vectors (l_1 >= l_2 >= ...) of length nv
    summing to n with every entry <= k, plus their arrangement count."""
    out = []

    def rec(prefix, rem, cap):
        if len(prefix) == nv:
            if rem == 0:
                vec = tuple(prefix)
                counts: dict[int, int] = {}
                for x in vec:
                    counts[x] = counts.get(x, 0) + 1
                narr = math.factorial(nv)
                for c in counts.values():
                    narr //= math.factorial(c)
                out.append((vec, narr))
            return
        for x in range(min(cap, rem), -1, -1):
            if rem - x <= (nv - len(prefix) - 1) * x:
                rec(prefix + [x], rem - x, x)

    rec([], n, min(k, n))
    return out


_SECTOR_CLASS_CACHE: dict = {}


def _sector_1pi_classes(k: int, loops: int, legs: int, max_vertices: int):
    """Isomorphism classes of the sector's bridge-free connected graphs,
    aggregated over all labelled configurations.

    Returns (V, E, [(rep_vcount, rep_edges, weight)]) with integer weights;
    sum over classes of weight * value(rep) divided by V!(k!)^V gives the
    1/|Aut|-weighted ensemble sum of any leg-independent graph value.
    """
    cache_key = (k, loops, legs)
    if cache_key in _SECTOR_CLASS_CACHE:
        return _SECTOR_CLASS_CACHE[cache_key]
    nv = sector_vertex_count(k, loops, legs)
    ne = sector_edge_count(k, loops, legs)
    if nv > max_vertices:
        raise InvalidSectorError(
            f"sector ({loops},{legs}) needs {nv} vertices; oracle cap is {max_vertices}"
        )
    buckets: dict = {}
    reps: dict = {}
    for lvec, narr in _leg_multisets(legs, nv, k):
        wleg = math.factorial(legs)
        for x in lvec:
            wleg //= math.factorial(x)
        wslot = 1
        for x in lvec:
            wslot *= math.factorial(k) // math.factorial(k - x)
        degrees = tuple(k - x for x in lvec)
        base = narr * wleg * wslot
        for edges, nmatch in _multigraphs_cached(degrees):
            if len(edges) != ne or not _is_1pi_multigraph(nv, edges):
                continue
            key = _canon_multigraph(nv, edges)
            buckets[key] = buckets.get(key, 0) + base * nmatch
            reps.setdefault(key, edges)
    classes = [(nv, reps[key], weight) for key, weight in sorted(buckets.items())]
    result = (nv, ne, classes)
    _SECTOR_CLASS_CACHE[cache_key] = result
    return result


def ensemble_sum_oracle(k: int, d, loops: int, legs: int, mode: str = "plain",
                        max_vertices: int = DEFAULT_MAX_VERTICES) -> Fraction:
    """Exact 1/|Aut|-weighted sum of the (positive) bound over the sector's
    bridge-free connected k-regular graphs, by configuration enumeration."""
    if mode not in ("plain", "positive"):
        raise ValueError(f"unknown mode {mode!r}")
    dfrac = as_fraction(d)
    positive = mode == "positive"
    nv, _, classes = _sector_1pi_classes(k, loops, legs, max_vertices)
    memo: dict = {}
    total = Fraction(0)
    for rep_v, rep_edges, weight in classes:
        total += weight * _hepp_value(rep_v, rep_edges, dfrac, positive, memo)
    denom = math.factorial(nv) * math.factorial(k) ** nv
    return total / denom


def sector_distribution(k: int, d, loops: int, legs: int, mode: str = "plain",
                        max_vertices: int = DEFAULT_MAX_VERTICES):
    """Per-isomorphism-class sampling probabilities with labelled legs.

    Returns a dict mapping leg-aware canonical keys to (representative
    Graph, Fraction probability).  This is the reference law for the
    distribution tests of the graph sampler.
    """
    from .graphs import canonical_key

    if mode not in ("plain", "positive"):
        raise ValueError(f"unknown mode {mode!r}")
    dfrac = as_fraction(d)
    positive = mode == "positive"
    nv = sector_vertex_count(k, loops, legs)
    ne = sector_edge_count(k, loops, legs)
    if nv > max_vertices:
        raise InvalidSectorError(
            f"sector ({loops},{legs}) needs {nv} vertices; oracle cap is {max_vertices}"
        )
    memo: dict = {}
    weights: dict = {}
    reps: dict = {}
    for placement in itertools.product(range(nv), repeat=legs):
        lcount = [0] * nv
        for v in placement:
            lcount[v] += 1
        if any(x > k for x in lcount):
            continue
        wslot = 1
        for x in lcount:
            wslot *= math.factorial(k) // math.factorial(k - x)
        degrees = tuple(k - x for x in lcount)
        for edges, nmatch in _multigraphs_cached(degrees):
            if len(edges) != ne or not _is_1pi_multigraph(nv, edges):
                continue
            g = Graph(nv, edges, legs=tuple(placement))
            key = canonical_key(g)
            value = _hepp_value(nv, edges, dfrac, positive, memo)
            weights[key] = weights.get(key, 0) + wslot * nmatch * value
            reps.setdefault(key, g)
    total = sum(weights.values())
    if total == 0:
        raise InvalidSectorError(f"sector ({loops},{legs}) carries no weight")
    return {key: (reps[key], w / total) for key, w in weights.items()}


def _is_beaded_multigraph(vcount, edges, v1, v2) -> bool:
    """Connected, and removing any bridge separates vertex v1 from v2."""
    from .graphs import _same_component
    from .graphs import bridges as graph_bridges
    from .graphs import is_connected

    g = Graph(vcount, edges)
    if not is_connected(g):
        return False
    for b in graph_bridges(g):
        rest = Graph(vcount, edges[:b] + edges[b + 1 :])
        if _same_component(rest, v1, v2):
            return False
    return True


def beaded_ensemble_sum_oracle(k: int, d, loops: int, legs: int, mode: str = "plain",
                               max_vertices: int = DEFAULT_MAX_VERTICES) -> Fraction:
    """Exact 1/|Aut|-weighted chained-ensemble sum: all labelled
    configurations whose graph is connected with every bridge separating the
    legs labelled 1 and 2 (the special pair)."""
    if mode not in ("plain", "positive"):
        raise ValueError(f"unknown mode {mode!r}")
    if legs < 2:
        raise InvalidSectorError("chained ensembles need at least 2 legs")
    dfrac = as_fraction(d)
    positive = mode == "positive"
    nv = sector_vertex_count(k, loops, legs)
    ne = sector_edge_count(k, loops, legs)
    if nv > max_vertices:
        raise InvalidSectorError(f"needs {nv} vertices; cap {max_vertices}")
    memo: dict = {}
    total = Fraction(0)
    for placement in itertools.product(range(nv), repeat=legs):
        lcount = [0] * nv
        for v in placement:
            lcount[v] += 1
        if any(x > k for x in lcount):
            continue
        wslot = 1
        for x in lcount:
            wslot *= math.factorial(k) // math.factorial(k - x)
        for edges, nmatch in _multigraphs_cached(tuple(k - x for x in lcount)):
            if len(edges) != ne:
                continue
            if not _is_beaded_multigraph(nv, edges, placement[0], placement[1]):
                continue
            total += wslot * nmatch * _hepp_value(nv, edges, dfrac, positive, memo)
    denom = math.factorial(nv) * math.factorial(k) ** nv
    return total / denom


def beaded_sector_distribution(k: int, d, loops: int, legs: int, mode: str = "plain",
                               max_vertices: int = DEFAULT_MAX_VERTICES):
    """Per-isomorphism-class probabilities for the chained ensemble, with
    legs 1 and 2 marked special; the reference law for the beaded sampler."""
    from .graphs import canonical_key

    if mode not in ("plain", "positive"):
        raise ValueError(f"unknown mode {mode!r}")
    dfrac = as_fraction(d)
    positive = mode == "positive"
    nv = sector_vertex_count(k, loops, legs)
    ne = sector_edge_count(k, loops, legs)
    if nv > max_vertices:
        raise InvalidSectorError(f"needs {nv} vertices; cap {max_vertices}")
    memo: dict = {}
    weights: dict = {}
    reps: dict = {}
    for placement in itertools.product(range(nv), repeat=legs):
        lcount = [0] * nv
        for v in placement:
            lcount[v] += 1
        if any(x > k for x in lcount):
            continue
        wslot = 1
        for x in lcount:
            wslot *= math.factorial(k) // math.factorial(k - x)
        for edges, nmatch in _multigraphs_cached(tuple(k - x for x in lcount)):
            if len(edges) != ne:
                continue
            if not _is_beaded_multigraph(nv, edges, placement[0], placement[1]):
                continue
            g = Graph(nv, edges, legs=tuple(placement), special_legs=(1, 2))
            key = canonical_key(g)
            value = _hepp_value(nv, edges, dfrac, positive, memo)
            weights[key] = weights.get(key, 0) + wslot * nmatch * value
            reps.setdefault(key, g)
    total = sum(weights.values())
    if total == 0:
        raise InvalidSectorError(f"chained sector ({loops},{legs}) carries no weight")
    return {key: (reps[key], w / total) for key, w in weights.items()}


def primitive_beta_hepp_exact(loops: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> Fraction:
    """Exact tropical ("Hepp") version of the primitive 4-valent coupling-flow
    coefficient at loop order `loops`: twice the 1/|Aut|-weighted sum over
    primitive graphs of the projective cube integral, which equals the sum of
    plain D=4 bound values of the one-edge deletions.

    Exponential; used to pin the omega = 0 top-level normalization at low
    loop order.
    """
    from .montecarlo import _has_small_vertex_cut

    k, legs = 4, 4
    d4 = Fraction(4)
    nv = sector_vertex_count(k, loops, legs)
    ne = sector_edge_count(k, loops, legs)
    if nv > max_vertices:
        raise InvalidSectorError(f"needs {nv} vertices; cap {max_vertices}")
    memo: dict = {}
    total = Fraction(0)
    for lvec, narr in _leg_multisets(legs, nv, k):
        wleg = math.factorial(legs)
        for x in lvec:
            wleg //= math.factorial(x)
        wslot = 1
        for x in lvec:
            wslot *= math.factorial(k) // math.factorial(k - x)
        base = narr * wleg * wslot
        for edges, nmatch in _multigraphs_cached(tuple(k - x for x in lvec)):
            if len(edges) != ne or not _is_1pi_multigraph(nv, edges):
                continue
            if _has_small_vertex_cut(nv, edges, lvec):
                continue
            proj = Fraction(0)
            for i in range(ne):
                rest = edges[:i] + edges[i + 1 :]
                proj += _hepp_value(nv, rest, d4, False, memo)
            total += base * nmatch * proj
    denom = math.factorial(nv) * math.factorial(k) ** nv
    return 2 * total / denom
