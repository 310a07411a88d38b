"""Tropical and exact first Symanzik polynomial evaluation, mass term, and
the bounded residual integrand.

Everything is computed and returned in log space: at high loop order the
products of cubical coordinates underflow double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graphs import (
    DisconnectedGraphError,
    Graph,
    GraphError,
    MetricAssignment,
    is_connected,
)


class SymanzikEvaluationError(ArithmeticError):
    """Numerically singular Laplacian factorization; carries the graph."""

    def __init__(self, message: str, graph: Graph | None = None):
        super().__init__(message)
        self.graph = graph


@dataclass(frozen=True)
class SymanzikContext:
    """Ambient sector data: dimension, mass ratio m^2/mu^2, and the
    superficial degree of divergence shared by the whole (L, n, k) ensemble."""

    dimension: float
    mass_ratio: float = 1.0
    omega: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.dimension):
            raise ValueError("dimension must be finite")
        if self.mass_ratio <= 0:
            raise ValueError("mass_ratio must be positive")


def _min_tree_log_weight(g: Graph, logx: list[float]) -> float:
    """Weight of the minimum spanning tree on log-coordinates.

    Greedy union-find on edges sorted ascending, ties broken by edge index.
    Self-loops never enter a tree.
    """
    order = sorted(range(len(logx)), key=lambda i: (logx[i], i))
    parent = list(range(g.vertex_count))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    total = 0.0
    joined = 0
    need = g.vertex_count - 1
    for i in order:
        u, v = g.edges[i]
        if u == v:
            continue
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            total += logx[i]
            joined += 1
            if joined == need:
                return total
    if joined != need:
        raise DisconnectedGraphError("no spanning tree: graph is disconnected")
    return total


def log_u_tropical(g: Graph, m: MetricAssignment) -> float:
    """log of max over spanning trees T of prod_{e not in T} x_e.

    The maximal complement product pairs with the minimal tree product, so a
    greedy minimum spanning tree on log-coordinates does the optimization.
    """
    if len(m) != g.edge_count:
        raise GraphError("coordinate count != edge count")
    logx = [math.log(c) for c in m.coords]
    if g.vertex_count <= 1:
        return math.fsum(logx)
    return math.fsum(logx) - _min_tree_log_weight(g, logx)


def log_u_exact(g: Graph, m: MetricAssignment) -> float:
    """log of the spanning-tree sum U = sum_T prod_{e not in T} x_e.

    Uses the matrix-tree identity U = (prod_e x_e) * det L~(1/x) where L~ is
    the weighted Laplacian with the highest-index vertex row/column deleted.
    The determinant is accumulated as log-pivots of a Cholesky factorization.
    Self-loops contribute no Laplacian entry but multiply the prefactor.
    """
    if len(m) != g.edge_count:
        raise GraphError("coordinate count != edge count")
    if not is_connected(g):
        raise DisconnectedGraphError("U is a sum over spanning trees; none exist")
    n = g.vertex_count
    logpref = math.fsum(math.log(c) for c in m.coords)
    if n <= 1:
        return logpref
    lap = np.zeros((n - 1, n - 1))
    for (u, v), x in zip(g.edges, m.coords):
        if u == v:
            continue
        w = 1.0 / x
        if u < n - 1:
            lap[u, u] += w
        if v < n - 1:
            lap[v, v] += w
        if u < n - 1 and v < n - 1:
            lap[u, v] -= w
            lap[v, u] -= w
    try:
        chol = np.linalg.cholesky(lap)
    except np.linalg.LinAlgError as exc:
        raise SymanzikEvaluationError(f"Laplacian not positive definite: {exc}", g) from exc
    diag = np.diagonal(chol)
    if not np.all(diag > 0):
        raise SymanzikEvaluationError("non-positive Cholesky pivot", g)
    return logpref + 2.0 * float(np.sum(np.log(diag)))


def v_tropical(g: Graph, m: MetricAssignment) -> float:
    """max_e x_e."""
    if g.edge_count == 0:
        raise GraphError("V undefined for edgeless graphs")
    return max(m.coords)


def v_exact(g: Graph, m: MetricAssignment, mass_ratio: float = 1.0) -> float:
    """mass_ratio * sum_e x_e (zero external momenta)."""
    return mass_ratio * math.fsum(m.coords)


def residual_f(g: Graph, m: MetricAssignment, ctx: SymanzikContext) -> float:
    """Gamma(omega+1) * (U_tr/U)^(D/2) * (V_tr/V)^omega, formed in log space."""
    if ctx.omega <= -1:
        raise ValueError("residual function needs omega > -1")
    lu_tr = log_u_tropical(g, m)
    lu = log_u_exact(g, m)
    lv_tr = math.log(v_tropical(g, m))
    lv = math.log(v_exact(g, m, ctx.mass_ratio))
    log_f = (
        math.lgamma(ctx.omega + 1.0)
        + 0.5 * ctx.dimension * (lu_tr - lu)
        + ctx.omega * (lv_tr - lv)
    )
    return math.exp(log_f)


def spanning_tree_count(g: Graph) -> int:
    """Exact number of spanning trees via an integer matrix-tree determinant."""
    if not is_connected(g):
        return 0
    n = g.vertex_count
    if n <= 1:
        return 1
    lap = [[Fraction(0)] * (n - 1) for _ in range(n - 1)]
    for u, v in g.edges:
        if u == v:
            continue
        if u < n - 1:
            lap[u][u] += 1
        if v < n - 1:
            lap[v][v] += 1
        if u < n - 1 and v < n - 1:
            lap[u][v] -= 1
            lap[v][u] -= 1
    det = Fraction(1)
    m = n - 1
    for col in range(m):
        piv = next((r for r in range(col, m) if lap[r][col] != 0), None)
        if piv is None:
            return 0
        if piv != col:
            lap[col], lap[piv] = lap[piv], lap[col]
            det = -det
        det *= lap[col][col]
        inv = lap[col][col]
        for r in range(col + 1, m):
            factor = lap[r][col] / inv
            if factor:
                for c in range(col, m):
                    lap[r][c] -= factor * lap[col][c]
    assert det.denominator == 1
    return int(det)
