"""Polynomial-time sampling of metric graphs from the tropical measure.

Two mutually recursive constructions: a bridge-free (1PI) sample at
(L, n) is a beaded sample at (L-1, n+2) with its special legs glued into a
new edge whose coordinate becomes the maximum; a beaded sample at (L, n)
is either a promoted 1PI sample or a 1PI head bridged onto a smaller
beaded tail, with the discrete outcome drawn from the coefficient tables
through an alias sampler.

The beaded chain is built iteratively (explicit segment list) so native
recursion depth stays bounded by the loop order.  The raw representation
in the hot path is a tuple (vertex_count, edge_tails, edge_heads,
leg_vertices, coords) of flat lists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSectorError
from .graphs import Graph, GraphError, MetricAssignment
from .tables import CoefficientTables

_RNG_BLOCK = 1 << 16


class BufferedRNG:
    """Deterministic uniform stream with block refills.

    Streams are independent per (seed, stream) pair; reproducibility is
    guaranteed per (seed, stream), independent of worker count.
    """

    __slots__ = ("_gen", "_buf", "_pos")

    def __init__(self, seed: int, stream: int = 0):
        self._gen = np.random.default_rng(np.random.SeedSequence((seed, stream)))
        self._buf = self._gen.random(_RNG_BLOCK).tolist()
        self._pos = 0

    def uniform(self) -> float:
        """Uniform in [0, 1)."""
        pos = self._pos
        if pos == _RNG_BLOCK:
            self._buf = self._gen.random(_RNG_BLOCK).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]

    def uniform_oc(self) -> float:
        """Uniform in (0, 1], so powers of it stay strictly positive."""
        return 1.0 - self.uniform()


@dataclass
class SamplerConfig:
    tables: CoefficientTables
    seed: int = 0
    stream: int = 0


@dataclass(frozen=True)
class MetricGraphSample:
    graph: Graph
    coords: MetricAssignment
    sector: tuple[int, int]


class GraphSampler:
    """Per-worker sampler: immutable shared tables plus a private RNG."""

    def __init__(self, tables: CoefficientTables, seed: int = 0, stream: int = 0):
        self.tables = tables
        self.rng = BufferedRNG(seed, stream)
        self._k = tables.k
        self._omega_inv: dict[int, float | None] = {}
        self._alias: dict[int, tuple[int, list, list]] = {}

    @classmethod
    def from_config(cls, config: SamplerConfig) -> "GraphSampler":
        return cls(config.tables, config.seed, config.stream)

    def _kappa_exponent(self, loops: int, legs: int):
        """1/omega for the rescaling step, or None in the omega = 0
        projective gauge (positive mode), where kappa is pinned to 1."""
        key = (loops << 20) | legs
        try:
            return self._omega_inv[key]
        except KeyError:
            pass
        tab = self.tables
        if tab.omega_is_zero(loops, legs):
            if tab.mode != "positive":
                raise InvalidSectorError(
                    f"omega({loops},{legs}) = 0 outside positive mode"
                )
            value = None
        else:
            value = 1.0 / tab.omega(loops, legs)
        self._omega_inv[key] = value
        return value

    def _alias_lists(self, loops: int, legs: int):
        key = (loops << 20) | legs
        entry = self._alias.get(key)
        if entry is None:
            samp = self.tables.alias_sampler(loops, legs)
            entry = (samp.size, samp._prob.tolist(), samp._alias.tolist())
            self._alias[key] = entry
        return entry

    # -- raw chain construction ------------------------------------------

    def one_pi_raw(self, loops: int, legs: int):
        k = self._k
        if loops == 0:
            if legs != k:
                raise InvalidSectorError(f"no loopless {k}-regular graph with {legs} legs")
            return 1, [], [], [0] * k, []
        vcount, eu, ev, legvs, coords = self.beaded_raw(loops - 1, legs + 2)
        eu.append(legvs[0])
        ev.append(legvs[1])
        del legvs[0:2]
        inv_om = self._kappa_exponent(loops, legs)
        if inv_om is None:
            coords.append(1.0)
        else:
            kappa = (1.0 - self.rng.uniform()) ** inv_om
            coords = [c * kappa for c in coords]
            coords.append(kappa)
        return vcount, eu, ev, legvs, coords

    def beaded_raw(self, loops: int, legs: int):
        rng_uniform = self.rng.uniform
        k = self._k
        heads = []
        cur_l, cur_n = loops, legs
        while True:
            size, prob, alias = self._alias_lists(cur_l, cur_n)
            x = rng_uniform() * size
            outcome = int(x)
            if x - outcome >= prob[outcome]:
                outcome = alias[outcome]
            if outcome == 0:
                chain = self.one_pi_raw(cur_l, cur_n)
                break
            lp, np_ = divmod(outcome - 1, cur_n - 1)
            if lp == 0:
                # tree-level head: the bare k-valent vertex
                if np_ + 2 != k:
                    raise InvalidSectorError(f"no loopless head with {np_ + 2} legs")
                head = (1, [], [], [0] * k, [])
            else:
                head = self.one_pi_raw(lp, np_ + 2)
            sel = _draw_subset(rng_uniform, cur_n, np_)
            lam = 1.0 - rng_uniform()
            heads.append((head, sel, lam, cur_n))
            cur_l -= lp
            cur_n -= np_
        for head, sel, lam, n_out in reversed(heads):
            chain = _concat_raw(head, chain, sel, lam, n_out)
        return chain

    # -- public samples ----------------------------------------------------

    def sample_one_pi(self, loops: int, legs: int) -> MetricGraphSample:
        self._require_positive_measure(loops, legs)
        vcount, eu, ev, legvs, coords = self.one_pi_raw(loops, legs)
        g = Graph(vcount, tuple(zip(eu, ev)), tuple(legvs))
        return MetricGraphSample(g, MetricAssignment(tuple(coords)), (loops, legs))

    def sample_beaded(self, loops: int, legs: int) -> MetricGraphSample:
        if legs < 2:
            raise InvalidSectorError("beaded sectors need at least 2 legs")
        if not self.tables.b(loops, legs) > 0:
            raise InvalidSectorError(f"B({loops},{legs}) is not positive")
        vcount, eu, ev, legvs, coords = self.beaded_raw(loops, legs)
        g = Graph(vcount, tuple(zip(eu, ev)), tuple(legvs), special_legs=(1, 2))
        return MetricGraphSample(g, MetricAssignment(tuple(coords)), (loops, legs))

    def _require_positive_measure(self, loops, legs):
        tab = self.tables
        if loops == 0:
            if legs != tab.k:
                raise InvalidSectorError(
                    f"Z(0,{legs}) = 0 for k={tab.k}: only the single vertex exists at tree level"
                )
            return
        if tab.mode == "positive" and tab.omega_is_zero(loops, legs):
            if not tab.top_normalization(loops, legs) > 0:
                raise InvalidSectorError(f"sector ({loops},{legs}) carries no positive weight")
            return
        if not tab.z(loops, legs) > 0:
            raise InvalidSectorError(f"Z({loops},{legs}) is not positive")


def _draw_subset(rng_uniform, n: int, size: int) -> list[int]:
    """Uniform size-`size` subset of {3..n}, sorted (partial Fisher-Yates)."""
    if size == 0:
        return []
    m = n - 2
    if size == m:
        return list(range(3, n + 1))
    if size == 1:
        return [3 + int(rng_uniform() * m)]
    pool = list(range(3, n + 1))
    for i in range(size):
        j = i + int(rng_uniform() * (m - i))
        pool[i], pool[j] = pool[j], pool[i]
    sel = pool[:size]
    sel.sort()
    return sel


def _concat_raw(head, tail, sel, lam, n_out):
    """Raw version of graphs.concatenate_beaded; reproduces its vertex
    numbering, edge order, and leg relabelling exactly."""
    hv, heu, hev, hl, hc = head
    tv, teu, tev, tl, tc = tail
    off = hv
    bridge_u = hl[1]
    heu += [u + off for u in teu]
    hev += [v + off for v in tev]
    heu.append(bridge_u)
    hev.append(tl[0] + off)
    hc += tc
    hc.append(lam)
    if not sel:
        # all plain legs come from the tail, in order
        legs = [hl[0], tl[1] + off]
        legs.extend(t + off for t in tl[2:])
    elif len(sel) == n_out - 2:
        # all plain legs come from the head, in order
        legs = [hl[0], tl[1] + off]
        legs.extend(hl[2:])
    else:
        legs = [0] * n_out
        legs[0] = hl[0]
        legs[1] = tl[1] + off
        in_sel = [False] * (n_out + 1)
        for lbl in sel:
            in_sel[lbl] = True
        hi = 2
        for lbl in sel:
            legs[lbl - 1] = hl[hi]
            hi += 1
        ti = 2
        for lbl in range(3, n_out + 1):
            if not in_sel[lbl]:
                legs[lbl - 1] = tl[ti] + off
                ti += 1
    return hv + tv, heu, hev, legs, hc


# -- module-level convenience wrappers ----------------------------------------


def sample_one_pi(tables: CoefficientTables, loops: int, legs: int,
                  rng: GraphSampler | BufferedRNG | int) -> MetricGraphSample:
    return _as_sampler(tables, rng).sample_one_pi(loops, legs)


def sample_beaded(tables: CoefficientTables, loops: int, legs: int,
                  rng: GraphSampler | BufferedRNG | int) -> MetricGraphSample:
    return _as_sampler(tables, rng).sample_beaded(loops, legs)


def _as_sampler(tables, rng) -> GraphSampler:
    if isinstance(rng, GraphSampler):
        if rng.tables is not tables:
            raise ValueError("sampler was built for different tables")
        return rng
    sampler = GraphSampler.__new__(GraphSampler)
    sampler.tables = tables
    sampler.rng = rng if isinstance(rng, BufferedRNG) else BufferedRNG(int(rng))
    sampler._k = tables.k
    sampler._omega_inv = {}
    sampler._alias = {}
    return sampler


def to_projective(sample: MetricGraphSample) -> MetricGraphSample:
    """Divide all coordinates by their maximum; the projective representative
    of the same metric graph (largest coordinate exactly 1)."""
    if not sample.coords.coords:
        raise GraphError("projective representative undefined without edges")
    top = max(sample.coords.coords)
    scaled = tuple(c / top for c in sample.coords.coords)
    return MetricGraphSample(sample.graph, MetricAssignment(scaled), sample.sector)
