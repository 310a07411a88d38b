"""Streaming Monte Carlo estimators over the moduli space of metric graphs.

The estimators draw graphs from the tropical measure, evaluate the bounded
residual integrand in log space with a batched Cholesky factorization for
the exact spanning-tree polynomial, and reduce through mergeable mean /
second-moment accumulators.  Work is split into fixed chunks, one RNG
stream per chunk, so results are reproducible for a given (seed, chunk
size) regardless of worker count.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSectorError
from .graphs import Graph, GraphError, bridges, is_connected, is_k_regular
from .sampler import GraphSampler
from .tables import CoefficientTables, build, load, omega, sector_edge_count, sector_vertex_count

_BATCH = 8192


class WorkerFailureError(RuntimeError):
    """A parallel worker failed; carries the number of completed samples."""

    def __init__(self, message, completed: int):
        super().__init__(message)
        self.completed = completed


@dataclass
class Accumulator:
    """Single-pass count / mean / sum-of-squared-deviations record.

    Merging is associative and commutative up to floating rounding, so
    worker-local accumulators can be reduced in any fixed order.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    aux_count: int = 0

    def add(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def add_batch(self, count: int, mean: float, m2: float) -> None:
        if count == 0:
            return
        if self.count == 0:
            self.count, self.mean, self.m2 = count, mean, m2
            return
        total = self.count + count
        delta = mean - self.mean
        self.mean += delta * count / total
        self.m2 += m2 + delta * delta * self.count * count / total
        self.count = total

    def merge(self, other: "Accumulator") -> "Accumulator":
        out = Accumulator(self.count, self.mean, self.m2, self.aux_count + other.aux_count)
        out.add_batch(other.count, other.mean, other.m2)
        return out

    @property
    def variance(self) -> float:
        return self.m2 / self.count if self.count else 0.0

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return math.inf
        return math.sqrt(self.m2 / self.count) / math.sqrt(self.count)


@dataclass
class EstimateReport:
    quantity: str
    k: int
    dimension: float
    loops: int
    legs: int
    samples: int
    aux_hits: int
    value: float
    stderr: float
    normalization: float
    seconds: float
    hepp_value: float | None = None
    hepp_stderr: float | None = None

    def record(self) -> str:
        parts = [
            f"quantity={self.quantity}",
            f"k={self.k}",
            f"dimension={self.dimension!r}",
            f"loops={self.loops}",
            f"legs={self.legs}",
            f"samples={self.samples}",
            f"aux_hits={self.aux_hits}",
            f"value={self.value!r}",
            f"stderr={self.stderr!r}",
            f"normalization={self.normalization!r}",
            f"seconds={self.seconds:.3f}",
        ]
        if self.hepp_value is not None:
            parts.append(f"hepp_value={self.hepp_value!r}")
            parts.append(f"hepp_stderr={self.hepp_stderr!r}")
        return " ".join(parts)

    def csv_row(self) -> str:
        return (
            f"{self.loops},{self.samples},{self.value!r},{self.stderr!r},{self.seconds:.3f}"
        )


CSV_HEADER = "L,samples,value,stderr,seconds"


def append_report(path, report: EstimateReport) -> None:
    with open(path, "a") as fh:
        fh.write(report.record() + "\n")


# -- primitivity ---------------------------------------------------------------


def _ext_of_subset(g: Graph, members: set[int]) -> int:
    ext = 0
    for u, v in g.edges:
        if (u in members) != (v in members):
            ext += 1
    for v in g.legs:
        if v in members:
            ext += 1
    return ext


def _require_primitive_input(g: Graph) -> None:
    if not is_k_regular(g, 4) or g.leg_count != 4:
        raise GraphError("primitivity is defined for 4-regular graphs with 4 legs")
    if not is_connected(g) or bridges(g):
        raise GraphError("primitivity is defined for bridge-free connected graphs")


def is_primitive(g: Graph) -> bool:
    """No proper sub-ensemble of vertices supports a non-positive divergence
    degree: equivalently, no connected vertex subset S with 2 <= |S| <= V-1
    and (boundary edges) + (legs inside S) <= 4.

    Implemented by cut enumeration: all internal-edge subsets of size <= 4
    are removed in lexicographic order; whenever the graph falls apart,
    each resulting component with >= 2 vertices is tested for external
    degree <= 4.
    """
    _require_primitive_input(g)
    nv = g.vertex_count
    if nv <= 2:
        return True
    ne = g.edge_count
    edges = g.edges
    for size in range(1, min(4, ne) + 1):
        for cut in itertools.combinations(range(ne), size):
            parent = list(range(nv))

            def find(a):
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                return a

            comps = nv
            cutset = set(cut)
            for i, (u, v) in enumerate(edges):
                if i in cutset:
                    continue
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
                    comps -= 1
            if comps < 2:
                continue
            groups: dict[int, set[int]] = {}
            for w in range(nv):
                groups.setdefault(find(w), set()).add(w)
            for members in groups.values():
                if 2 <= len(members) <= nv - 1 and _ext_of_subset(g, members) <= 4:
                    return False
    return True


def is_primitive_vertex_oracle(g: Graph) -> bool:
    """Brute-force reference: enumerate connected vertex subsets directly."""
    _require_primitive_input(g)
    nv = g.vertex_count
    adj = [set() for _ in range(nv)]
    for u, v in g.edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    for size in range(2, nv):
        for members in itertools.combinations(range(nv), size):
            mset = set(members)
            seen = {members[0]}
            todo = [members[0]]
            while todo:
                w = todo.pop()
                for x in adj[w]:
                    if x in mset and x not in seen:
                        seen.add(x)
                        todo.append(x)
            if len(seen) != size:
                continue
            if _ext_of_subset(g, mset) <= 4:
                return False
    return True


def _has_small_vertex_cut(vcount: int, edges, leg_counts) -> bool:
    """True iff some vertex subset with 2 <= |S| <= V-1 has external degree
    (boundary edges + legs inside) <= 4.  Connectivity of S need not be
    checked: a disconnected witness always contains a connected one."""
    if vcount <= 2:
        return False
    for mask in range(1, 1 << vcount):
        size = mask.bit_count()
        if size < 2 or size > vcount - 1:
            continue
        ext = 0
        for u, v in edges:
            if ((mask >> u) ^ (mask >> v)) & 1:
                ext += 1
        if ext > 4:
            continue
        for v in range(vcount):
            if (mask >> v) & 1:
                ext += leg_counts[v]
        if ext <= 4:
            return True
    return False


class _SubsetExtFilter:
    """Vectorized subdivergence detector for batches of same-size graphs."""

    def __init__(self, vcount: int):
        if vcount > 16:
            raise ValueError("subset filter limited to 16 vertices")
        self.vcount = vcount
        ids = np.arange(1 << vcount, dtype=np.uint32)
        shifts = np.arange(vcount, dtype=np.uint32)
        self.bits = ((ids[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        pc = self.bits.sum(axis=1)
        self.valid = (pc >= 2) & (pc <= vcount - 1)

    def primitive(self, u: np.ndarray, v: np.ndarray, legv: np.ndarray) -> np.ndarray:
        bits = self.bits
        nb, nbatch = bits.shape[0], u.shape[0]
        ext = np.zeros((nb, nbatch), dtype=np.int16)
        for j in range(u.shape[1]):
            ext += bits[:, u[:, j]] != bits[:, v[:, j]]
        for j in range(legv.shape[1]):
            ext += bits[:, legv[:, j]]
        bad = (ext <= 4) & self.valid[:, None]
        return ~bad.any(axis=0)


# -- batched kernels -----------------------------------------------------------


def _batched_log_u_exact(u, v, x, logx=None):
    """log U for a batch of same-shape graphs via reduced-Laplacian Cholesky.

    Self-loop rows cancel out of the scatter (+w twice, -w twice on the
    same diagonal entry) and correctly contribute only through log x."""
    nbatch, ne = x.shape
    nv = int(max(u.max(), v.max())) + 1
    w = 1.0 / x
    base = (np.arange(nbatch, dtype=np.int64) * (nv * nv))[:, None]
    iu = base + u * nv + u
    iv = base + v * nv + v
    iuv = base + u * nv + v
    ivu = base + v * nv + u
    idx = np.concatenate([iu, iv, iuv, ivu], axis=None)
    wts = np.concatenate([w, w, -w, -w], axis=None)
    lap = np.bincount(idx, weights=wts, minlength=nbatch * nv * nv)
    lap = lap.reshape(nbatch, nv, nv)[:, : nv - 1, : nv - 1]
    chol = np.linalg.cholesky(lap)
    logdet = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    if logx is None:
        logx = np.log(x)
    return logx.sum(axis=1) + logdet


def _sample_block(sampler, loops, legs, bs, nv, ne, u_buf, v_buf, x_buf, tree_buf,
                  legv_buf=None):
    """Draw `bs` graphs, filling edge/coordinate buffers and the index set of
    a maximizing spanning tree (greedy on ascending coordinates, ties by
    edge index); log-space reductions happen batched afterwards."""
    one_pi = sampler.one_pi_raw
    base_parent = list(range(nv))
    need = nv - 1
    for i in range(bs):
        vc, eu, ev, legvs, coords = one_pi(loops, legs)
        order = sorted(range(ne), key=coords.__getitem__)
        parent = base_parent.copy()
        tree = tree_buf[i]
        joined = 0
        for j in order:
            a = eu[j]
            b = ev[j]
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a != b:
                parent[a] = b
                tree[joined] = j
                joined += 1
                if joined == need:
                    break
        x_buf[i] = coords
        u_buf[i] = eu
        v_buf[i] = ev
        if legv_buf is not None:
            legv_buf[i] = legvs


def _log_u_tropical_batch(logx, tree_buf, bs):
    return logx.sum(axis=1) - np.take_along_axis(logx, tree_buf[:bs], axis=1).sum(axis=1)


def _phi3_chunk(tables, loops, legs, seed, stream, count):
    sampler = GraphSampler(tables, seed, stream)
    nv = sector_vertex_count(tables.k, loops, legs)
    ne = sector_edge_count(tables.k, loops, legs)
    om = tables.omega(loops, legs)
    lgam = math.lgamma(om + 1.0)
    half_d = 0.5 * tables.dimension
    u_buf = np.empty((_BATCH, ne), dtype=np.int64)
    v_buf = np.empty((_BATCH, ne), dtype=np.int64)
    x_buf = np.empty((_BATCH, ne))
    tree_buf = np.empty((_BATCH, nv - 1), dtype=np.int64)
    acc = Accumulator()
    done = 0
    while done < count:
        bs = min(_BATCH, count - done)
        _sample_block(sampler, loops, legs, bs, nv, ne, u_buf, v_buf, x_buf, tree_buf)
        x = x_buf[:bs]
        logx = np.log(x)
        lu_tr = _log_u_tropical_batch(logx, tree_buf, bs)
        lu = _batched_log_u_exact(u_buf[:bs], v_buf[:bs], x, logx)
        lv_tr = np.log(x.max(axis=1))
        lv = np.log(x.sum(axis=1))
        f = np.exp(lgam + half_d * (lu_tr - lu) + om * (lv_tr - lv))
        # the integrand is bounded by Gamma(omega+1); exceeding it means a bug
        assert float(f.max(initial=0.0)) <= math.exp(lgam) * (1.0 + 1e-9)
        acc.add_batch(bs, float(f.mean()), float(f.var() * bs))
        done += bs
    return acc, Accumulator()


def _beta_chunk(tables, loops, legs, seed, stream, count):
    sampler = GraphSampler(tables, seed, stream)
    nv = sector_vertex_count(tables.k, loops, legs)
    ne = sector_edge_count(tables.k, loops, legs)
    # vectorized subset filter up to 12 vertices; beyond that fall back to
    # the per-sample bitmask scan (slow, but bounded memory)
    filt = _SubsetExtFilter(nv) if nv <= 12 else None
    u_buf = np.empty((_BATCH, ne), dtype=np.int64)
    v_buf = np.empty((_BATCH, ne), dtype=np.int64)
    x_buf = np.empty((_BATCH, ne))
    tree_buf = np.empty((_BATCH, nv - 1), dtype=np.int64)
    legv_buf = np.empty((_BATCH, legs), dtype=np.int64)
    acc = Accumulator()
    acc_theta = Accumulator()
    done = 0
    while done < count:
        bs = min(_BATCH, count - done)
        _sample_block(sampler, loops, legs, bs, nv, ne, u_buf, v_buf, x_buf, tree_buf, legv_buf)
        if filt is not None:
            prim = filt.primitive(u_buf[:bs], v_buf[:bs], legv_buf[:bs])
        else:
            prim = np.empty(bs, dtype=bool)
            for i in range(bs):
                leg_counts = [0] * nv
                for v in legv_buf[i]:
                    leg_counts[v] += 1
                prim[i] = not _has_small_vertex_cut(
                    nv, list(zip(u_buf[i].tolist(), v_buf[i].tolist())), leg_counts
                )
        hits = int(prim.sum())
        f = np.zeros(bs)
        if hits:
            rows = np.nonzero(prim)[0]
            logx = np.log(x_buf[rows])
            lu_tr = logx.sum(axis=1) - np.take_along_axis(
                logx, tree_buf[rows], axis=1
            ).sum(axis=1)
            lu = _batched_log_u_exact(u_buf[rows], v_buf[rows], x_buf[rows], logx)
            f[rows] = np.exp(2.0 * (lu_tr - lu))
            assert float(f.max()) <= 1.0 + 1e-9  # (U_tr/U)^2 never exceeds 1
        theta = prim.astype(np.float64)
        acc.add_batch(bs, float(f.mean()), float(f.var() * bs))
        acc.aux_count += hits
        acc_theta.add_batch(bs, float(theta.mean()), float(theta.var() * bs))
        acc_theta.aux_count += hits
        done += bs
    return acc, acc_theta


# -- parallel driver -----------------------------------------------------------

_CHUNK_KINDS = {"phi3": _phi3_chunk, "beta": _beta_chunk}
_WORKER_TABLES: dict = {}


def _resolve_tables(source) -> CoefficientTables:
    key = source
    tab = _WORKER_TABLES.get(key)
    if tab is None:
        kind, payload = source
        if kind == "file":
            tab = load(payload)
        else:
            k, dim_text, mode, l_max, n_max = payload
            tab = build(k, dim_text, mode, l_max, n_max)
        _WORKER_TABLES[key] = tab
    return tab


def _chunk_task(args):
    kind, source, loops, legs, seed, stream, count = args
    tables = _resolve_tables(source)
    acc, acc2 = _CHUNK_KINDS[kind](tables, loops, legs, seed, stream, count)
    return stream, count, acc, acc2


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    table_source: tuple
    loops: int
    legs: int
    n_samples: int
    seed: int = 0


def run_parallel(spec: EstimatorSpec, workers: int = 1, chunk_size: int = 1_000_000):
    """Partition the sample budget into fixed chunks (one RNG stream each),
    fan out over worker processes, and merge in stream order."""
    if spec.n_samples <= 0:
        raise ValueError("need a positive number of samples")
    if workers < 1:
        raise ValueError("need at least one worker")
    chunk_size = max(1, int(chunk_size))
    tasks = []
    offset = 0
    stream = 0
    while offset < spec.n_samples:
        cnt = min(chunk_size, spec.n_samples - offset)
        tasks.append((spec.kind, spec.table_source, spec.loops, spec.legs, spec.seed, stream, cnt))
        offset += cnt
        stream += 1
    if workers == 1 or len(tasks) == 1:
        results = [_chunk_task(t) for t in tasks]
    else:
        results = []
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            futures = [pool.submit(_chunk_task, t) for t in tasks]
            for fut in futures:
                try:
                    results.append(fut.result())
                except Exception as exc:
                    done = sum(r[1] for r in results)
                    raise WorkerFailureError(
                        f"worker chunk failed after {done} samples: {exc}", done
                    ) from exc
    results.sort(key=lambda r: r[0])
    acc = Accumulator()
    acc2 = Accumulator()
    for _, _, a, a2 in results:
        acc = acc.merge(a)
        acc2 = acc2.merge(a2)
    return acc, acc2


# -- public estimators ---------------------------------------------------------


def estimate_phi3_vertex(loops: int, n_samples: int, seed: int = 0, workers: int = 1, *,
                         legs: int = 3, chunk_size: int = 1_000_000,
                         tables_file=None) -> EstimateReport:
    """Cubic-theory n-point coefficient at D=3, zero momenta, unit mass:
    the sector normalization times the sample mean of the residual
    integrand."""
    k, d = 3, 3
    if loops < 1:
        raise InvalidSectorError("estimator needs loops >= 1")
    if legs < 2:
        raise InvalidSectorError(
            f"omega({loops},{legs}) sector is outside the built grids (n >= 2 required)"
        )
    if tables_file is not None:
        source = ("file", str(tables_file))
        tables = load(tables_file, k=k, dimension=d, mode="plain")
        if tables.l_max < loops or tables.n_max < legs:
            raise InvalidSectorError("table file does not cover the requested sector")
    else:
        source = ("build", (k, str(d), "plain", loops, legs))
        tables = _resolve_tables(source)
    norm = tables.z(loops, legs)
    if not norm > 0:
        raise InvalidSectorError(f"Z({loops},{legs}) = {norm} is not positive")
    t0 = time.perf_counter()
    spec = EstimatorSpec("phi3", source, loops, legs, n_samples, seed)
    acc, _ = run_parallel(spec, workers=workers, chunk_size=chunk_size)
    elapsed = time.perf_counter() - t0
    return EstimateReport(
        quantity="phi3-vertex",
        k=k,
        dimension=float(d),
        loops=loops,
        legs=legs,
        samples=acc.count,
        aux_hits=acc.aux_count,
        value=norm * acc.mean,
        stderr=norm * acc.stderr,
        normalization=norm,
        seconds=elapsed,
    )


def estimate_beta_prim(loops: int, n_samples: int, seed: int = 0, workers: int = 1, *,
                       chunk_size: int = 1_000_000, tables_file=None) -> EstimateReport:
    """Primitive 4-valent coupling-flow coefficient at D=4 and its tropical
    counterpart, from positive-mode samples in the logarithmic sector."""
    k, d, legs = 4, 4, 4
    if loops < 2:
        raise InvalidSectorError("primitive sector needs loops >= 2")
    if tables_file is not None:
        source = ("file", str(tables_file))
        tables = load(tables_file, k=k, dimension=d, mode="positive")
        if tables.l_max < loops or tables.n_max < legs:
            raise InvalidSectorError("table file does not cover the requested sector")
    else:
        source = ("build", (k, str(d), "positive", loops, legs))
        tables = _resolve_tables(source)
    if not tables.omega_is_zero(loops, legs):
        raise InvalidSectorError("primitive estimator expects a vanishing divergence degree")
    norm = 2.0 * tables.top_normalization(loops, legs)
    if not norm > 0:
        raise InvalidSectorError(f"sector ({loops},{legs}) carries no positive weight")
    t0 = time.perf_counter()
    spec = EstimatorSpec("beta", source, loops, legs, n_samples, seed)
    acc, acc_theta = run_parallel(spec, workers=workers, chunk_size=chunk_size)
    elapsed = time.perf_counter() - t0
    return EstimateReport(
        quantity="primitive-beta",
        k=k,
        dimension=float(d),
        loops=loops,
        legs=legs,
        samples=acc.count,
        aux_hits=acc.aux_count,
        value=norm * acc.mean,
        stderr=norm * acc.stderr,
        normalization=norm,
        seconds=elapsed,
        hepp_value=norm * acc_theta.mean,
        hepp_stderr=norm * acc_theta.stderr,
    )


def relative_error_bound(loops: int, legs: int, k: int, d: float) -> float:
    """A-priori bound on the expected relative error constant C2/C1, using
    2^edges for the spanning-tree count.  Diagnostic only."""
    ne = sector_edge_count(k, loops, legs)
    if ne <= 1:
        return 1.0
    om = omega(k, d, loops, legs)
    return (2.0**ne) ** (d / 2.0) * float(ne) ** om
