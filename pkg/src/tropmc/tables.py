"""Coefficient grids for the tropical measure, filled loop by loop.

Two grids are maintained per (vertex degree k, dimension, mode): the
bridge-free ensemble normalizations Z(L, n) and the chained ("beaded")
ensemble normalizations B(L, n).  They satisfy

    Z(L, n) = B(L-1, n+2) / (2 * omega(L, n))          for L >= 1,
    B(L, n) = Z(L, n)
            + sum_{n'=0}^{n-2} sum_{L'=0}^{L} C(n-2, n') Z(L', n'+2) B(L-L', n-n'),

with boundary Z(0, k) = 1 and Z(0, m) = 0 otherwise.  A grid cell (L, n)
only ever reads cells of weight n' + 2L' <= n + 2L, so a build for the
rectangle L <= l_max, n <= n_max internally extends each row to
n <= n_max + 2 (l_max - L), which closes all dependencies.

In positive mode, Z(L, n) is forced to 0 whenever omega(L, n) <= 0 for
L >= 1; the projective top-level slot B(L-1, n+2)/2 is exposed separately
for the omega = 0 sectors (`top_normalization`).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import InvalidSectorError, NonGenericDimensionError, TableFormatError

_FORMAT_VERSION = 1


def _check_sector(k: int, loops: int, legs: int) -> None:
    if k < 3:
        raise InvalidSectorError(f"vertex degree k={k} must be >= 3")
    if loops < 0 or legs < 0:
        raise InvalidSectorError(f"negative sector ({loops},{legs})")
    if (2 * (loops - 1) + legs) % (k - 2) != 0:
        raise InvalidSectorError(
            f"sector ({loops},{legs}) not realizable for k={k}: vertex count not integral"
        )


def sector_vertex_count(k: int, loops: int, legs: int) -> int:
    """Vertices of a connected k-regular graph with `loops` loops, `legs` legs."""
    _check_sector(k, loops, legs)
    return (2 * (loops - 1) + legs) // (k - 2)


def sector_edge_count(k: int, loops: int, legs: int) -> int:
    """Internal edges of a connected k-regular graph in the sector."""
    _check_sector(k, loops, legs)
    return ((loops - 1) * k + legs) // (k - 2)


def omega(k: int, d: float, loops: int, legs: int) -> float:
    """Superficial divergence degree ((L-1)k + n)/(k-2) - L*D/2 of the sector."""
    _check_sector(k, loops, legs)
    return ((loops - 1) * k + legs) / (k - 2) - loops * d / 2.0


def omega_fraction(k: int, d: Fraction, loops: int, legs: int) -> Fraction:
    _check_sector(k, loops, legs)
    return Fraction((loops - 1) * k + legs, k - 2) - Fraction(loops) * d / 2


class AliasSampler:
    """Constant-time draws from a fixed discrete distribution (Walker/Vose)."""

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("need a non-empty 1-d probability vector")
        if np.any(p < 0) or not np.isfinite(p).all():
            raise ValueError("probabilities must be finite and non-negative")
        total = float(p.sum())
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"probabilities sum to {total}, not 1")
        n = p.size
        scaled = p * (n / total)
        prob = np.ones(n, dtype=np.float64)
        alias = np.arange(n, dtype=np.int64)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        self._prob = prob
        self._alias = alias
        self.size = n

    def draw(self, u: float) -> int:
        """Map one uniform in [0, 1) to an outcome index."""
        x = u * self.size
        i = int(x)
        if x - i < self._prob[i]:
            return i
        return int(self._alias[i])

    def reconstructed_probabilities(self) -> np.ndarray:
        """Invert the table; matches the input within rounding."""
        p = self._prob.copy()
        out = p / self.size
        np.add.at(out, self._alias, (1.0 - p) / self.size)
        return out


class CoefficientTables:
    def __init__(self, k, dimension_fraction, mode, l_max, n_max, z, b, nongeneric):
        self.k = k
        self.dimension_fraction = dimension_fraction
        self.dimension = float(dimension_fraction)
        self.mode = mode
        self.l_max = l_max
        self.n_max = n_max
        self._z = z
        self._b = b
        self.nongeneric_cells = list(nongeneric)
        self._alias_cache: dict[tuple[int, int], AliasSampler] = {}

    # row L is valid for 2 <= n <= row_limit(L); row 0 starts at n = 0
    def row_limit(self, loops: int) -> int:
        return self.n_max + 2 * (self.l_max - loops)

    def _cell(self, grid, loops, legs, name):
        if not (0 <= loops <= self.l_max) or legs < 0 or legs > self.row_limit(loops):
            raise InvalidSectorError(
                f"{name}({loops},{legs}) outside the built grid "
                f"(l_max={self.l_max}, row limit {self.row_limit(max(0, min(loops, self.l_max)))})"
            )
        if loops > 0 and legs < 2:
            raise InvalidSectorError(f"{name}({loops},{legs}): columns n < 2 are not built")
        val = grid[loops, legs]
        if math.isnan(val):
            raise NonGenericDimensionError(
                f"{name}({loops},{legs}) depends on a vanishing divergence degree; "
                f"non-generic cells: {self.nongeneric_cells}",
                subject=(loops, legs),
            )
        return float(val)

    def z(self, loops: int, legs: int) -> float:
        return self._cell(self._z, loops, legs, "Z")

    def b(self, loops: int, legs: int) -> float:
        return self._cell(self._b, loops, legs, "B")

    def omega(self, loops: int, legs: int) -> float:
        return omega(self.k, self.dimension, loops, legs)

    def omega_is_zero(self, loops: int, legs: int) -> bool:
        return omega_fraction(self.k, self.dimension_fraction, loops, legs) == 0

    def top_normalization(self, loops: int, legs: int) -> float:
        """Projective-gauge normalization B(L-1, n+2)/2 for omega = 0 sectors
        (positive mode only); the regular Z slot stays 0 there."""
        if self.mode != "positive":
            raise InvalidSectorError("top_normalization is a positive-mode concept")
        if not self.omega_is_zero(loops, legs):
            raise InvalidSectorError(
                f"top_normalization({loops},{legs}): omega != 0, use z()"
            )
        if loops < 1:
            raise InvalidSectorError("top_normalization needs loops >= 1")
        return 0.5 * self.b(loops - 1, legs + 2)

    def outcome_probabilities(self, loops: int, legs: int) -> np.ndarray:
        """Distribution over 1 + (L+1)(n-1) chain outcomes at cell (L, n):
        index 0 is the bridge-free outcome, index 1 + L'(n-1) + n' the split
        (L', n')."""
        bval = self.b(loops, legs)
        if not bval > 0:
            raise InvalidSectorError(f"B({loops},{legs}) = {bval} is not positive")
        n, L = legs, loops
        probs = np.zeros(1 + (L + 1) * (n - 1))
        probs[0] = self.z(loops, legs) / bval
        comb = np.array([math.comb(n - 2, j) for j in range(n - 1)])
        zblk = self._z[0 : L + 1, 2 : n + 1]
        bblk = self._b[L::-1, n:1:-1]
        block = (comb[None, :] * zblk * bblk) / bval
        probs[1:] = block.reshape(-1)
        if not np.isfinite(probs).all():
            raise NonGenericDimensionError(
                f"outcome probabilities at ({loops},{legs}) touch non-generic cells",
                subject=(loops, legs),
            )
        return probs

    def alias_sampler(self, loops: int, legs: int) -> AliasSampler:
        key = (loops, legs)
        samp = self._alias_cache.get(key)
        if samp is None:
            samp = AliasSampler(self.outcome_probabilities(loops, legs))
            self._alias_cache[key] = samp
        return samp

    @property
    def hypothesis_ok(self) -> bool:
        """True if omega(L, n) > 0 on every built cell with L >= 1 (the
        finiteness hypothesis, under which all entries are non-negative)."""
        return self._hypothesis_ok

    # -- persistence -----------------------------------------------------

    def save(self, path) -> None:
        if self.nongeneric_cells:
            raise TableFormatError("refusing to save tables with non-generic cells")
        lines = [
            f"tropmc-tables {_FORMAT_VERSION}",
            f"k {self.k}",
            f"dimension {self.dimension_fraction}",
            f"mode {self.mode}",
            f"l_max {self.l_max}",
            f"n_max {self.n_max}",
        ]
        for grid in (self._z, self._b):
            for row in grid:
                lines.append(" ".join(repr(float(x)) for x in row))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path, k=None, dimension=None, mode=None):
        with open(path) as fh:
            lines = fh.read().splitlines()
        try:
            magic, version = lines[0].split()
            if magic != "tropmc-tables" or int(version) != _FORMAT_VERSION:
                raise TableFormatError(f"unsupported table file header: {lines[0]!r}")
            header = {}
            for line in lines[1:6]:
                key, _, val = line.partition(" ")
                header[key] = val
            kk = int(header["k"])
            dfrac = Fraction(header["dimension"])
            md = header["mode"]
            l_max = int(header["l_max"])
            n_max = int(header["n_max"])
            rows = l_max + 1
            cols = n_max + 2 * l_max + 1
            body = lines[6:]
            if len(body) != 2 * rows:
                raise TableFormatError(f"expected {2 * rows} grid rows, found {len(body)}")
            data = [[float(x) for x in line.split()] for line in body]
            if any(len(r) != cols for r in data):
                raise TableFormatError("grid row length mismatch")
        except (IndexError, KeyError, ValueError) as exc:
            raise TableFormatError(f"malformed table file {path}: {exc}") from exc
        if k is not None and k != kk:
            raise TableFormatError(f"table file has k={kk}, expected {k}")
        if dimension is not None and Fraction(dimension) != dfrac:
            raise TableFormatError(f"table file has dimension {dfrac}, expected {dimension}")
        if mode is not None and mode != md:
            raise TableFormatError(f"table file has mode {md!r}, expected {mode!r}")
        z = np.array(data[:rows])
        b = np.array(data[rows:])
        tables = cls(kk, dfrac, md, l_max, n_max, z, b, [])
        tables._hypothesis_ok = _hypothesis_holds(kk, dfrac, l_max, n_max)
        return tables


def _hypothesis_holds(k, dfrac, l_max, n_max) -> bool:
    n0 = n_max + 2 * l_max
    for loops in range(1, l_max + 1):
        for legs in range(2, n0 - 2 * loops + 1):
            if (2 * (loops - 1) + legs) % (k - 2) != 0:
                continue
            if omega_fraction(k, dfrac, loops, legs) <= 0:
                return False
    return True


def build(k: int, dimension, mode: str = "plain", l_max: int = 0, n_max: int = 2,
          on_nongeneric: str = "raise") -> CoefficientTables:
    """Fill the coefficient grids up to the rectangle (l_max, n_max).

    `dimension` may be an int, float, Fraction, or 'p/q' string; zero tests
    on divergence degrees are exact.  In plain mode a cell with vanishing
    divergence degree raises NonGenericDimensionError (or, with
    on_nongeneric='poison', is stored as NaN together with everything
    downstream of it, and reported in `nongeneric_cells`).
    """
    if mode not in ("plain", "positive"):
        raise ValueError(f"unknown mode {mode!r}")
    if on_nongeneric not in ("raise", "poison"):
        raise ValueError(f"unknown on_nongeneric {on_nongeneric!r}")
    if k < 3:
        raise InvalidSectorError(f"vertex degree k={k} must be >= 3")
    if l_max < 0 or n_max < 2:
        raise ValueError("need l_max >= 0 and n_max >= 2")
    dfrac = Fraction(dimension) if not isinstance(dimension, Fraction) else dimension
    dfloat = float(dfrac)

    n0 = n_max + 2 * l_max
    z = np.full((l_max + 1, n0 + 1), np.nan)
    b = np.full((l_max + 1, n0 + 1), np.nan)
    nongeneric: list[tuple[int, int]] = []
    pascal = [np.array([math.comb(m, j) for j in range(m + 1)], dtype=np.float64)
              for m in range(n0 + 1)]

    # boundary row: single-vertex graphs only
    z[0, :] = 0.0
    if k <= n0:
        z[0, k] = 1.0
    b[0, 0:2] = 0.0
    for n in range(2, n0 + 1):
        acc = z[0, n]
        if n - k >= 0 and k - 2 <= n - 2:
            acc += pascal[n - 2][k - 2] * z[0, k] * b[0, n - k + 2]
        b[0, n] = acc

    for loops in range(1, l_max + 1):
        nl = n0 - 2 * loops
        b[loops, 0:2] = 0.0
        for n in range(2, nl + 1):
            if (2 * (loops - 1) + n) % (k - 2) != 0:
                z[loops, n] = 0.0
                continue
            om = omega_fraction(k, dfrac, loops, n)
            upstream = b[loops - 1, n + 2]
            if mode == "positive" and om <= 0:
                z[loops, n] = 0.0
            elif om == 0:
                if upstream == 0.0:
                    z[loops, n] = 0.0
                elif on_nongeneric == "raise":
                    raise NonGenericDimensionError(
                        f"omega({loops},{n}) = 0 at D={dfrac} in plain mode",
                        subject=(loops, n),
                    )
                else:
                    nongeneric.append((loops, n))
                    z[loops, n] = np.nan
            else:
                z[loops, n] = upstream / (2.0 * float(om))
        for n in range(2, nl + 1):
            b[loops, n] = 0.0
            zblk = z[0 : loops + 1, 2 : n + 1]
            bblk = b[loops::-1, n:1:-1]
            s = float(np.sum(pascal[n - 2][None, :] * zblk * bblk))
            b[loops, n] = z[loops, n] + s

    tables = CoefficientTables(k, dfrac, mode, l_max, n_max, z, b, nongeneric)
    tables._hypothesis_ok = _hypothesis_holds(k, dfrac, l_max, n_max)
    _validate_grids(tables)
    return tables


def _validate_grids(tables: CoefficientTables) -> None:
    finite_z = tables._z[np.isfinite(tables._z)]
    finite_b = tables._b[np.isfinite(tables._b)]
    if tables.mode == "positive" or tables.hypothesis_ok:
        if np.any(finite_z < 0) or np.any(finite_b < 0):
            raise AssertionError(
                "internal consistency: negative grid entry despite positivity hypothesis"
            )


def save(tables: CoefficientTables, path) -> None:
    tables.save(path)


def load(path, k=None, dimension=None, mode=None) -> CoefficientTables:
    return CoefficientTables.load(path, k=k, dimension=dimension, mode=mode)
