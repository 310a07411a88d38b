"""Exact-arithmetic fixed point for the generating function of
bound-weighted graph ensembles, at a fixed rational dimension.

Monomials are (phi power n, coupling powers (m_k)).  The grading used for
truncation is the interaction weight w = sum_k m_k (k - 2): it is additive
under products, preserved by the diagonal operator, and bounds the loop
grading L = 1 + w/2 - n/2, so truncating by weight keeps the computation
finite and exact (a loop-grading cutoff alone admits infinitely many
monomials, e.g. one-loop necklaces of quartic vertices).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import NonGenericDimensionError

Monomial = tuple[int, tuple[int, ...]]


def monomial_weight(powers, couplings) -> int:
    return sum(m * (k - 2) for m, k in zip(powers, couplings))


def loop_grading(n: int, powers, couplings) -> Fraction:
    """1 + sum_k m_k (k-2)/2 - n/2; an integer on realizable monomials."""
    return 1 + Fraction(monomial_weight(powers, couplings), 2) - Fraction(n, 2)


def pd_eigenvalue(n: int, powers, couplings, d: Fraction) -> Fraction:
    """Diagonal action of the loop-equation operator on phi^n prod lam^m:
    -D - (1 - D/2) n + sum_k (k - D(k/2 - 1)) m_k, which equals twice the
    superficial divergence degree of any graph in that sector."""
    d = Fraction(d)
    acc = -d - (1 - d / 2) * n
    for m, k in zip(powers, couplings):
        acc += (k - d * Fraction(k - 2, 2)) * m
    return acc


class TruncatedSeries:
    """Multivariate truncated power series with exact rational coefficients.

    No zero coefficients are stored; all monomials satisfy
    monomial_weight <= max_weight.
    """

    __slots__ = ("couplings", "max_weight", "coeffs")

    def __init__(self, couplings, max_weight: int, coeffs=None):
        self.couplings = tuple(sorted(set(int(k) for k in couplings)))
        if any(k < 3 for k in self.couplings):
            raise ValueError("couplings must have degree >= 3")
        self.max_weight = int(max_weight)
        self.coeffs: dict[Monomial, Fraction] = {}
        if coeffs:
            for key, val in coeffs.items():
                self._set(key, Fraction(val))

    def _set(self, key: Monomial, val: Fraction):
        n, powers = key
        if monomial_weight(powers, self.couplings) > self.max_weight:
            return
        if val:
            self.coeffs[key] = val
        else:
            self.coeffs.pop(key, None)

    def coefficient(self, n: int, powers) -> Fraction:
        return self.coeffs.get((n, tuple(powers)), Fraction(0))

    def _blank(self) -> "TruncatedSeries":
        return TruncatedSeries(self.couplings, self.max_weight)

    def __eq__(self, other):
        return (
            isinstance(other, TruncatedSeries)
            and self.couplings == other.couplings
            and self.coeffs == other.coeffs
        )

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        out = self._blank()
        out.coeffs = dict(self.coeffs)
        for key, val in other.coeffs.items():
            new = out.coeffs.get(key, Fraction(0)) + val
            if new:
                out.coeffs[key] = new
            else:
                out.coeffs.pop(key, None)
        return out

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        out = self._blank()
        acc = out.coeffs
        couplings = self.couplings
        wmax = self.max_weight
        weights_b = {
            key: monomial_weight(key[1], couplings) for key in other.coeffs
        }
        for (na, pa), ca in self.coeffs.items():
            wa = monomial_weight(pa, couplings)
            for (nb, pb), cb in other.coeffs.items():
                if wa + weights_b[(nb, pb)] > wmax:
                    continue
                key = (na + nb, tuple(x + y for x, y in zip(pa, pb)))
                new = acc.get(key, Fraction(0)) + ca * cb
                if new:
                    acc[key] = new
                else:
                    acc.pop(key, None)
        return out

    def d2phi(self) -> "TruncatedSeries":
        """Second derivative in the field variable."""
        out = self._blank()
        for (n, powers), c in self.coeffs.items():
            if n >= 2:
                out._set((n - 2, powers), c * n * (n - 1))
        return out

    def sorted_items(self):
        def order(item):
            (n, powers), _ = item
            return (loop_grading(n, powers, self.couplings), n, powers)

        return sorted(self.coeffs.items(), key=order)


def tree_seed(couplings, max_weight: int) -> TruncatedSeries:
    """sum_k lam_k phi^k / k!, the single-vertex boundary data."""
    out = TruncatedSeries(couplings, max_weight)
    for i, k in enumerate(out.couplings):
        powers = tuple(1 if j == i else 0 for j in range(len(out.couplings)))
        out._set((k, powers), Fraction(1, math.factorial(k)))
    return out


def geometric_minus_one(x: TruncatedSeries) -> TruncatedSeries:
    """(1 - x)^(-1) - 1 = x + x^2 + ...; terminates because every monomial
    of x carries interaction weight >= 1."""
    if any(monomial_weight(p, x.couplings) == 0 for (_, p) in x.coeffs):
        raise ValueError("geometric series needs every monomial to carry a coupling")
    out = x._blank()
    power = x
    while power.coeffs:
        out = out + power
        power = power * x
    return out


def apply_inverse_pd(series: TruncatedSeries, d) -> TruncatedSeries:
    """Divide each monomial by its diagonal eigenvalue; a vanishing
    eigenvalue on a nonzero coefficient is a non-generic dimension."""
    dfrac = Fraction(d)
    out = series._blank()
    for (n, powers), c in series.coeffs.items():
        eig = pd_eigenvalue(n, powers, series.couplings, dfrac)
        if eig == 0:
            raise NonGenericDimensionError(
                f"eigenvalue vanishes at D={dfrac} on phi^{n} {powers}",
                subject=(n, powers),
            )
        out._set((n, powers), c / eig)
    return out


def solve_gamma_tr(couplings, d, max_weight: int, max_loops=None,
                   min_phi_power: int = 0) -> TruncatedSeries:
    """Iterate P <- seed + PD^(-1)((1 - P'')^(-1) - 1) to its fixed point.

    Each application fills one more loop order, so the iteration stabilizes
    after at most max_weight/2 + 2 rounds; stability is tested exactly.
    With `max_loops` set, monomials of higher loop grading are dropped from
    the returned series (the computation itself is truncated by weight).

    Monomials with fewer than `min_phi_power` powers of the field never feed
    back into the fixed point (the second derivative annihilates them), so
    they may be dropped exactly; `min_phi_power=2` skips the vacuum and
    one-point sectors, whose eigenvalues vanish at some physical dimensions.
    """
    dfrac = Fraction(d)
    seed = tree_seed(couplings, max_weight)
    current = TruncatedSeries(seed.couplings, max_weight)
    for _ in range(max_weight // 2 + 3):
        rhs = geometric_minus_one(current.d2phi())
        if min_phi_power:
            kept = rhs._blank()
            for (n, powers), c in rhs.coeffs.items():
                if n >= min_phi_power:
                    kept._set((n, powers), c)
            rhs = kept
        new = seed + apply_inverse_pd(rhs, dfrac)
        if new == current:
            break
        current = new
    else:
        raise RuntimeError("fixed-point iteration did not stabilize")
    if max_loops is not None:
        out = current._blank()
        for (n, powers), c in current.coeffs.items():
            if loop_grading(n, powers, current.couplings) <= max_loops:
                out._set((n, powers), c)
        return out
    return current


@dataclass
class CrossCheckReport:
    rows: list
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def cross_check_tables(series: TruncatedSeries, k: int, d, l_max: int,
                       rel_tol: float = 1e-10) -> CrossCheckReport:
    """Verify n! * coefficient(phi^n lam_k^m) against the floating grid
    Z(L, n) on every cell both computations cover."""
    from .tables import build

    if series.couplings != (k,):
        raise ValueError("cross-check needs a series with only one active coupling")
    dfrac = Fraction(d)
    n_top = series.max_weight
    tables = build(k, dfrac, "plain", l_max, max(2, n_top))
    rows = []
    failures = []
    for loops in range(0, l_max + 1):
        for legs in range(2, series.max_weight - 2 * (loops - 1) + 1):
            if (2 * (loops - 1) + legs) % (k - 2) != 0:
                continue
            m = (2 * (loops - 1) + legs) // (k - 2)
            if m < 0:
                continue
            series_val = float(
                series.coefficient(legs, (m,)) * math.factorial(legs)
            )
            table_val = tables.z(loops, legs)
            scale = max(abs(series_val), abs(table_val), 1e-300)
            ok = abs(series_val - table_val) <= rel_tol * scale or (
                series_val == table_val == 0.0
            )
            rows.append((loops, legs, series_val, table_val, ok))
            if not ok:
                failures.append((loops, legs, series_val, table_val))
    return CrossCheckReport(rows, failures)


def format_series(series: TruncatedSeries) -> str:
    """Monomial -> coefficient lines sorted by loop order."""
    names = {k: f"lam{k}" for k in series.couplings}
    lines = []
    for (n, powers), c in series.sorted_items():
        parts = []
        if n:
            parts.append(f"phi^{n}" if n > 1 else "phi")
        for k, m in zip(series.couplings, powers):
            if m:
                parts.append(f"{names[k]}^{m}" if m > 1 else names[k])
        mono = " ".join(parts) if parts else "1"
        grade = loop_grading(n, powers, series.couplings)
        lines.append(f"L={grade} {mono}: {c}")
    return "\n".join(lines)
