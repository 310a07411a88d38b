"""The polynomial-time coefficient grids and their exact-arithmetic twin.

Z(L, n) normalizes the tropical measure on the sector with L loops and n
legs; B(L, n) does the same for chained (beaded) graphs.  The grids are
filled loop by loop in O(L^2 (L+n)^2) time.  The same numbers arise as
series coefficients of a fixed-point equation solved in exact rational
arithmetic, which makes for a sharp cross-check.
"""

import time
from fractions import Fraction as F

from tropmc import build, cross_check_tables, solve_gamma_tr
from tropmc.loopeq import format_series

tab = build(3, 3, "plain", 6, 4)
print("Z(L,3) for L = 0..6 at k=3, D=3:")
for loops in range(7):
    print(f"  L={loops}: {tab.z(loops, 3):.9g}")

t0 = time.perf_counter()
big = build(4, 4, "positive", 50, 4)
print(f"\npositive-mode build to L=50 took {time.perf_counter() - t0:.3f}s")
print("chain normalization B(49,6) =", big.b(49, 6))

series = solve_gamma_tr((3,), F(3), max_weight=10, min_phi_power=2)
report = cross_check_tables(series, 3, F(3), l_max=4)
print(f"\nseries vs grids: {len(report.rows)} cells compared, ok={report.ok}")

print("\nlow-order multi-coupling series at D=9 (exact rationals):")
print(format_series(solve_gamma_tr((3, 4), F(9), max_weight=3)))
