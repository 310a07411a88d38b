"""Exact bound values of single graphs, and how ensembles of them are
summed in two completely different ways.

The value attached to a graph here is the tropicalized parametric integral:
1 for edgeless graphs, and otherwise the sum over one-edge deletions
divided by the superficial divergence degree.  It factorizes over disjoint
unions and one-vertex gluings, and it equals a cube integral of
U_tropical^(-D/2), which we also estimate by plain Monte Carlo below.
"""

from fractions import Fraction as F

from tropmc import Graph, ensemble_sum_oracle, hepp_cubical_mc, hepp_exact

bubble = Graph(2, ((0, 1), (0, 1)))
triangle = Graph(3, ((0, 1), (1, 2), (2, 0)))

print("bubble value at D=3:", hepp_exact(bubble, F(3)))
print("bubble value at generic D=7/5:", hepp_exact(bubble, F(7, 5)), "= 4/(4-D)")
print("triangle value at D=3:", hepp_exact(triangle, F(3)))

two_bubbles = Graph(4, ((0, 1), (0, 1), (2, 3), (2, 3)))
print("disjoint union factorizes:", hepp_exact(two_bubbles, F(3)), "= 4 * 4")

mean, err = hepp_cubical_mc(triangle, 3.0, 500_000, seed=1)
print(f"cube integral for the triangle: {mean:.4f} +- {err:.4f} (exact: 2)")

# The ensemble sum weights every bridge-free connected 3-regular graph of a
# sector by its value over its automorphism count.  Z(1,2) is carried by the
# bubble alone, with a 2-fold edge swap symmetry.
print("ensemble Z(1,2) at D=3:", ensemble_sum_oracle(3, F(3), 1, 2))
print("ensemble Z(2,2) at D=3:", ensemble_sum_oracle(3, F(3), 2, 2))
print("ensemble Z(2,3) at D=3:", ensemble_sum_oracle(3, F(3), 2, 3))
