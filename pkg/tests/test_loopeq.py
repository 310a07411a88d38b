from fractions import Fraction as F

import pytest

from tropmc.errors import NonGenericDimensionError
from tropmc.loopeq import (
    TruncatedSeries,
    apply_inverse_pd,
    cross_check_tables,
    format_series,
    geometric_minus_one,
    loop_grading,
    monomial_weight,
    pd_eigenvalue,
    solve_gamma_tr,
    tree_seed,
)
from tropmc.tables import omega_fraction

# The low-order closed forms for the effective-action coefficients with
# couplings of degree 3..6 active, as rational functions of the dimension.
# Keys are (phi power, (m3, m4, m5, m6)).
PRINTED_TERMS = {
    (1, (1, 0, 0, 0)): lambda D: -1 / (D - 2),
    (0, (0, 1, 0, 0)): lambda D: 1 / (2 * (D - 2) ** 2),
    (0, (2, 0, 0, 0)): lambda D: 1 / ((D - 3) * (D - 4)),
    (1, (3, 0, 0, 0)): lambda D: (5 * D - 24) / ((D - 4) ** 2 * (D - 6)),
    (1, (0, 0, 1, 0)): lambda D: 1 / (2 * (D - 2) ** 2),
    (1, (1, 1, 0, 0)): lambda D: 2 * (2 * D - 5) / ((D - 2) * (D - 3) * (D - 4)),
    (2, (2, 0, 0, 0)): lambda D: -1 / (D - 4),
    (2, (0, 1, 0, 0)): lambda D: -1 / (2 * (D - 2)),
    (0, (1, 0, 1, 0)): lambda D: -2 / ((D - 2) * (D - 3) * (D - 4)),
    (0, (4, 0, 0, 0)): lambda D: -F(2, 3)
    * (-2400 + 1412 * D - 272 * D**2 + 17 * D**3)
    / ((D - 4) ** 3 * (D - 5) * (D - 6) * (D - 8)),
    (0, (0, 0, 0, 1)): lambda D: -1 / (6 * (D - 2) ** 3),
    (0, (0, 2, 0, 0)): lambda D: -(32 - 25 * D + 5 * D**2)
    / ((D - 2) ** 2 * (D - 3) * (D - 4) * (3 * D - 8)),
    (0, (2, 1, 0, 0)): lambda D: -(480 - 290 * D + 39 * D**2)
    / ((D - 2) * (D - 4) ** 2 * (D - 6) * (3 * D - 10)),
}


def test_pd_eigenvalue_is_twice_omega():
    # the diagonal eigenvalue on a sector monomial equals twice the sector's
    # superficial divergence degree
    for k in (3, 4, 5):
        for loops in range(0, 4):
            for legs in range(0, 6):
                if (2 * (loops - 1) + legs) % (k - 2) != 0:
                    continue
                m = (2 * (loops - 1) + legs) // (k - 2)
                if m < 0:
                    continue
                for d in (F(7, 3), F(9, 2), F(5)):
                    eig = pd_eigenvalue(legs, (m,), (k,), d)
                    assert eig == 2 * omega_fraction(k, d, loops, legs)


def test_pd_eigenvalue_bubble_sector():
    # phi^2 lam3^2 at D=5: 2 * omega(k=3, D=5, L=1, n=2) = -1
    assert pd_eigenvalue(2, (2,), (3,), F(5)) == -1
    assert 2 * omega_fraction(3, F(5), 1, 2) == -1


def test_tree_monomials_in_kernel():
    for k in (3, 4, 6):
        assert pd_eigenvalue(k, (1,), (k,), F(7, 2)) == 0
    seed = tree_seed((3,), 2)
    with pytest.raises(NonGenericDimensionError):
        apply_inverse_pd(seed, F(7, 2))


def test_apply_inverse_pd_linearity():
    a = TruncatedSeries((3,), 4, {(1, (1,)): F(2, 3), (2, (2,)): F(5)})
    b = TruncatedSeries((3,), 4, {(1, (1,)): F(1, 3), (0, (2,)): F(7)})
    d = F(9, 2)
    lhs = apply_inverse_pd(a + b, d)
    rhs = apply_inverse_pd(a, d) + apply_inverse_pd(b, d)
    assert lhs == rhs


def test_series_arithmetic_truncation():
    s = TruncatedSeries((3,), 2, {(1, (2,)): F(1)})
    t = TruncatedSeries((3,), 2, {(0, (1,)): F(1)})
    assert (s * t).coeffs == {}  # weight 3 > cap 2
    u = TruncatedSeries((3,), 4, {(1, (2,)): F(2)})
    v = TruncatedSeries((3,), 4, {(0, (1,)): F(3)})
    assert (u * v).coefficient(1, (3,)) == 6


def test_geometric_requires_couplings():
    pure_phi = TruncatedSeries((3,), 3, {(2, (0,)): F(1)})
    with pytest.raises(ValueError):
        geometric_minus_one(pure_phi)


@pytest.mark.parametrize("d", [F(7, 2), F(9)])
def test_printed_coefficients_generic(d):
    series = solve_gamma_tr((3, 4, 5, 6), d, max_weight=4)
    for (n, powers), formula in PRINTED_TERMS.items():
        assert series.coefficient(n, powers) == formula(d), (n, powers, d)


def test_printed_coefficients_at_five_low_weight():
    # D=5 is non-generic at interaction weight 4 (the quartic-in-lam3 terms
    # carry a (D-5) pole); weight <= 3 is generic there
    series = solve_gamma_tr((3, 4, 5, 6), F(5), max_weight=3)
    for (n, powers), formula in PRINTED_TERMS.items():
        if monomial_weight(powers, (3, 4, 5, 6)) <= 3:
            assert series.coefficient(n, powers) == formula(F(5)), (n, powers)


def test_weight_four_at_five_is_non_generic():
    with pytest.raises(NonGenericDimensionError):
        solve_gamma_tr((3, 4, 5, 6), F(5), max_weight=4)


def test_min_phi_power_does_not_change_kept_sectors():
    # D must be generic for the unrestricted run, vacuum sectors included
    full = solve_gamma_tr((3,), F(13, 7), max_weight=6)
    restricted = solve_gamma_tr((3,), F(13, 7), max_weight=6, min_phi_power=2)
    for (n, powers), c in restricted.coeffs.items():
        assert full.coefficient(n, powers) == c
    for (n, powers), c in full.coeffs.items():
        if n >= 2:
            assert restricted.coefficient(n, powers) == c
        else:
            assert restricted.coefficient(n, powers) == 0


def test_spec_example_values():
    series = solve_gamma_tr((3,), F(5), max_weight=3)
    assert series.coefficient(1, (1,)) == F(-1, 3)
    assert series.coefficient(2, (2,)) == -1
    assert series.coefficient(1, (3,)) == -1


def test_lam4_squared_value_at_five():
    series = solve_gamma_tr((4,), F(5), max_weight=4)
    assert series.coefficient(0, (2,)) == -F(32, 126)


def test_fixed_point_residual_is_zero():
    d = F(9, 2)
    series = solve_gamma_tr((3, 4), d, max_weight=4)
    rhs = geometric_minus_one(series.d2phi())
    seed = tree_seed((3, 4), 4)
    for (n, powers), c in series.coeffs.items():
        eig = pd_eigenvalue(n, powers, series.couplings, d)
        if eig == 0:
            assert c == seed.coefficient(n, powers)
        else:
            assert eig * c == rhs.coefficient(n, powers)
    # and nothing on the right-hand side is missing from the solution
    for (n, powers), c in rhs.coeffs.items():
        eig = pd_eigenvalue(n, powers, series.couplings, d)
        assert series.coefficient(n, powers) == c / eig


def test_solver_idempotent():
    d = F(7, 2)
    series = solve_gamma_tr((3,), d, max_weight=6)
    again = tree_seed((3,), 6) + apply_inverse_pd(geometric_minus_one(series.d2phi()), d)
    assert again == series


def test_loop_grading():
    assert loop_grading(3, (1,), (3,)) == 0  # tree vertex
    assert loop_grading(2, (2,), (3,)) == 1  # one-loop two-point
    assert loop_grading(0, (4,), (3,)) == 3


def test_cross_check_tables_small():
    # the vacuum sectors pole at D=3 (omega(2,0) = 0); exclude n < 2 exactly
    series = solve_gamma_tr((3,), F(3), max_weight=8, min_phi_power=2)
    report = cross_check_tables(series, 3, F(3), l_max=3)
    assert report.ok
    assert any(row[0] == 3 for row in report.rows)
    # boundary cell: coefficient of phi^3 lam3 times 3! equals 1
    series_val = dict(((r[0], r[1]), r[2]) for r in report.rows)
    assert series_val[(0, 3)] == pytest.approx(1.0)
    assert series_val[(1, 2)] == pytest.approx(2.0)


def test_cross_check_requires_single_coupling():
    series = solve_gamma_tr((3, 4), F(7, 2), max_weight=3)
    with pytest.raises(ValueError):
        cross_check_tables(series, 3, F(7, 2), l_max=1)


def test_format_series_lists_tree_level():
    series = solve_gamma_tr((3,), F(5), max_weight=1)
    text = format_series(series)
    assert "phi^3 lam3: 1/6" in text
    assert "L=1 phi lam3: -1/3" in text
