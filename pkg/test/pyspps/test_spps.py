from fractions import Fraction
from math import factorial
from test.pyspps.util import (
    any_seed,
    basis,
    delta2,
    delta2_basis,
    domain_lambdas,
    laguerre,
    laguerre_basis,
    max_relative_gap,
    random_float_cases,
    random_rational_case,
    unit_seed,
)

import numpy as np
import pytest

from pyspps.exception import (
    ArithmeticModeException,
    IndexOutOfRangeException,
    InsufficientOrderException,
    InvalidArgumentException,
    SeedResidualException,
    TableMismatchException,
    TableOverflowException,
)
from pyspps.oracle import oracle_solution
from pyspps.scalar import ArithmeticMode, GaussianRational
from pyspps.seed import certify_seed
from pyspps.seqgrid import CoefficientSet, Sequence, jacobi_residuals, relative_residual
from pyspps.spps import (
    SolutionKind,
    assemble_u1,
    assemble_u2,
    build_table,
    casoratian,
    default_max_order,
    delta2_x_closed_form,
    delta2_y_closed_form,
    eval_solution,
    laguerre_closed_form,
    laguerre_coefficients,
    laguerre_table_value,
    solution_with_initial,
)

RATIONAL = ArithmeticMode.RATIONAL


def test_delta2_tables_match_closed_forms(delta2_basis):
    c, table, _, _ = delta2_basis
    for k in range(7):
        for n in c.window.indices():
            assert table.x(2 * k, n) == delta2_x_closed_form(n, k)
            assert table.y(2 * k + 1, n) == delta2_y_closed_form(n, k)


def test_delta2_low_orders(delta2_basis):
    _, table, _, _ = delta2_basis
    assert [table.x(1, n) for n in range(5)] == [0, 1, 2, 3, 4]
    assert [table.x(2, n) for n in range(5)] == [0, 0, 1, 3, 6]
    assert [table.y(2, n) for n in range(5)] == [0, 1, 3, 6, 10]


def test_laguerre_table_identity(laguerre_basis):
    c, table, _, _ = laguerre_basis
    for k in range(1, 7):
        sign = (-1) ** k
        for n in c.window.indices():
            combined = sign * table.x(2 * k, n) - sign * table.y(2 * k - 1, n)
            assert combined == laguerre_table_value(n, k)


def test_laguerre_diagonal(laguerre_basis):
    _, table, _, _ = laguerre_basis
    for n in range(1, 13):
        assert (-1) ** (n - 1) * table.y(2 * n - 1, n) == Fraction(1, factorial(n))


def test_laguerre_first_orders(laguerre_basis):
    _, table, _, _ = laguerre_basis
    harmonic = [sum(Fraction(1, j) for j in range(1, n + 1)) for n in range(8)]
    for n in range(8):
        assert table.y(1, n) == harmonic[n]
        assert table.x(2, n) == harmonic[n] - n


@pytest.mark.parametrize("lam", ["1/3", 2, ["-1/2", "3/4"]])
def test_laguerre_polynomials(laguerre_basis, lam):
    _, _, u1, u2 = laguerre_basis
    exact = ArithmeticMode.RATIONAL.coerce(lam)
    a, b = eval_solution(u1, exact), eval_solution(u2, exact)
    for n in range(13):
        assert a[n] - exact * b[n] == laguerre_closed_form(n, exact)


def test_laguerre_closed_form_against_numpy():
    for n in range(10):
        coefficients = [0] * n + [1]
        for lam in (0.3, 2.5, 7.0):
            assert complex(laguerre_closed_form(n, lam)) == pytest.approx(
                np.polynomial.laguerre.lagval(lam, coefficients)
            )
    assert laguerre_coefficients(2) == (1, -2, Fraction(1, 2))


@pytest.mark.parametrize("center", ["left", "interior", "right"])
def test_truncation_blocks_vanish(center):
    rng = np.random.default_rng(31)
    for _ in range(10):
        c, _ = random_rational_case(rng)
        lo, hi = c.window.lo, c.window.hi
        n0 = {"left": lo, "interior": (lo + hi) // 2, "right": hi - 1}[center]
        seed = any_seed(c, 0, rng)
        table = build_table(c, seed, n0, max_order=default_max_order(c.window, n0) + 4)
        for n in c.window.indices():
            u1_terms = n - n0 if n > n0 else n0 - n + 1
            for k in range(u1_terms, table.max_order // 2 + 1):
                assert table.x(2 * k, n) == 0
            for k in range(abs(n - n0), (table.max_order - 1) // 2 + 1):
                assert table.y(2 * k + 1, n) == 0


def test_initial_conditions_exact():
    rng = np.random.default_rng(41)
    for _ in range(20):
        c, n0 = random_rational_case(rng)
        lambda0 = GaussianRational("1/2", -1)
        seed = any_seed(c, lambda0, rng)
        _, u1, u2 = basis(c, seed, n0)
        u0 = seed.u0
        for lam in (lambda0, GaussianRational(2, "1/5")):
            a, b = eval_solution(u1, lam), eval_solution(u2, lam)
            assert (a[n0], a[n0 + 1]) == (u0[n0], u0[n0 + 1])
            assert b[n0] == 0
            assert b[n0 + 1] == 1 / (c.p[n0] * u0[n0])
            assert all(v == 0 for v in jacobi_residuals(c, a, lam))
            assert all(v == 0 for v in jacobi_residuals(c, b, lam))


def test_random_float_cases():
    for c, lambda0, n0, lam, rng in random_float_cases():
        seed = any_seed(c, lambda0, rng)
        _, u1, u2 = basis(c, seed, n0)
        u0 = seed.u0
        for mu in domain_lambdas(rng):
            a, b = eval_solution(u1, mu), eval_solution(u2, mu)
            assert a[n0] == pytest.approx(u0[n0], rel=1e-12)
            assert a[n0 + 1] == pytest.approx(u0[n0 + 1], rel=1e-12)
            assert abs(b[n0]) == 0
            assert b[n0 + 1] == pytest.approx(1 / (c.p[n0] * u0[n0]), rel=1e-12)
            assert relative_residual(c, a, mu) <= 1e-10
            assert relative_residual(c, b, mu) <= 1e-10
        a, b = eval_solution(u1, lam), eval_solution(u2, lam)
        lo = c.window.lo
        assert max_relative_gap(a, oracle_solution(c, lam, (a[lo], a[lo + 1]))) < 1e-6
        assert max_relative_gap(b, oracle_solution(c, lam, (b[lo], b[lo + 1]))) < 1e-6


def test_casoratian_is_constant():
    rng = np.random.default_rng(51)
    c, n0 = random_rational_case(rng)
    seed = any_seed(c, 0, rng)
    _, u1, u2 = basis(c, seed, n0)
    lam = GaussianRational(1, 1)
    a, b = eval_solution(u1, lam), eval_solution(u2, lam)
    values = {c.p[n] * casoratian(c, a, b, n) for n in range(c.window.lo, c.window.hi)}
    assert values == {GaussianRational(1)}
    with pytest.raises(IndexOutOfRangeException):
        casoratian(c, a, b, c.window.hi)


def test_solution_with_initial():
    rng = np.random.default_rng(61)
    c, n0 = random_rational_case(rng)
    seed = any_seed(c, 0, rng)
    _, u1, u2 = basis(c, seed, n0)
    lam = GaussianRational("-2/3")
    init = (GaussianRational(1, 2), GaussianRational(-3))
    u = solution_with_initial(u1, u2, lam, init)
    assert np.array_equal(u.values, oracle_solution(c, lam, init).values)


def test_lambda_poly_structure(delta2_basis):
    c, table, u1, u2 = delta2_basis
    assert u1.which is SolutionKind.U1 and u2.which is SolutionKind.U2
    assert u2.degree(0) == -1
    assert u1.degree(0) == 0
    assert u1.degree(12) == 11
    assert u2.degree(12) == 11
    assert list(u1.coefficients(3)) == [1, Fraction(3, 1), Fraction(1, 1)]
    assert u1.evaluate(3, -1) == 1 - 3 + 1
    with pytest.raises(IndexOutOfRangeException):
        u1.evaluate(13, 0)


def test_to_float_matches_exact(laguerre_basis):
    _, _, u1, u2 = laguerre_basis
    for sol in (u1, u2):
        f = sol.to_float()
        assert f.mode is ArithmeticMode.FLOAT
        exact = eval_solution(sol, "1/2")
        np.testing.assert_allclose(
            eval_solution(f, 0.5).values, RATIONAL.to_float_array(exact.values), rtol=1e-13
        )


def test_order_limits(delta2_basis):
    c, table, _, _ = delta2_basis
    assert table.max_order == default_max_order(c.window, 0) == 25
    with pytest.raises(InsufficientOrderException):
        table.x(26, 1)
    short = build_table(c, table.seed, 0, max_order=3)
    with pytest.raises(InsufficientOrderException):
        assemble_u1(short)
    with pytest.raises(InsufficientOrderException):
        assemble_u2(short)
    with pytest.raises(InvalidArgumentException):
        build_table(c, table.seed, 0, max_order=0)


def test_build_table_checks():
    c = delta2(8)
    seed = unit_seed(c)
    with pytest.raises(IndexOutOfRangeException):
        build_table(c, seed, 8)
    with pytest.raises(ArithmeticModeException):
        build_table(c.with_mode(ArithmeticMode.FLOAT), seed, 0)
    with pytest.raises(TableMismatchException):
        build_table(delta2(9), seed, 0)
    shifted = CoefficientSet.build(0, 8, lambda n: 1, lambda n: 1, lambda n: 1, RATIONAL)
    with pytest.raises(SeedResidualException):
        build_table(shifted, certify_seed(shifted, 0, Sequence.constant(0, 8, 1, RATIONAL)), 0)


def test_center_anywhere():
    c = laguerre(10)
    seed = unit_seed(c)
    reference = None
    for n0 in range(0, 10):
        _, u1, u2 = basis(c, seed, n0)
        a = eval_solution(u1, "1/4")
        assert all(v == 0 for v in jacobi_residuals(c, a, "1/4"))
        assert eval_solution(u2, "1/4")[n0] == 0
        if n0 == 0:
            reference = a
    assert reference[0] == 1


def test_shifted_construction_matches_unshifted():
    init = (1.0, 0.5j)
    for c, lambda0, n0, lam, rng in random_float_cases(50, seed=71):
        _, u1, u2 = basis(c, any_seed(c, 0, rng), n0)
        reference = solution_with_initial(u1, u2, lam, init)
        _, v1, v2 = basis(c, any_seed(c, lambda0, rng), n0)
        moved = c.shifted(lambda0)
        _, w1, w2 = basis(moved, any_seed(moved, 0, rng), n0)
        assert max_relative_gap(solution_with_initial(v1, v2, lam, init), reference) < 1e-8
        shifted = solution_with_initial(w1, w2, lam - lambda0, init)
        assert max_relative_gap(shifted, reference) < 1e-8


def test_large_coefficients_are_scaled():
    c = CoefficientSet.build(0, 150, lambda n: 1e-4, lambda n: 0, lambda n: 1)
    seed = certify_seed(c, 0, Sequence.constant(0, 150, 1))
    table, u1, u2 = basis(c, seed, 0)
    assert np.all(np.isfinite(table.X)) and np.all(np.isfinite(table.Y))
    assert u1.max_exponent() > 1024
    lam = 1e-5
    a = eval_solution(u1, lam)
    assert np.all(np.isfinite(a.values))
    assert np.abs(a.values).max() > 1e15
    assert relative_residual(c, a, lam) < 1e-10
    np.testing.assert_allclose(a.values, oracle_solution(c, lam, (a[0], a[1])).values, rtol=1e-9)
    assert np.all(np.isfinite(eval_solution(u1, -lam).values))


def test_overflowing_solution_is_reported():
    c = CoefficientSet.build(0, 150, lambda n: 1e-4, lambda n: 0, lambda n: 1)
    _, u1, _ = basis(c, certify_seed(c, 0, Sequence.constant(0, 150, 1)), 0)
    a = eval_solution(u1, 1)
    assert not np.all(np.isfinite(a.values))
    assert relative_residual(c, a, 1) == float("inf")


def test_non_finite_table_row_raises():
    c = CoefficientSet.build(0, 6, lambda n: 1e-320, lambda n: 0, lambda n: 1)
    seed = certify_seed(c, 0, Sequence.constant(0, 6, 1))
    with pytest.raises(TableOverflowException):
        build_table(c, seed, 0)
