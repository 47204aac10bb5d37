from test.pyspps.util import (
    any_seed,
    basis,
    delta2,
    dirichlet_eigenvalues,
    laguerre,
    laguerre_basis,
    tridiagonal,
    unit_seed,
)

import numpy as np
import pytest

from pyspps.exception import (
    DegenerateBoundaryException,
    IndexOutOfRangeException,
    InvalidArgumentException,
    NoConvergenceException,
    NotAnEigenvalueException,
    TableMismatchException,
)
from pyspps.scalar import ArithmeticMode, GaussianRational
from pyspps.seed import build_seed_complex, build_seed_search, certify_seed
from pyspps.seqgrid import CoefficientSet, IndexWindow, Sequence
from pyspps.spectral import (
    BoundaryCondition,
    BoundarySide,
    CharPoly,
    char_poly,
    eigenfunction,
    find_roots,
    solve_eigen,
)
from pyspps.spps import laguerre_coefficients

RATIONAL = ArithmeticMode.RATIONAL

LAGUERRE_BOUNDARY = BoundaryCondition(
    BoundarySide(0, -1, 1, alpha_lambda=1), BoundarySide(11, 0, 1)
)


def _delta2_problem(size, mode=RATIONAL):
    c = delta2(size, mode)
    _, u1, u2 = basis(c, unit_seed(c), 0)
    return c, u1, u2, BoundaryCondition.dirichlet(0, size)


@pytest.mark.parametrize("size", [4, 8, 12])
@pytest.mark.parametrize("mode", [ArithmeticMode.RATIONAL, ArithmeticMode.FLOAT])
def test_dirichlet_eigenvalues(size, mode):
    c, u1, u2, bc = _delta2_problem(size, mode)
    result = solve_eigen(c, u1, u2, bc)
    assert len(result) == size - 1
    assert result.all_converged
    np.testing.assert_allclose(result.eigenvalues.real, dirichlet_eigenvalues(size), atol=1e-10)
    np.testing.assert_array_equal(result.eigenvalues.imag, 0)
    assert np.all(result.residuals < 1e-10)
    assert not result.multiplicity_flags.any()


def test_dirichlet_eigenfunctions():
    c, u1, u2, bc = _delta2_problem(8)
    result = solve_eigen(c, u1, u2, bc)
    n = np.arange(9)
    for k, u in enumerate(result.eigenfunctions):
        assert abs(u[0]) < 1e-12 and abs(u[8]) < 1e-12
        assert np.max(np.abs(u.values)) == pytest.approx(1.0)
        # ascending eigenvalues run from the most oscillating sine mode down
        mode = np.sin((7 - k) * np.pi * n / 8)
        overlap = abs(np.vdot(mode, u.values)) / (np.linalg.norm(mode) * np.linalg.norm(u.values))
        assert overlap == pytest.approx(1.0, abs=1e-10)


def test_exact_char_poly_of_laguerre(laguerre_basis):
    c, _, u1, u2 = laguerre_basis
    poly = char_poly(u1, u2, LAGUERRE_BOUNDARY)
    assert poly.mode is RATIONAL
    assert poly.degree == 12
    reference = laguerre_coefficients(12)
    ratio = poly.coeffs[0] / reference[0]
    assert all(poly.coeffs[i] == ratio * reference[i] for i in range(13))
    assert poly.evaluate(0) == poly.coeffs[0]


def test_laguerre_eigenvalues():
    reference = np.sort(np.polynomial.laguerre.lagroots([0] * 12 + [1]).real)
    for mode in (ArithmeticMode.RATIONAL, ArithmeticMode.FLOAT):
        c = laguerre(12, mode)
        _, u1, u2 = basis(c, unit_seed(c), 0)
        result = solve_eigen(c, u1, u2, LAGUERRE_BOUNDARY)
        np.testing.assert_allclose(result.eigenvalues.real, reference, rtol=1e-8)
        assert np.all(result.residuals < 1e-8)


def test_laguerre_eigenfunctions_are_polynomial_values(laguerre_basis):
    c, _, u1, u2 = laguerre_basis
    result = solve_eigen(c, u1, u2, LAGUERRE_BOUNDARY)
    lam = result.eigenvalues[0]
    values = np.array([np.polynomial.laguerre.lagval(lam.real, [0] * n + [1]) for n in range(13)])
    values = values / values[np.argmax(np.abs(values))]
    np.testing.assert_allclose(result.eigenfunctions[0].values.real, values, atol=1e-8)


def test_complex_problem_against_matrix():
    rng = np.random.default_rng(17)
    for _ in range(10):
        size = int(rng.integers(5, 11))
        p = 1 + 0.4 * (rng.uniform(-1, 1, size) + 1j * rng.uniform(-1, 1, size))
        q = 0.3 * (rng.uniform(-1, 1, size) + 1j * rng.uniform(-1, 1, size))
        c = CoefficientSet.build(0, size, p, q, np.ones(size))
        seed = any_seed(c, 0, rng)
        n0 = int(rng.integers(0, size))
        _, u1, u2 = basis(c, seed, n0)
        result = solve_eigen(c, u1, u2, BoundaryCondition.dirichlet(0, size))
        expected = np.linalg.eigvals(tridiagonal(c))
        assert len(result) == len(expected)
        for lam in expected:
            assert np.min(np.abs(result.eigenvalues - lam)) < 1e-8
        assert np.all(result.residuals < 1e-8)


def test_eigenvalues_sorted():
    rng = np.random.default_rng(5)
    size = 9
    p = 1 + 0.3j * rng.uniform(-1, 1, size)
    c = CoefficientSet.build(0, size, p, np.zeros(size), np.ones(size))
    _, u1, u2 = basis(c, any_seed(c, 0, rng), 0)
    values = solve_eigen(c, u1, u2, BoundaryCondition.dirichlet(0, size)).eigenvalues
    keys = list(zip(values.real, values.imag))
    assert keys == sorted(keys)


def test_small_imaginary_parts_survive_for_complex_polynomials():
    shift = GaussianRational(0, "1/100000000000")
    c = CoefficientSet.build(0, 4, lambda n: 1, lambda n: shift, lambda n: 1, RATIONAL)
    # u0 = 1 solves the equation at λ0 = q
    seed = certify_seed(c, shift, Sequence.constant(0, 4, 1, RATIONAL))
    _, u1, u2 = basis(c, seed, 0)
    result = solve_eigen(c, u1, u2, BoundaryCondition.dirichlet(0, 4))
    np.testing.assert_allclose(result.eigenvalues.real, dirichlet_eigenvalues(4), atol=1e-12)
    np.testing.assert_allclose(result.eigenvalues.imag, 1e-11, rtol=1e-3)


def test_complex_seed_keeps_real_roots_real():
    c = delta2(8, ArithmeticMode.FLOAT)
    _, u1, u2 = basis(c, any_seed(c, 0.25), 3)
    result = solve_eigen(c, u1, u2, BoundaryCondition.dirichlet(0, 8))
    np.testing.assert_array_equal(result.eigenvalues.imag, 0)
    np.testing.assert_allclose(result.eigenvalues.real, dirichlet_eigenvalues(8), atol=1e-10)


def test_not_an_eigenvalue():
    c, u1, u2, bc = _delta2_problem(4)
    with pytest.raises(NotAnEigenvalueException):
        eigenfunction(u1, u2, bc, 0.5)
    u = eigenfunction(u1, u2, bc, -2)
    assert [round(abs(v), 12) for v in u.values] == [0, 1, 0, 1, 0]


def test_degenerate_boundary():
    c, u1, u2, _ = _delta2_problem(4)
    same = BoundaryCondition(BoundarySide(0, 0, 1), BoundarySide(1, 1, 0))
    with pytest.raises(DegenerateBoundaryException):
        char_poly(u1, u2, same)
    with pytest.raises(DegenerateBoundaryException):
        BoundarySide(2, 0, 0)
    with pytest.raises(DegenerateBoundaryException):
        BoundaryCondition(BoundarySide(2, 1, 0), BoundarySide(2, 0, 1))


def test_boundary_must_fit_window():
    bc = BoundaryCondition.dirichlet(0, 5)
    bc.check_window(IndexWindow(0, 5))
    with pytest.raises(IndexOutOfRangeException):
        bc.check_window(IndexWindow(0, 4))
    c, u1, u2, _ = _delta2_problem(4)
    with pytest.raises(IndexOutOfRangeException):
        char_poly(u1, u2, bc)


def test_basis_order_checked():
    c, u1, u2, bc = _delta2_problem(4)
    with pytest.raises(TableMismatchException):
        char_poly(u2, u1, bc)
    other = laguerre(4)
    _, v1, _ = basis(other, unit_seed(other), 1)
    with pytest.raises(TableMismatchException):
        char_poly(v1, u2, bc)


def test_lambda_dependent_boundary_raises_degree():
    c, u1, u2, _ = _delta2_problem(6)
    plain = char_poly(u1, u2, BoundaryCondition.dirichlet(0, 6))
    robin = BoundaryCondition(BoundarySide(0, 1, 0), BoundarySide(5, 0, 1, beta_lambda=1))
    assert char_poly(u1, u2, robin).degree == plain.degree + 1


def test_lambda_coefficients_shift():
    poly = CharPoly(RATIONAL.array([1, 2, 1]), GaussianRational(3), RATIONAL)
    # (λ - 3 + 1)² = λ² - 4λ + 4
    assert list(poly.lambda_coefficients()) == [4, -4, 1]
    assert poly.evaluate(2) == 0


def test_find_roots():
    roots = [1.0, -2.0, 0.5 + 3j, -1j]
    poly = CharPoly(np.polynomial.polynomial.polyfromroots(roots).astype(complex), 0j, ArithmeticMode.FLOAT)
    found = find_roots(poly)
    for root in roots:
        assert np.min(np.abs(found - root)) < 1e-12


def test_find_roots_shifted_and_scaled():
    poly = CharPoly(np.array([2, -3, 1], dtype=complex) * 2.0**-40, 5 + 0j, ArithmeticMode.FLOAT, exponent=40)
    found = np.sort(find_roots(poly).real)
    np.testing.assert_allclose(found, [6.0, 7.0])
    assert poly.evaluate(6) == pytest.approx(0)


def test_find_roots_reports_no_convergence():
    poly = CharPoly(np.polynomial.polynomial.polyfromroots(np.arange(1, 9)).astype(complex), 0j, ArithmeticMode.FLOAT)
    with pytest.raises(NoConvergenceException) as e:
        find_roots(poly, max_iter=1)
    assert len(e.value.roots) == 8
    assert e.value.unconverged


def test_find_roots_needs_degree():
    with pytest.raises(InvalidArgumentException):
        find_roots(CharPoly(np.array([1], dtype=complex), 0j, ArithmeticMode.FLOAT))


def test_boundary_serialization():
    side = BoundarySide(0, "1/2", [1, 2], alpha_lambda=-1)
    assert side.to_primitive() == {"site": 0, "alpha": "1/2", "beta": ["1", "2"], "alpha_lambda": "-1"}
    bc = BoundaryCondition(side, BoundarySide(4, 0.5, 1))
    assert BoundaryCondition.from_primitive(bc.to_primitive()) == bc
    assert not side.is_real()
    assert BoundaryCondition.dirichlet(0, 4).is_real()


@pytest.mark.parametrize("problem", ["constant", "variable"])
def test_eigenvalues_do_not_depend_on_center_or_seed(problem):
    if problem == "constant":
        c = delta2(10, ArithmeticMode.FLOAT)
    else:
        c = CoefficientSet.build(
            0, 10, lambda n: 1 + n / 10, lambda n: np.cos(n), lambda n: 1 + 0.5 * np.sin(n)
        )
    bc = BoundaryCondition.dirichlet(0, 10)
    seeds = [
        build_seed_complex(c, 0.3),
        build_seed_search(c, 0.3, rng=np.random.default_rng(83)),
    ]
    spectra = []
    for seed in seeds:
        for n0 in (0, 4, 9):
            _, u1, u2 = basis(c, seed, n0)
            spectra.append(solve_eigen(c, u1, u2, bc).eigenvalues)
    reference = spectra[0]
    assert len(reference) == 9
    if problem == "constant":
        np.testing.assert_allclose(reference.real, dirichlet_eigenvalues(10), atol=1e-10)
    for values in spectra[1:]:
        assert len(values) == len(reference)
        np.testing.assert_allclose(values, reference, rtol=0, atol=1e-8)
