from test.pyspps.util import delta2, random_float_cases, random_rational_case

import numpy as np
import pytest

import pyspps.seed
from pyspps.exception import (
    IndexOutOfRangeException,
    InvalidArgumentException,
    NonRealCoefficientsException,
    SeedNotFoundException,
    SeedVanishesException,
)
from pyspps.scalar import ArithmeticMode, GaussianRational
from pyspps.seed import (
    build_seed_complex,
    build_seed_search,
    certify_seed,
    default_rng,
    polya_residual,
    solve_recurrence,
)
from pyspps.seqgrid import CoefficientSet, Sequence, apply_jacobi, jacobi_residuals

RATIONAL = ArithmeticMode.RATIONAL


def test_solve_recurrence_is_exact():
    rng = np.random.default_rng(3)
    for _ in range(20):
        c, _ = random_rational_case(rng)
        u = solve_recurrence(c, GaussianRational(1, -1), 2, GaussianRational(0, 1))
        assert (u.start, u.stop) == (c.window.lo, c.window.hi)
        assert all(v == 0 for v in jacobi_residuals(c, u, GaussianRational(1, -1)))


def test_certify_seed():
    c = delta2(6)
    seed = certify_seed(c, 0, Sequence.constant(0, 6, 1, RATIONAL))
    assert seed.residual_bound == 0
    assert seed.relative_residual == 0
    assert seed.min_abs == 1
    assert seed.method == "explicit"
    assert seed.is_constant_one()
    assert seed.mode is RATIONAL


def test_certify_seed_reports_zeros():
    c = delta2(6)
    with pytest.raises(SeedVanishesException, match=r"\[0\]"):
        certify_seed(c, 0, Sequence.from_function(0, 6, lambda n: n, RATIONAL))


def test_certify_seed_needs_full_window():
    c = delta2(6)
    with pytest.raises(IndexOutOfRangeException):
        certify_seed(c, 0, Sequence.constant(0, 5, 1, RATIONAL))


def test_certify_seed_measures_residual():
    c = CoefficientSet.build(0, 6, lambda n: 1, lambda n: 1, lambda n: 1)
    seed = certify_seed(c, 0, Sequence.constant(0, 6, 1))
    assert seed.residual_bound == pytest.approx(1.0)
    assert seed.relative_residual == pytest.approx(1.0)


def test_complex_seed_for_real_problem():
    # Δ²u = 0 has the solution u(n) = n, which vanishes at 0; u + iv never does.
    c = delta2(10, ArithmeticMode.FLOAT)
    seed = build_seed_complex(c, 0)
    assert seed.method == "complex"
    assert seed.min_abs > 0
    assert seed.relative_residual < 1e-14


def test_complex_seed_for_real_problem_exact():
    c = CoefficientSet.build(
        -2, 9, lambda n: n * n + 1, lambda n: n - 3, lambda n: 1, RATIONAL
    )
    seed = build_seed_complex(c, "1/2")
    assert seed.residual_bound == 0
    assert all(v for v in seed.u0.values)


def test_complex_seed_refuses_complex_problem():
    c = CoefficientSet.build(0, 6, lambda n: 1 + 1j, lambda n: 0, lambda n: 1)
    with pytest.raises(NonRealCoefficientsException):
        build_seed_complex(c, 0)
    c = delta2(6, ArithmeticMode.FLOAT)
    with pytest.raises(NonRealCoefficientsException):
        build_seed_complex(c, 1j)


def test_seed_search_for_complex_problems():
    for c, lambda0, _, _, rng in random_float_cases(25, seed=5):
        seed = build_seed_search(c, lambda0, rng=rng)
        assert seed.method == "search"
        assert seed.min_abs > 0
        assert seed.relative_residual < 1e-12


def test_seed_search_exact():
    rng = np.random.default_rng(8)
    c, _ = random_rational_case(rng)
    seed = build_seed_search(c, GaussianRational(0, 1), rng=rng)
    assert seed.residual_bound == 0


def test_seed_search_is_reproducible(monkeypatch):
    monkeypatch.setenv("SPPS_SEED", "99")
    c = CoefficientSet.build(0, 8, lambda n: 1 + 0.5j, lambda n: 0.1, lambda n: 1)
    first = build_seed_search(c, 0)
    second = build_seed_search(c, 0)
    np.testing.assert_array_equal(first.u0.values, second.u0.values)


def test_default_rng_reads_environment(monkeypatch):
    monkeypatch.setenv("SPPS_SEED", "12")
    assert default_rng().integers(1 << 30) == np.random.default_rng(12).integers(1 << 30)
    monkeypatch.setenv("SPPS_SEED", "twelve")
    with pytest.raises(InvalidArgumentException):
        default_rng()


def test_seed_search_gives_up(monkeypatch):
    def vanishing(c, lam, first, second):
        values = [1] * c.window.length
        values[3] = 0
        return Sequence(c.window.lo, values, c.mode)

    monkeypatch.setattr(pyspps.seed, "solve_recurrence", vanishing)
    c = delta2(6, ArithmeticMode.FLOAT)
    with pytest.raises(SeedNotFoundException) as e:
        build_seed_search(c, 0, attempts=3)
    assert e.value.indices == [3, 3, 3]


def test_seed_search_attempts():
    with pytest.raises(InvalidArgumentException):
        build_seed_search(delta2(6, ArithmeticMode.FLOAT), 0, attempts=0)


def test_polya_factorization():
    rng = np.random.default_rng(21)
    for _ in range(10):
        c, _ = random_rational_case(rng)
        lambda0 = GaussianRational("1/2", 0)
        seed = build_seed_search(c, lambda0, rng=rng)
        lo, hi = c.window.lo, c.window.hi
        u = Sequence.from_function(lo, hi, lambda n: GaussianRational(n, 2), RATIONAL)
        lam = GaussianRational(-1, "1/3")
        for n in c.window.interior():
            assert polya_residual(c, seed, u, lam, n) == apply_jacobi(c, u, lam, n)
    with pytest.raises(IndexOutOfRangeException):
        polya_residual(c, seed, u, lam, lo)
