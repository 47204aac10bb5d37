import math
from pathlib import Path
from typing import Iterator, List, Tuple

import numpy as np
import pytest

from pyspps.scalar import ArithmeticMode, GaussianRational
from pyspps.seed import (
    SeedSolution,
    build_seed_complex,
    build_seed_search,
    certify_seed,
)
from pyspps.seqgrid import CoefficientSet, Sequence
from pyspps.spps import LambdaPolySolution, SppsTable, assemble_u1, assemble_u2, build_table

PROBLEMS = Path(__file__).resolve().parents[2] / "problems"

RANDOM_CASES = 200


def problem_path(name: str) -> str:
    return str(PROBLEMS / name)


def delta2(hi: int, mode: ArithmeticMode = ArithmeticMode.RATIONAL, lo: int = 0) -> CoefficientSet:
    """``Δ²u = λu``: p ≡ 1, q ≡ 0, r ≡ 1."""
    return CoefficientSet.build(lo, hi, lambda n: 1, lambda n: 0, lambda n: 1, mode)


def laguerre(size: int, mode: ArithmeticMode = ArithmeticMode.RATIONAL) -> CoefficientSet:
    """p(n) = n + 1, q ≡ 0, r ≡ -1 on [0, size]."""
    return CoefficientSet.build(0, size, lambda n: n + 1, lambda n: 0, lambda n: -1, mode)


def unit_seed(c: CoefficientSet) -> SeedSolution:
    lo, hi = c.window.lo, c.window.hi
    return certify_seed(c, 0, Sequence.constant(lo, hi, 1, c.mode))


def any_seed(c: CoefficientSet, lambda0, rng=None) -> SeedSolution:
    if c.is_real(lambda0):
        return build_seed_complex(c, lambda0)
    return build_seed_search(c, lambda0, rng=rng)


def basis(
    c: CoefficientSet, seed: SeedSolution, n0: int
) -> Tuple[SppsTable, LambdaPolySolution, LambdaPolySolution]:
    table = build_table(c, seed, n0)
    return table, assemble_u1(table), assemble_u2(table)


def _complex_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.uniform(-1, 1, size) + 1j * rng.uniform(-1, 1, size)


def random_float_case(rng: np.random.Generator) -> Tuple[CoefficientSet, complex, int, complex]:
    """Random complex coefficients near the constant problem, with ``lambda0``, ``n0`` and a ``λ`` near ``lambda0``."""
    length = int(rng.integers(5, 41))
    lo = int(rng.integers(-3, 4))
    hi = lo + length - 1
    c = CoefficientSet.build(
        lo,
        hi,
        1 + 0.4 * _complex_uniform(rng, length - 1),
        0.3 * _complex_uniform(rng, length - 1),
        0.3 * _complex_uniform(rng, length - 1),
    )
    lambda0 = complex(0.2 * _complex_uniform(rng, 1)[0])
    n0 = int(rng.integers(lo, hi))
    lam = lambda0 + complex(0.1 * _complex_uniform(rng, 1)[0])
    return c, lambda0, n0, lam


def domain_lambdas(rng: np.random.Generator, count: int = 5) -> List[complex]:
    """Spectral parameters spread over the square with |Re λ| and |Im λ| at most 2."""
    return [complex(v) for v in 2 * _complex_uniform(rng, count)]


def random_float_cases(count: int = RANDOM_CASES, seed: int = 20240) -> Iterator:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_float_case(rng) + (rng,)


def _small_rationals(rng: np.random.Generator, size: int, nonzero: bool = False) -> List[GaussianRational]:
    values = []
    for _ in range(size):
        while True:
            re, im = (int(v) for v in rng.integers(-4, 5, size=2))
            den = int(rng.integers(1, 4))
            value = GaussianRational(f"{re}/{den}", f"{im}/{den}")
            if value or not nonzero:
                break
        values.append(value)
    return values


def random_rational_case(rng: np.random.Generator) -> Tuple[CoefficientSet, int]:
    """Small exact complex coefficients on a window of 8 to 12 points, with a center."""
    length = int(rng.integers(8, 13))
    lo = int(rng.integers(-2, 3))
    hi = lo + length - 1
    c = CoefficientSet.build(
        lo,
        hi,
        _small_rationals(rng, length - 1, nonzero=True),
        _small_rationals(rng, length - 1),
        _small_rationals(rng, length - 1),
        ArithmeticMode.RATIONAL,
    )
    return c, int(rng.integers(lo, hi))


def dirichlet_eigenvalues(size: int) -> np.ndarray:
    """Eigenvalues of ``Δ²u = λu`` with ``u(0) = u(size) = 0``."""
    k = np.arange(1, size)
    return np.sort(-4 * np.sin(k * math.pi / (2 * size)) ** 2)


def tridiagonal(c: CoefficientSet) -> np.ndarray:
    """Matrix of the equation on the interior with Dirichlet conditions, for ``r ≡ 1``."""
    lo, hi = c.window.lo, c.window.hi
    interior = list(range(lo + 1, hi))
    m = len(interior)
    a = np.zeros((m, m), dtype=complex)
    for i, n in enumerate(interior):
        a[i, i] = -(complex(c.p[n]) + complex(c.p[n - 1])) + complex(c.q[n])
        if i + 1 < m:
            a[i, i + 1] = complex(c.p[n])
        if i > 0:
            a[i, i - 1] = complex(c.p[n - 1])
    return a


def max_relative_gap(computed: Sequence, reference: Sequence) -> float:
    a = computed.mode.to_float_array(computed.values)
    b = reference.mode.to_float_array(reference.values)
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))


@pytest.fixture
def delta2_basis():
    c = delta2(12)
    table, u1, u2 = basis(c, unit_seed(c), 0)
    return c, table, u1, u2


@pytest.fixture
def laguerre_basis():
    c = laguerre(12)
    table, u1, u2 = basis(c, unit_seed(c), 0)
    return c, table, u1, u2
