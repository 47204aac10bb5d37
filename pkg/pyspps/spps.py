"""Spectral parameter power series on a finite window.

Given a nonvanishing seed ``u0`` at ``lambda0`` and a center ``n0``, the tables ``X[i]`` and
``Y[i]`` are built by alternating star sums. Because whole blocks of the tables vanish around
``n0``, the series for the two basis solutions

``u1(n) = u0(n)·Σ X[2k](n)·(λ-λ0)^k`` and ``u2(n) = u0(n)·Σ Y[2k+1](n)·(λ-λ0)^k``

are finite at every site, so each site carries an ordinary polynomial in ``λ - λ0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import comb, factorial
from typing import Any, Optional, Tuple

import numpy as np
from cachetools import LRUCache, cached
from numpy.polynomial import polynomial as P

from pyspps.exception import (
    ArithmeticModeException,
    IndexOutOfRangeException,
    InsufficientOrderException,
    InvalidArgumentException,
    SeedResidualException,
    TableMismatchException,
    TableOverflowException,
)
from pyspps.logging import logger
from pyspps.scalar import ArithmeticMode, GaussianRational, Scalar, parse_scalar
from pyspps.seed import SeedSolution
from pyspps.seqgrid import CoefficientSet, IndexWindow, Sequence, indefinite_sum
from pyspps.types import typechecked

__all__ = [
    "DEFAULT_SEED_TOLERANCE",
    "SolutionKind",
    "SppsTable",
    "LambdaPolySolution",
    "default_max_order",
    "build_table",
    "assemble_u1",
    "assemble_u2",
    "eval_solution",
    "solution_with_initial",
    "casoratian",
    "falling_factorial",
    "delta2_x_closed_form",
    "delta2_y_closed_form",
    "laguerre_coefficients",
    "laguerre_closed_form",
    "laguerre_table_value",
]

DEFAULT_SEED_TOLERANCE = 1e-8
"""Largest relative seed residual accepted by :func:`build_table`."""


class SolutionKind(Enum):
    U1 = "u1"
    U2 = "u2"


@dataclass(frozen=True, eq=False)
class SppsTable:
    """The tables ``X[i](n)`` and ``Y[i](n)`` for ``i = 0..max_order`` on the whole window.

    Row ``i`` of :attr:`X` and :attr:`Y` holds order ``i``; column ``j`` holds index ``lo + j``.
    Both parities are kept because the quasi-derivative analysis uses the odd ``X`` and even ``Y``.

    In float mode each row is stored with its largest entry normalized into ``[0.5, 1)``; order ``i``
    equals ``X[i] * 2**x_exponents[i]``. The accessors apply the exponent. Rational tables carry
    zero exponents.
    """

    n0: int
    max_order: int
    X: np.ndarray
    Y: np.ndarray
    seed: SeedSolution
    coeffs: CoefficientSet
    x_exponents: Tuple[int, ...] = ()
    y_exponents: Tuple[int, ...] = ()

    @property
    def mode(self) -> ArithmeticMode:
        return self.coeffs.mode

    @property
    def window(self) -> IndexWindow:
        return self.coeffs.window

    @property
    def lambda0(self) -> Scalar:
        return self.seed.lambda0

    def _column(self, n: int) -> int:
        if not self.window.contains(n):
            raise IndexOutOfRangeException(
                f"Index {n} is outside [{self.window.lo}, {self.window.hi}]."
            )
        return n - self.window.lo

    def _row(self, i: int) -> int:
        if not 0 <= i <= self.max_order:
            raise InsufficientOrderException(
                f"Order {i} is not in the table (max_order = {self.max_order})."
            )
        return i

    def x_exponent(self, i: int) -> int:
        return self.x_exponents[self._row(i)] if self.x_exponents else 0

    def y_exponent(self, i: int) -> int:
        return self.y_exponents[self._row(i)] if self.y_exponents else 0

    def x(self, i: int, n: int) -> Scalar:
        return _ldexp(self.X[self._row(i), self._column(n)], self.x_exponent(i))

    def y(self, i: int, n: int) -> Scalar:
        return _ldexp(self.Y[self._row(i), self._column(n)], self.y_exponent(i))

    def x_sequence(self, i: int) -> Sequence:
        row = _ldexp(self.X[self._row(i)], self.x_exponent(i))
        return Sequence(self.window.lo, row, self.mode)

    def y_sequence(self, i: int) -> Sequence:
        row = _ldexp(self.Y[self._row(i)], self.y_exponent(i))
        return Sequence(self.window.lo, row, self.mode)


@dataclass(frozen=True, eq=False)
class LambdaPolySolution:
    """A solution written as one polynomial in ``λ - lambda0`` per site.

    ``sites[j]`` holds the ascending coefficients at index ``start + j`` and ``exponents[j]`` one
    power-of-two exponent per coefficient, so coefficient ``k`` is ``sites[j][k] * 2**exponents[j][k]``.
    Exponents are zero in rational mode. The site ``n0`` of ``u2`` has no coefficients: the solution
    is identically zero there.
    """

    n0: int
    lambda0: Scalar
    start: int
    sites: Tuple[np.ndarray, ...]
    exponents: Tuple[np.ndarray, ...]
    which: SolutionKind
    mode: ArithmeticMode

    @property
    def stop(self) -> int:
        return self.start + len(self.sites) - 1

    def indices(self) -> range:
        return range(self.start, self.stop + 1)

    def _index(self, n: int) -> int:
        if not self.start <= n <= self.stop:
            raise IndexOutOfRangeException(
                f"Index {n} is outside [{self.start}, {self.stop}]."
            )
        return n - self.start

    def degree(self, n: int) -> int:
        """Number of stored coefficients minus one; ``-1`` for the identically zero site."""
        return len(self.sites[self._index(n)]) - 1

    def coefficients(self, n: int) -> np.ndarray:
        j = self._index(n)
        return _ldexp(self.sites[j], self.exponents[j])

    def max_exponent(self) -> int:
        return max((int(e.max()) for e in self.exponents if e.size), default=0)

    def evaluate(self, n: int, lam: Any) -> Scalar:
        j = self._index(n)
        return self._evaluate_site(j, self.mode.coerce(lam) - self.lambda0)

    def _evaluate_site(self, j: int, mu: Scalar) -> Scalar:
        coeffs, exps = self.sites[j], self.exponents[j]
        if coeffs.size == 0:
            return self.mode.zero
        if not exps.any():
            return P.polyval(mu, coeffs)
        return _scaled_polyval(coeffs, exps, complex(mu))

    def to_float(self) -> LambdaPolySolution:
        if self.mode is ArithmeticMode.FLOAT:
            return self
        sites = tuple(self.mode.to_float_array(s) for s in self.sites)
        return LambdaPolySolution(
            n0=self.n0,
            lambda0=complex(self.lambda0),
            start=self.start,
            sites=sites,
            exponents=self.exponents,
            which=self.which,
            mode=ArithmeticMode.FLOAT,
        )


def _ldexp(values: Any, exponent: Any) -> Any:
    """``values * 2**exponent`` for complex values; ``exponent`` may be an array."""
    if not np.any(exponent):
        return values
    return np.ldexp(np.real(values), exponent) + 1j * np.ldexp(
        np.imag(values), exponent
    )


def _scaled_polyval(mantissas: np.ndarray, exps: np.ndarray, mu: complex) -> complex:
    """Sum of ``mantissas[k] * 2**exps[k] * mu**k`` without forming the coefficients."""
    mu_exp = int(np.frexp(abs(mu))[1]) if mu else 0
    base = mu * 2.0**-mu_exp
    k = np.arange(len(mantissas))
    terms = mantissas * base**k
    term_exps = exps + k * mu_exp
    live = terms != 0
    if not live.any():
        return 0j
    top = int(term_exps[live].max())
    total = np.sum(_ldexp(terms[live], term_exps[live] - top))
    return complex(_ldexp(total, top))


def _normalize_row(row: np.ndarray, order: int, name: str) -> Tuple[np.ndarray, int]:
    peak = float(np.max(np.abs(row)))
    if not np.isfinite(peak):
        raise TableOverflowException(
            f"{name}[{order}] has non-finite entries; the coefficients or seed are out of range."
        )
    if peak == 0:
        return row, 0
    shift = int(np.frexp(peak)[1])
    return _ldexp(row, -shift), shift


def default_max_order(window: IndexWindow, n0: int) -> int:
    """Smallest order that completes every site polynomial of ``u1`` and ``u2``."""
    return 2 * max(window.hi - n0, n0 - window.lo) + 1


def build_table(
    c: CoefficientSet,
    s: SeedSolution,
    n0: int,
    max_order: Optional[int] = None,
    seed_tolerance: float = DEFAULT_SEED_TOLERANCE,
) -> SppsTable:
    """Build ``X[i]`` and ``Y[i]`` by the alternating star-sum recursions centered at ``n0``.

    Even ``X`` steps and odd ``Y`` steps sum ``T(s) / (p(s)·u0(s)·u0(s+1))``; odd ``X`` steps and
    even ``Y`` steps sum ``u0(s+1)²·T(s+1)·r(s+1)``, where ``T`` is the previous order.

    Args:
        c (CoefficientSet): The operator.
        s (SeedSolution): A certified seed on the same window and arithmetic mode.
        n0 (int): Center index in ``[lo, hi - 1]``.
        max_order (int): Highest order to build; defaults to :func:`default_max_order`.
        seed_tolerance (float): Largest accepted relative residual of the seed.

    Returns:
        SppsTable: The tables.

    Raises:
        IndexOutOfRangeException: When ``n0`` is outside ``[lo, hi - 1]``.
        InvalidArgumentException: When ``max_order < 1``.
        TableMismatchException: When the seed does not match the window or mode.
        SeedResidualException: When the seed residual exceeds ``seed_tolerance``.
        TableOverflowException: When a float row has non-finite entries even after normalization.
    """
    lo, hi = c.window.lo, c.window.hi
    if not lo <= n0 <= hi - 1:
        raise IndexOutOfRangeException(f"Center {n0} must lie in [{lo}, {hi - 1}].")
    if max_order is None:
        max_order = default_max_order(c.window, n0)
    if max_order < 1:
        raise InvalidArgumentException(f"max_order must be at least 1, got {max_order}.")
    if s.u0.start != lo or s.u0.stop != hi:
        raise TableMismatchException(
            f"Seed spans [{s.u0.start}, {s.u0.stop}], window is [{lo}, {hi}]."
        )
    if s.mode is not c.mode:
        raise ArithmeticModeException("Seed and coefficients use different modes.")
    if s.relative_residual > seed_tolerance:
        raise SeedResidualException(
            f"Seed relative residual {s.relative_residual:.3e} exceeds {seed_tolerance:.1e}."
        )

    mode = c.mode
    u0 = s.u0.values
    even_weight = 1 / (c.p.values * u0[:-1] * u0[1:])
    odd_weight = u0[1:] * u0[1:] * c.r.values

    X, Y = [mode.ones(len(u0))], [mode.ones(len(u0))]
    x_exp, y_exp = [0], [0]
    for i in range(1, max_order + 1):
        if i % 2 == 0:
            x_row = indefinite_sum(X[-1][:-1] * even_weight, lo, n0, mode)
            y_row = indefinite_sum(Y[-1][1:] * odd_weight, lo, n0, mode)
        else:
            x_row = indefinite_sum(X[-1][1:] * odd_weight, lo, n0, mode)
            y_row = indefinite_sum(Y[-1][:-1] * even_weight, lo, n0, mode)
        if mode is ArithmeticMode.FLOAT:
            x_row, shift = _normalize_row(x_row, i, "X")
            x_exp.append(x_exp[-1] + shift)
            y_row, shift = _normalize_row(y_row, i, "Y")
            y_exp.append(y_exp[-1] + shift)
        else:
            x_exp.append(0)
            y_exp.append(0)
        X.append(x_row)
        Y.append(y_row)

    x_table, y_table = np.vstack(X), np.vstack(Y)
    x_table.setflags(write=False)
    y_table.setflags(write=False)
    logger.debug(
        f"Built SPPS table on [{lo}, {hi}] centered at {n0} up to order {max_order}, "
        f"largest row exponent {max(x_exp + y_exp)}."
    )
    return SppsTable(n0, max_order, x_table, y_table, s, c, tuple(x_exp), tuple(y_exp))


def _site_terms(kind: SolutionKind, n: int, n0: int) -> int:
    """Number of nonzero series terms at site ``n``."""
    if kind is SolutionKind.U1:
        return n - n0 if n > n0 else n0 - n + 1
    return abs(n - n0)


def _required_order(kind: SolutionKind, window: IndexWindow, n0: int) -> int:
    terms = max(_site_terms(kind, n, n0) for n in (window.lo, window.hi))
    return 2 * (terms - 1) if kind is SolutionKind.U1 else 2 * terms - 1


def _assemble(t: SppsTable, kind: SolutionKind) -> LambdaPolySolution:
    needed = _required_order(kind, t.window, t.n0)
    if t.max_order < needed:
        raise InsufficientOrderException(
            f"{kind.value} needs max_order >= {needed}, table has {t.max_order}."
        )
    u0 = t.seed.u0.values
    orders = max(t.max_order + 1, 1)
    x_exp = np.asarray(t.x_exponents or (0,) * orders, dtype=int)
    y_exp = np.asarray(t.y_exponents or (0,) * orders, dtype=int)
    sites = []
    exponents = []
    for j, n in enumerate(t.window.indices()):
        terms = _site_terms(kind, n, t.n0)
        if kind is SolutionKind.U1:
            rows = slice(0, 2 * terms - 1, 2)
            coeffs, exps = u0[j] * t.X[rows, j], x_exp[rows]
        else:
            rows = slice(1, 2 * terms, 2)
            coeffs, exps = u0[j] * t.Y[rows, j], y_exp[rows]
        coeffs.setflags(write=False)
        exps.setflags(write=False)
        sites.append(coeffs)
        exponents.append(exps)
    return LambdaPolySolution(
        n0=t.n0,
        lambda0=t.lambda0,
        start=t.window.lo,
        sites=tuple(sites),
        exponents=tuple(exponents),
        which=kind,
        mode=t.mode,
    )


def assemble_u1(t: SppsTable) -> LambdaPolySolution:
    """The solution with ``u1(n0) = u0(n0)`` and ``u1(n0 + 1) = u0(n0 + 1)``.

    Site ``n`` carries ``u0(n)·X[2k](n)`` for ``k <= n - n0 - 1`` right of the center and
    ``k <= n0 - n`` otherwise.
    """
    return _assemble(t, SolutionKind.U1)


def assemble_u2(t: SppsTable) -> LambdaPolySolution:
    """The solution with ``u2(n0) = 0`` and ``u2(n0 + 1) = 1 / (p(n0)·u0(n0))``.

    Site ``n`` carries ``u0(n)·Y[2k+1](n)`` for ``k <= |n - n0| - 1``.
    """
    return _assemble(t, SolutionKind.U2)


def eval_solution(sol: LambdaPolySolution, lam: Any) -> Sequence:
    """Evaluate every site polynomial at ``λ - lambda0`` by Horner's rule."""
    mu = sol.mode.coerce(lam) - sol.lambda0
    values = [sol._evaluate_site(j, mu) for j in range(len(sol.sites))]
    return Sequence(sol.start, values, sol.mode)


def solution_with_initial(
    u1: LambdaPolySolution,
    u2: LambdaPolySolution,
    lam: Any,
    init: Tuple[Any, Any],
) -> Sequence:
    """The solution at ``lam`` with ``u(lo) = init[0]`` and ``u(lo + 1) = init[1]``, built from the basis."""
    a, b = eval_solution(u1, lam), eval_solution(u2, lam)
    mode, lo = a.mode, a.start
    v0, v1 = mode.coerce(init[0]), mode.coerce(init[1])
    a0, a1, b0, b1 = a[lo], a[lo + 1], b[lo], b[lo + 1]
    det = a0 * b1 - b0 * a1
    c1 = (v0 * b1 - b0 * v1) / det
    c2 = (a0 * v1 - v0 * a1) / det
    return a * c1 + b * c2


def casoratian(c: CoefficientSet, u: Sequence, v: Sequence, n: int) -> Scalar:
    """Discrete Wronskian ``u(n)v(n+1) - u(n+1)v(n)``.

    For two solutions ``p(n)`` times the Casoratian does not depend on ``n``.
    """
    if not (c.window.contains(n) and c.window.contains(n + 1)):
        raise IndexOutOfRangeException(
            f"Indices {n}, {n + 1} are not both in [{c.window.lo}, {c.window.hi}]."
        )
    return u[n] * v[n + 1] - u[n + 1] * v[n]


@typechecked
def falling_factorial(n: int, k: int) -> int:
    """``n(n-1)...(n-k+1)``; the empty product for ``k = 0``.

    Examples:
        >>> falling_factorial(5, 2)
        20
        >>> falling_factorial(3, 4)
        0
    """
    if k < 0:
        raise InvalidArgumentException(f"k must be nonnegative, got {k}.")
    result = 1
    for j in range(k):
        result *= n - j
    return result


def delta2_x_closed_form(n: int, k: int) -> Fraction:
    """``X[2k](n)`` for ``Δ²u = λu`` with ``u0 = 1`` centered at 0: ``(n+k-1)^(2k) / (2k)!``."""
    return Fraction(falling_factorial(n + k - 1, 2 * k), factorial(2 * k))


def delta2_y_closed_form(n: int, k: int) -> Fraction:
    """``Y[2k+1](n)`` for the same problem: ``(n+k)^(2k+1) / (2k+1)!``."""
    return Fraction(falling_factorial(n + k, 2 * k + 1), factorial(2 * k + 1))


def laguerre_table_value(n: int, k: int) -> Fraction:
    """``n^(k) / (k!)²``, the value of the sign-normalized sum ``X[2k] + Y[2k-1]`` in the Laguerre problem."""
    return Fraction(falling_factorial(n, k), factorial(k) ** 2)


@cached(cache=LRUCache(maxsize=256))
def laguerre_coefficients(n: int) -> Tuple[Fraction, ...]:
    """Ascending coefficients of the Laguerre polynomial ``L_n`` in powers of ``λ``."""
    if n < 0:
        raise InvalidArgumentException(f"Laguerre degree must be nonnegative, got {n}.")
    return tuple(
        Fraction((-1) ** k * comb(n, k), factorial(k)) for k in range(n + 1)
    )


def laguerre_closed_form(n: int, lam: Any) -> Scalar:
    """``Σ_k C(n, k)(-λ)^k / k!``; exact for exact ``lam``.

    Examples:
        >>> print(laguerre_closed_form(2, 2))
        -1
        >>> print(laguerre_closed_form(1, 1))
        0
    """
    if isinstance(lam, (str, list, tuple)):
        lam = parse_scalar(lam)
    result: Any = 0
    for coefficient in reversed(laguerre_coefficients(n)):
        result = result * lam + coefficient
    if isinstance(lam, GaussianRational) and not isinstance(result, GaussianRational):
        result = GaussianRational.from_value(result)
    return result
