"""Index windows, sequences on windows, the forward difference and the star indefinite sum.

A problem lives on a finite window ``[lo, hi]``. The leading coefficient ``p`` is declared on
``[lo, hi - 1]`` while ``q``, ``r`` and the interior equation live on ``[lo + 1, hi]``. Every
:class:`Sequence` declares its own index range and refuses lookups outside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Union

import numpy as np

from pyspps.exception import (
    IndexOutOfRangeException,
    InvalidArgumentException,
    InvalidCoefficientException,
    InvalidWindowException,
)
from pyspps.scalar import ArithmeticMode, Scalar
from pyspps.types import typechecked

__all__ = [
    "IndexWindow",
    "Sequence",
    "CoefficientSet",
    "delta",
    "star_sum",
    "indefinite_sum",
    "apply_jacobi",
    "jacobi_residuals",
    "residual_scale",
    "relative_residual",
]


@typechecked
@dataclass(frozen=True)
class IndexWindow:
    """The finite index range ``[lo, hi]`` on which a solution is defined.

    ``lo`` is the first index of the solution (``a - 1`` for the half-line starting at ``a``).
    At least three points are required so the second difference is evaluable somewhere.

    Examples:
        >>> w = IndexWindow(0, 4)
        >>> w.a, w.length, list(w.interior())
        (1, 5, [1, 2, 3])
    """

    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo + 2:
            raise InvalidWindowException(
                f"Window [{self.lo}, {self.hi}] needs at least three points."
            )

    @property
    def a(self) -> int:
        return self.lo + 1

    @property
    def length(self) -> int:
        return self.hi - self.lo + 1

    def indices(self) -> range:
        return range(self.lo, self.hi + 1)

    def interior(self) -> range:
        return range(self.lo + 1, self.hi)

    def contains(self, n: int) -> bool:
        return self.lo <= n <= self.hi


@dataclass(frozen=True, eq=False)
class Sequence:
    """Values ``u(start), ..., u(stop)`` stored in an immutable numpy array of one arithmetic mode."""

    start: int
    values: np.ndarray
    mode: ArithmeticMode = ArithmeticMode.FLOAT

    def __post_init__(self):
        values = self.mode.array(self.values)
        if values.size == 0:
            raise InvalidArgumentException("A sequence needs at least one value.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls,
        first: int,
        last: int,
        fn: Callable[[int], Any],
        mode: ArithmeticMode = ArithmeticMode.FLOAT,
    ) -> Sequence:
        """Tabulate ``fn(n)`` for ``n`` in ``[first, last]``."""
        return cls(first, [fn(n) for n in range(first, last + 1)], mode)

    @classmethod
    def constant(
        cls,
        first: int,
        last: int,
        value: Any,
        mode: ArithmeticMode = ArithmeticMode.FLOAT,
    ) -> Sequence:
        return cls(first, [value] * (last - first + 1), mode)

    @property
    def stop(self) -> int:
        return self.start + len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def indices(self) -> range:
        return range(self.start, self.stop + 1)

    def covers(self, first: int, last: int) -> bool:
        return self.start <= first and last <= self.stop

    def _check(self, first: int, last: int):
        if not self.covers(first, last):
            raise IndexOutOfRangeException(
                f"Indices [{first}, {last}] are outside the sequence range "
                f"[{self.start}, {self.stop}]."
            )

    def __getitem__(self, n: int) -> Scalar:
        self._check(n, n)
        return self.values[n - self.start]

    def span(self, first: int, last: int) -> np.ndarray:
        """The values on ``[first, last]`` as an array view."""
        self._check(first, last)
        return self.values[first - self.start : last - self.start + 1]

    def restrict(self, first: int, last: int) -> Sequence:
        return Sequence(first, self.span(first, last), self.mode)

    def magnitudes(self) -> np.ndarray:
        return self.mode.magnitudes(self.values)

    def max_abs(self) -> float:
        return float(np.max(self.magnitudes()))

    def min_abs(self) -> float:
        return float(np.min(self.magnitudes()))

    def to_mode(self, mode: ArithmeticMode) -> Sequence:
        if mode is self.mode:
            return self
        if mode is ArithmeticMode.FLOAT:
            return Sequence(self.start, self.mode.to_float_array(self.values), mode)
        return Sequence(self.start, self.values, mode)

    def _aligned(self, other: Sequence) -> np.ndarray:
        if not isinstance(other, Sequence):
            raise InvalidArgumentException(f"Cannot combine a sequence with {other!r}.")
        if other.start != self.start or len(other) != len(self):
            raise InvalidArgumentException(
                f"Ranges differ: [{self.start}, {self.stop}] vs [{other.start}, {other.stop}]."
            )
        if other.mode is not self.mode:
            raise InvalidArgumentException("Sequences use different arithmetic modes.")
        return other.values

    def __add__(self, other: Sequence) -> Sequence:
        return Sequence(self.start, self.values + self._aligned(other), self.mode)

    def __sub__(self, other: Sequence) -> Sequence:
        return Sequence(self.start, self.values - self._aligned(other), self.mode)

    def __mul__(self, factor: Any) -> Sequence:
        if isinstance(factor, Sequence):
            return NotImplemented
        return Sequence(self.start, self.values * self.mode.coerce(factor), self.mode)

    __rmul__ = __mul__

    def __neg__(self) -> Sequence:
        return Sequence(self.start, -self.values, self.mode)

    def __repr__(self):
        return f"Sequence(start={self.start}, stop={self.stop}, mode={self.mode.value})"


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """The coefficients ``p``, ``q``, ``r`` of one Jacobi operator on a window.

    ``p`` must cover ``[lo, hi - 1]`` and be nonzero there; ``q`` and ``r`` cover ``[lo + 1, hi]``.
    All three sequences share one arithmetic mode.
    """

    window: IndexWindow
    p: Sequence
    q: Sequence
    r: Sequence

    def __post_init__(self):
        lo, hi = self.window.lo, self.window.hi
        for name, seq, first, last in (
            ("p", self.p, lo, hi - 1),
            ("q", self.q, lo + 1, hi),
            ("r", self.r, lo + 1, hi),
        ):
            if seq.start != first or seq.stop != last:
                raise InvalidCoefficientException(
                    f"{name} must cover [{first}, {last}], got [{seq.start}, {seq.stop}]."
                )
        if not (self.p.mode is self.q.mode is self.r.mode):
            raise InvalidCoefficientException("p, q and r use different arithmetic modes.")
        for n, value in zip(self.p.indices(), self.p.values):
            if not value:
                raise InvalidCoefficientException(f"p({n}) is zero.")

    @classmethod
    def build(
        cls,
        lo: int,
        hi: int,
        p: Union[Iterable[Any], Callable[[int], Any]],
        q: Union[Iterable[Any], Callable[[int], Any]],
        r: Union[Iterable[Any], Callable[[int], Any]],
        mode: ArithmeticMode = ArithmeticMode.FLOAT,
    ) -> CoefficientSet:
        """Build a coefficient set from value lists or from callables of the index.

        Examples:
            >>> c = CoefficientSet.build(0, 4, lambda n: 1, lambda n: 0, lambda n: 1)
            >>> c.p.start, c.p.stop, c.q.start, c.q.stop
            (0, 3, 1, 4)
        """
        window = IndexWindow(lo, hi)

        def _seq(spec, first, last):
            if callable(spec):
                return Sequence.from_function(first, last, spec, mode)
            return Sequence(first, list(spec), mode)

        return cls(
            window,
            _seq(p, lo, hi - 1),
            _seq(q, lo + 1, hi),
            _seq(r, lo + 1, hi),
        )

    @property
    def mode(self) -> ArithmeticMode:
        return self.p.mode

    def is_real(self, lambda0: Any = 0) -> bool:
        """Whether ``p`` and ``q - lambda0 * r`` are real on the window."""
        shifted = self.q.values - self.mode.coerce(lambda0) * self.r.values
        return self.mode.is_real_array(self.p.values) and self.mode.is_real_array(
            shifted
        )

    def shifted(self, mu: Any) -> CoefficientSet:
        """The operator with ``q`` replaced by ``q - mu * r``, so that ``lambda`` becomes ``lambda - mu``."""
        shift = self.mode.coerce(mu)
        q = Sequence(self.q.start, self.q.values - shift * self.r.values, self.mode)
        return CoefficientSet(self.window, self.p, q, self.r)

    def with_mode(self, mode: ArithmeticMode) -> CoefficientSet:
        if mode is self.mode:
            return self
        return CoefficientSet(
            self.window,
            self.p.to_mode(mode),
            self.q.to_mode(mode),
            self.r.to_mode(mode),
        )


def delta(u: Sequence, n: int) -> Scalar:
    """Forward difference ``u(n + 1) - u(n)``.

    Examples:
        >>> u = Sequence.from_function(0, 10, lambda n: n * n, ArithmeticMode.RATIONAL)
        >>> print(delta(u, 3))
        7
    """
    return u[n + 1] - u[n]


def star_sum(u: Sequence, n0: int, n: int) -> Scalar:
    """Indefinite sum normalized to vanish at ``n0``.

    For ``n > n0`` this is ``u(n0) + ... + u(n - 1)``, for ``n = n0`` it is zero and for ``n < n0``
    it is ``-(u(n) + ... + u(n0 - 1))``.

    Examples:
        >>> ones = Sequence.constant(0, 10, 1, ArithmeticMode.RATIONAL)
        >>> [str(star_sum(ones, 5, n)) for n in (5, 8, 3)]
        ['0', '3', '-2']
    """
    if n == n0:
        return u.mode.zero
    if n > n0:
        return _exact_sum(u.span(n0, n - 1), u.mode)
    return -_exact_sum(u.span(n, n0 - 1), u.mode)


def _exact_sum(values: np.ndarray, mode: ArithmeticMode) -> Scalar:
    total = mode.zero
    for v in values:
        total = total + v
    return total


def indefinite_sum(
    values: np.ndarray, start: int, n0: int, mode: ArithmeticMode
) -> np.ndarray:
    """Vectorized star sum over a whole range.

    ``values`` holds the terms ``f(start), ..., f(start + m - 1)``. The result holds
    ``F(start), ..., F(start + m)`` with ``F(n) = star_sum(f, n0, n)``; ``n0`` must lie in
    ``[start, start + m]``. Both branches are accumulated outward from ``n0`` so ``F(n0)`` is an exact zero.
    """
    m = len(values)
    k = n0 - start
    if not 0 <= k <= m:
        raise IndexOutOfRangeException(
            f"Center {n0} is outside [{start}, {start + m}]."
        )
    out = mode.zeros(m + 1)
    if k < m:
        out[k + 1 :] = np.cumsum(values[k:])
    if k > 0:
        out[:k] = -np.cumsum(values[:k][::-1])[::-1]
    return out


def apply_jacobi(c: CoefficientSet, u: Sequence, lam: Any, n: int) -> Scalar:
    """``Δ(p(n-1)Δu(n-1)) + q(n)u(n) - lam·r(n)u(n)`` at an interior index.

    Examples:
        >>> c = CoefficientSet.build(0, 6, lambda n: 1, lambda n: 0, lambda n: 1, ArithmeticMode.RATIONAL)
        >>> u = Sequence.from_function(0, 6, lambda n: 2 ** n, ArithmeticMode.RATIONAL)
        >>> print(apply_jacobi(c, u, "1/2", 3))
        0
    """
    if not (c.window.lo + 1 <= n <= c.window.hi - 1):
        raise IndexOutOfRangeException(
            f"Index {n} is not interior to [{c.window.lo}, {c.window.hi}]."
        )
    lam = c.mode.coerce(lam)
    return (
        c.p[n] * (u[n + 1] - u[n])
        - c.p[n - 1] * (u[n] - u[n - 1])
        + (c.q[n] - lam * c.r[n]) * u[n]
    )


def _interior_terms(c: CoefficientSet, u: Sequence, lam: Any):
    lo, hi = c.window.lo, c.window.hi
    if u.mode is not c.mode:
        u = u.to_mode(c.mode)
    lam = c.mode.coerce(lam)
    values = u.span(lo, hi)
    p = c.p.values
    q = c.q.values[:-1]
    r = c.r.values[:-1]
    forward = p[1:] * values[2:]
    center_right = p[1:] * values[1:-1]
    center_left = p[:-1] * values[1:-1]
    backward = p[:-1] * values[:-2]
    potential = q * values[1:-1]
    spectral = lam * r * values[1:-1]
    return forward, center_right, center_left, backward, potential, spectral


def jacobi_residuals(c: CoefficientSet, u: Sequence, lam: Any) -> np.ndarray:
    """``apply_jacobi`` at every interior index ``lo + 1, ..., hi - 1``, vectorized."""
    forward, center_right, center_left, backward, potential, spectral = _interior_terms(
        c, u, lam
    )
    return (forward - center_right) - (center_left - backward) + potential - spectral


def residual_scale(c: CoefficientSet, u: Sequence, lam: Any) -> float:
    """Largest magnitude among the individual terms of the expanded equation."""
    mode = c.mode
    terms = _interior_terms(c, u, lam)
    return float(max(np.max(mode.magnitudes(t)) for t in terms))


def relative_residual(c: CoefficientSet, u: Sequence, lam: Any) -> float:
    """Largest interior residual divided by the largest term magnitude; zero for the zero sequence.

    Non-finite residuals or terms (an overflowed solution) give ``inf``.
    """
    residuals = c.mode.magnitudes(jacobi_residuals(c, u, lam))
    if not np.all(np.isfinite(residuals)):
        return float("inf")
    worst = float(np.max(residuals))
    if worst == 0:
        return 0.0
    scale = residual_scale(c, u, lam)
    if not np.isfinite(scale):
        return float("inf")
    return worst / scale
