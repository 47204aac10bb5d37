"""Boundedness of solutions of ``Δ(p(n-1)Δu(n-1)) = r(n)u(n)``.

This is the equation with ``q ≡ 0`` at ``λ = 1``, expanded around ``λ0 = 0`` with the seed ``u0 ≡ 1``.
The tables then reduce to iterated double sums of ``r/p``. That gives three tools:

* necessary conditions: the series ``Σ 1/p`` and ``ΣΣ r/p`` must converge when every solution is
  bounded (nonnegative coefficients);
* a sufficiency certificate: once the absolute tails of ``Y1`` and ``X2`` past some ``n*`` are
  below ``δ < 1``, every solution stays below an explicit bound;
* the same for the quasi-derivative ``φ(n) = p(n)Δu(n)``, driven by the shifted double series.

Convergence of an infinite series cannot be decided from finitely many terms, so a failed
certificate search is reported as inconclusive, never as divergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from pyspps.exception import (
    IndexOutOfRangeException,
    InvalidArgumentException,
    SignConditionException,
    TableMismatchException,
)
from pyspps.logging import logger
from pyspps.scalar import Scalar
from pyspps.serialization import MapJsonSerializable
from pyspps.seqgrid import CoefficientSet, Sequence
from pyspps.spps import SppsTable, assemble_u1, assemble_u2, eval_solution

__all__ = [
    "DIVERGENCE_THRESHOLD",
    "CERTIFICATE_MARGIN",
    "SeriesKind",
    "CertificateKind",
    "SeriesDiagnostic",
    "BoundCertificate",
    "series_partial_sums",
    "necessary_diagnostic",
    "phi_diagnostic",
    "op_T",
    "op_T_tilde",
    "quasi_derivative",
    "sufficiency_certificate",
    "phi_bounded_certificate",
]

DIVERGENCE_THRESHOLD = 10.0
"""Partial sums above this count as practical divergence."""

CERTIFICATE_MARGIN = 0.9
"""Largest contraction constant a certificate accepts."""


class SeriesKind(Enum):
    INV_P = "inv_p"
    DOUBLE_RP = "double_rp"
    DOUBLE_SHIFTED = "double_shifted"


class CertificateKind(Enum):
    SOLUTION = "solution"
    QUASI_DERIVATIVE = "quasi_derivative"


@dataclass(frozen=True, eq=False)
class SeriesDiagnostic:
    """Partial sums ``S(start), ..., S(hi - 1)`` of one of the series, in absolute values.

    ``S(n)`` includes the terms up to ``s = n``:

    * ``inv_p``: ``Σ 1/|p(s)|``
    * ``double_rp``: ``Σ_s Σ_{τ<=s} |r(τ)|/|p(s)|``
    * ``double_shifted``: ``Σ_s |r(s+1)| Σ_{τ<=s} 1/|p(τ)|``
    """

    kind: SeriesKind
    start: int
    partial_sums: np.ndarray
    threshold: float = DIVERGENCE_THRESHOLD

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1])

    @property
    def trend(self) -> bool:
        """Whether the partial sums are nondecreasing."""
        return bool(np.all(np.diff(self.partial_sums) >= 0))

    @property
    def diverging(self) -> bool:
        return self.total > self.threshold


@dataclass(frozen=True)
class BoundCertificate(MapJsonSerializable):
    """Outcome of a certificate search on ``[lo, horizon]``.

    When ``valid``, every solution (or its quasi-derivative) is at most ``solution_bound`` in
    modulus on the window up to ``horizon``, and the tables satisfy ``|X2k|, |Y2k-1| <= δ^k`` past
    ``n_star``. The statement is relative to the inspected window.
    """

    kind: CertificateKind
    valid: bool
    horizon: int
    n_star: Optional[int] = field(default=None, metadata={"optional": True})
    delta: Optional[float] = field(default=None, metadata={"optional": True})
    solution_bound: Optional[float] = field(default=None, metadata={"optional": True})
    window_relative: bool = True


def _check_signs(c: CoefficientSet):
    mode = c.mode
    if not (mode.is_real_array(c.p.values) and mode.is_real_array(c.r.values)):
        raise SignConditionException("The series tests need real p and r.")
    p = mode.to_float_array(c.p.values).real
    r = mode.to_float_array(c.r.values).real
    if np.any(p <= 0):
        n = c.p.start + int(np.argmax(p <= 0))
        raise SignConditionException(f"p({n}) is not positive.")
    if np.any(r < 0):
        n = c.r.start + int(np.argmax(r < 0))
        raise SignConditionException(f"r({n}) is negative.")


def _inv_abs_p(c: CoefficientSet) -> np.ndarray:
    """``1/|p(s)|`` for ``s`` in ``[lo, hi - 1]``."""
    return 1 / c.mode.magnitudes(c.p.values)


def _abs_r(c: CoefficientSet) -> np.ndarray:
    """``|r(τ)|`` for ``τ`` in ``[lo + 1, hi]``."""
    return c.mode.magnitudes(c.r.values)


def series_partial_sums(c: CoefficientSet, kind: SeriesKind) -> np.ndarray:
    """Partial sums of the chosen series for ``s`` from ``a = lo + 1`` to ``hi - 1``.

    Examples:
        >>> c = CoefficientSet.build(0, 5, lambda n: 1, lambda n: 0, lambda n: 1)
        >>> series_partial_sums(c, SeriesKind.INV_P)
        array([1., 2., 3., 4.])
        >>> series_partial_sums(c, SeriesKind.DOUBLE_RP)
        array([ 1.,  3.,  6., 10.])
    """
    inv_p = _inv_abs_p(c)[1:]
    abs_r = _abs_r(c)
    if kind is SeriesKind.INV_P:
        terms = inv_p
    elif kind is SeriesKind.DOUBLE_RP:
        terms = np.cumsum(abs_r[:-1]) * inv_p
    else:
        terms = abs_r[1:] * np.cumsum(inv_p)
    return np.cumsum(terms)


def _diagnostic(c: CoefficientSet, kind: SeriesKind, threshold: float) -> SeriesDiagnostic:
    sums = series_partial_sums(c, kind)
    diagnostic = SeriesDiagnostic(kind, c.window.a, sums, threshold)
    logger.info(
        f"{kind.value}: partial sum {diagnostic.total:.6g} on [{c.window.a}, {c.window.hi - 1}]"
        f"{' (diverging)' if diagnostic.diverging else ''}."
    )
    return diagnostic


def necessary_diagnostic(
    c: CoefficientSet, threshold: float = DIVERGENCE_THRESHOLD
) -> Tuple[SeriesDiagnostic, SeriesDiagnostic]:
    """Partial sums of ``ΣΣ r/p`` and ``Σ 1/p``.

    If all solutions are bounded, both series converge. A diverging diagnostic therefore shows
    that some solution is unbounded.

    Returns:
        Tuple[SeriesDiagnostic, SeriesDiagnostic]: The ``double_rp`` and ``inv_p`` diagnostics.

    Raises:
        SignConditionException: When ``p > 0`` and ``r >= 0`` do not hold.
    """
    _check_signs(c)
    return (
        _diagnostic(c, SeriesKind.DOUBLE_RP, threshold),
        _diagnostic(c, SeriesKind.INV_P, threshold),
    )


def phi_diagnostic(
    c: CoefficientSet, threshold: float = DIVERGENCE_THRESHOLD
) -> SeriesDiagnostic:
    """Partial sums of ``Σ_s Σ_{τ<=s} r(s+1)/p(τ)``, which converges iff every ``φ`` is bounded.

    Raises:
        SignConditionException: When ``p > 0`` and ``r >= 0`` do not hold.
    """
    _check_signs(c)
    return _diagnostic(c, SeriesKind.DOUBLE_SHIFTED, threshold)


def _check_range(c: CoefficientSet, n0: int, n: int):
    if not (c.window.lo <= n0 < n <= c.window.hi):
        raise IndexOutOfRangeException(
            f"Need lo <= n0 < n <= hi, got n0 = {n0}, n = {n} on [{c.window.lo}, {c.window.hi}]."
        )


def op_T(c: CoefficientSet, u: Sequence, n0: int, n: int) -> Scalar:
    """``Σ_{s=n0+1}^{n-1} Σ_{τ=n0+1}^{s} u(τ)r(τ)/p(s)``; maps ``X[2k-2]`` to ``X[2k]`` right of ``n0``.

    Examples:
        >>> from pyspps.scalar import ArithmeticMode
        >>> c = CoefficientSet.build(0, 6, lambda n: 1, lambda n: 0, lambda n: 1, ArithmeticMode.RATIONAL)
        >>> print(op_T(c, Sequence.constant(0, 6, 1, ArithmeticMode.RATIONAL), 0, 4))
        6
    """
    _check_range(c, n0, n)
    u = u.to_mode(c.mode)
    inner = total = c.mode.zero
    for s in range(n0 + 1, n):
        inner = inner + u[s] * c.r[s]
        total = total + inner / c.p[s]
    return total


def op_T_tilde(c: CoefficientSet, u: Sequence, n0: int, n: int) -> Scalar:
    """``Σ_{s=n0}^{n-1} Σ_{τ=n0}^{s} r(s+1)u(τ)/p(τ)``; maps ``X[2k-1]`` to ``X[2k+1]`` right of ``n0``."""
    _check_range(c, n0, n)
    u = u.to_mode(c.mode)
    inner = total = c.mode.zero
    for s in range(n0, n):
        inner = inner + u[s] / c.p[s]
        total = total + c.r[s + 1] * inner
    return total


def quasi_derivative(c: CoefficientSet, u: Sequence, n: int) -> Scalar:
    """``φ(n) = p(n)·(u(n+1) - u(n))``."""
    if not (c.window.contains(n) and c.window.contains(n + 1)):
        raise IndexOutOfRangeException(
            f"Indices {n}, {n + 1} are not both in [{c.window.lo}, {c.window.hi}]."
        )
    return c.p[n] * (u[n + 1] - u[n])


def _check_table(c: CoefficientSet, t: SppsTable):
    if t.window != c.window:
        raise TableMismatchException("Table and coefficients live on different windows.")
    if not (
        np.array_equal(t.coeffs.p.values, c.p.values)
        and np.array_equal(t.coeffs.r.values, c.r.values)
    ):
        raise TableMismatchException("Table was built for other coefficients.")
    if any(bool(v) for v in c.q.values):
        raise TableMismatchException("Boundedness analysis needs q ≡ 0.")
    if not t.seed.is_constant_one() or t.lambda0 != 0:
        raise TableMismatchException("Boundedness analysis needs the seed u0 ≡ 1 at lambda0 = 0.")


def _horizon(c: CoefficientSet, horizon: Optional[int]) -> int:
    horizon = c.window.hi if horizon is None else horizon
    if not c.window.lo + 2 <= horizon <= c.window.hi:
        raise InvalidArgumentException(
            f"Horizon {horizon} must lie in [{c.window.lo + 2}, {c.window.hi}]."
        )
    return horizon


def _solutions_at_one(t: SppsTable, horizon: int) -> Tuple[Sequence, Sequence]:
    lo = t.window.lo
    return (
        eval_solution(assemble_u1(t), 1).restrict(lo, horizon),
        eval_solution(assemble_u2(t), 1).restrict(lo, horizon),
    )


def _phi_values(c: CoefficientSet, u: Sequence) -> np.ndarray:
    """``|φ(n)|`` for ``n`` in ``[lo, stop - 1]``."""
    values = u.values
    p = c.p.values[: len(values) - 1]
    return c.mode.magnitudes(p * (values[1:] - values[:-1]))


def _solution_contraction(c: CoefficientSet, n_star: int, horizon: int) -> float:
    lo = c.window.lo
    inv_p = _inv_abs_p(c)
    abs_r = _abs_r(c)
    tail_y = float(np.sum(inv_p[n_star - lo : horizon - lo]))
    inner = np.cumsum(abs_r[n_star - lo : horizon - 1 - lo])
    tail_x = float(np.sum(inner * inv_p[n_star + 1 - lo : horizon - lo]))
    return max(tail_y, tail_x)


def _phi_contraction(c: CoefficientSet, n_star: int, horizon: int) -> Tuple[float, float]:
    lo = c.window.lo
    inv_p = _inv_abs_p(c)
    abs_r = _abs_r(c)
    inner = np.cumsum(inv_p[n_star - lo : horizon - lo])
    contraction = float(np.sum(abs_r[n_star - lo : horizon - lo] * inner))
    first_odd = float(np.sum(abs_r[n_star - lo : horizon - lo]))
    return contraction, first_odd


def _inconclusive(kind: CertificateKind, horizon: int) -> BoundCertificate:
    logger.info(f"No {kind.value} certificate up to horizon {horizon}: inconclusive.")
    return BoundCertificate(kind=kind, valid=False, horizon=horizon)


def sufficiency_certificate(
    c: CoefficientSet,
    t: SppsTable,
    horizon: Optional[int] = None,
    margin: float = CERTIFICATE_MARGIN,
) -> BoundCertificate:
    """Search for ``n*`` past which the table tails contract, and bound every solution.

    For each ``n*`` the contraction constant is ``δ = max(A, B)`` with
    ``A = Σ_{s=n*}^{H-1} 1/|p(s)|`` and ``B = Σ_{s=n*+1}^{H-1} Σ_{τ=n*+1}^{s} |r(τ)|/|p(s)|``.
    The smallest ``n*`` with ``δ <= margin`` wins. Writing a solution in the basis centered at
    ``n*`` gives ``|u(n)| <= (|u(n*)| + δ·|φ(n*)|)/(1 - δ)`` for ``n* < n <= H``.

    Args:
        c (CoefficientSet): Coefficients with ``q ≡ 0``; complex ``p`` and ``r`` are allowed.
        t (SppsTable): Table of ``c`` with ``u0 ≡ 1`` and ``lambda0 = 0``.
        horizon (int): Last index inspected; defaults to the window end.
        margin (float): Largest accepted ``δ``.

    Returns:
        BoundCertificate: A valid certificate, or ``valid = False`` when none exists on the window.

    Raises:
        TableMismatchException: When ``t`` does not have the required configuration.
    """
    _check_table(c, t)
    horizon = _horizon(c, horizon)
    kind = CertificateKind.SOLUTION
    for n_star in range(c.window.lo, horizon):
        delta = _solution_contraction(c, n_star, horizon)
        if delta <= margin:
            break
    else:
        return _inconclusive(kind, horizon)

    bound = 0.0
    for u in _solutions_at_one(t, horizon):
        magnitudes = u.magnitudes()
        phi = _phi_values(c, u)
        prefix = float(np.max(magnitudes[: n_star - c.window.lo + 1]))
        tail = (magnitudes[n_star - c.window.lo] + delta * phi[n_star - c.window.lo]) / (
            1 - delta
        )
        bound = max(bound, prefix, float(tail))
    logger.info(f"Solution certificate: n* = {n_star}, δ = {delta:.6g}, bound = {bound:.6g}.")
    return BoundCertificate(
        kind=kind,
        valid=True,
        horizon=horizon,
        n_star=n_star,
        delta=float(delta),
        solution_bound=bound,
    )


def phi_bounded_certificate(
    c: CoefficientSet,
    t: SppsTable,
    horizon: Optional[int] = None,
    margin: float = CERTIFICATE_MARGIN,
) -> BoundCertificate:
    """Certificate for the quasi-derivative ``φ = pΔu`` of every solution.

    The contraction constant of the shifted operator is
    ``δ = Σ_{s=n*}^{H-1} |r(s+1)| Σ_{τ=n*}^{s} 1/|p(τ)|``, and ``D = Σ_{τ=n*+1}^{H} |r(τ)|`` bounds
    ``X1``. Then ``|φ(n)| <= (|u(n*)|·D + |φ(n*)|)/(1 - δ)`` for ``n* <= n < H``.

    Raises:
        TableMismatchException: When ``t`` does not have the required configuration.
    """
    _check_table(c, t)
    horizon = _horizon(c, horizon)
    kind = CertificateKind.QUASI_DERIVATIVE
    for n_star in range(c.window.lo, horizon):
        delta, first_odd = _phi_contraction(c, n_star, horizon)
        if delta <= margin:
            break
    else:
        return _inconclusive(kind, horizon)

    offset = n_star - c.window.lo
    bound = 0.0
    for u in _solutions_at_one(t, horizon):
        magnitudes = u.magnitudes()
        phi = _phi_values(c, u)
        prefix = float(np.max(phi[:offset])) if offset else 0.0
        tail = (magnitudes[offset] * first_odd + phi[offset]) / (1 - delta)
        bound = max(bound, prefix, float(tail))
    logger.info(f"φ certificate: n* = {n_star}, δ = {delta:.6g}, bound = {bound:.6g}.")
    return BoundCertificate(
        kind=kind,
        valid=True,
        horizon=horizon,
        n_star=n_star,
        delta=float(delta),
        solution_bound=bound,
    )

