"""Nonvanishing seed solutions at a fixed spectral parameter ``lambda0``.

The power-series tables divide by the seed, so it must not vanish anywhere on the window.
For real coefficients two real solutions with independent initial data never share a zero,
hence ``u + iv`` is a safe seed. Complex coefficients fall back to a randomized search.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

import numpy as np

from pyspps.exception import (
    IndexOutOfRangeException,
    InvalidArgumentException,
    NonRealCoefficientsException,
    SeedNotFoundException,
    SeedVanishesException,
)
from pyspps.logging import logger
from pyspps.scalar import ArithmeticMode, GaussianRational, Scalar
from pyspps.seqgrid import (
    CoefficientSet,
    Sequence,
    jacobi_residuals,
    relative_residual,
)

__all__ = [
    "DEFAULT_SEED",
    "SEED_ENV",
    "DEFAULT_ATTEMPTS",
    "SeedSolution",
    "default_rng",
    "solve_recurrence",
    "certify_seed",
    "build_seed_complex",
    "build_seed_search",
    "polya_residual",
]

DEFAULT_SEED = 1729
"""Generator seed used by :func:`default_rng` when ``SPPS_SEED`` is not set."""

SEED_ENV = "SPPS_SEED"

DEFAULT_ATTEMPTS = 8

NEAR_VANISHING_RATIO = 1e-12


@dataclass(frozen=True)
class SeedSolution:
    """A certified nonvanishing solution ``u0`` of the equation at ``lambda0``.

    Attributes:
        u0 (Sequence): The seed on the whole window.
        lambda0: The spectral parameter the seed solves the equation for.
        residual_bound (float): Largest interior residual magnitude (zero in exact mode).
        min_abs (float): Smallest ``|u0(n)|`` over the window, always positive.
        relative_residual (float): ``residual_bound`` relative to the largest equation term.
        method (str): How the seed was obtained: ``explicit``, ``complex`` or ``search``.
    """

    u0: Sequence
    lambda0: Scalar
    residual_bound: float
    min_abs: float
    relative_residual: float = 0.0
    method: str = "explicit"

    def __post_init__(self):
        if not self.min_abs > 0:
            raise SeedVanishesException("A seed solution must not vanish.")

    @property
    def mode(self) -> ArithmeticMode:
        return self.u0.mode

    def is_constant_one(self) -> bool:
        return all(v == 1 for v in self.u0.values)


def default_rng(seed: Optional[int] = None) -> np.random.Generator:
    """Random generator for the seed search, seeded from ``SPPS_SEED`` unless ``seed`` is given."""
    if seed is None:
        raw = os.getenv(SEED_ENV)
        try:
            seed = DEFAULT_SEED if raw is None else int(raw)
        except ValueError as e:
            raise InvalidArgumentException(
                f"{SEED_ENV} must be an integer, got '{raw}'."
            ) from e
    return np.random.default_rng(seed)


def solve_recurrence(c: CoefficientSet, lam: Any, v_lo: Any, v_lo1: Any) -> Sequence:
    """Solve the equation forward from ``u(lo) = v_lo`` and ``u(lo + 1) = v_lo1``.

    Each step solves the equation at ``n`` for ``u(n + 1)``. In exact mode the residual of the
    result is identically zero.

    Examples:
        >>> c = CoefficientSet.build(0, 5, lambda n: 1, lambda n: 0, lambda n: 1, ArithmeticMode.RATIONAL)
        >>> [str(v) for v in solve_recurrence(c, 0, 0, 1).values]
        ['0', '1', '2', '3', '4', '5']
    """
    mode = c.mode
    lam = mode.coerce(lam)
    lo, hi = c.window.lo, c.window.hi
    p, q, r = c.p.values, c.q.values, c.r.values
    u = [mode.coerce(v_lo), mode.coerce(v_lo1)]
    for i in range(1, hi - lo):
        current, previous = u[i], u[i - 1]
        flux = p[i - 1] * (current - previous)
        u.append(current + (flux - (q[i - 1] - lam * r[i - 1]) * current) / p[i])
    return Sequence(lo, u, mode)


def _zero_indices(u: Sequence) -> List[int]:
    return [n for n, v in zip(u.indices(), u.values) if not v]


def certify_seed(
    c: CoefficientSet, lambda0: Any, u0: Sequence, method: str = "explicit"
) -> SeedSolution:
    """Measure and certify a candidate seed.

    Args:
        c (CoefficientSet): The operator.
        lambda0: Spectral parameter the seed should solve the equation for.
        u0 (Sequence): Candidate values on the whole window.
        method (str): Label recorded on the result.

    Returns:
        SeedSolution: The certified seed with its residual data.

    Raises:
        IndexOutOfRangeException: When ``u0`` does not span the window.
        SeedVanishesException: When ``u0`` has a zero on the window.
    """
    lo, hi = c.window.lo, c.window.hi
    if u0.start != lo or u0.stop != hi:
        raise IndexOutOfRangeException(
            f"A seed must span [{lo}, {hi}], got [{u0.start}, {u0.stop}]."
        )
    u0 = u0.to_mode(c.mode)
    zeros = _zero_indices(u0)
    if zeros:
        raise SeedVanishesException(f"Seed vanishes at n = {zeros}.")
    lambda0 = c.mode.coerce(lambda0)
    residual_bound = float(np.max(c.mode.magnitudes(jacobi_residuals(c, u0, lambda0))))
    min_abs, max_abs = u0.min_abs(), u0.max_abs()
    if min_abs < NEAR_VANISHING_RATIO * max_abs:
        logger.warning(
            f"Seed is nearly vanishing: min |u0| = {min_abs:.3e}, max |u0| = {max_abs:.3e}."
        )
    return SeedSolution(
        u0=u0,
        lambda0=lambda0,
        residual_bound=residual_bound,
        min_abs=min_abs,
        relative_residual=relative_residual(c, u0, lambda0),
        method=method,
    )


def build_seed_complex(
    c: CoefficientSet,
    lambda0: Any,
    first: Tuple[Any, Any] = (1, 0),
    second: Tuple[Any, Any] = (0, 1),
) -> SeedSolution:
    """Seed ``u + iv`` from two real solutions with independent initial data at ``(lo, lo + 1)``.

    Raises:
        NonRealCoefficientsException: When ``p`` or ``q - lambda0 * r`` is not real.
    """
    if not c.is_real(lambda0):
        raise NonRealCoefficientsException(
            "p and q - lambda0*r must be real for the complex-combination seed; "
            "use build_seed_search instead."
        )
    u = solve_recurrence(c, lambda0, *first)
    v = solve_recurrence(c, lambda0, *second)
    seed = certify_seed(c, lambda0, u + v * c.mode.imaginary_unit, method="complex")
    logger.debug(f"Complex-combination seed with min |u0| = {seed.min_abs:.3e}.")
    return seed


def _random_pair(rng: np.random.Generator, mode: ArithmeticMode) -> Tuple[Any, Any]:
    if mode is ArithmeticMode.FLOAT:
        parts = rng.standard_normal(4)
        return complex(parts[0], parts[1]), complex(parts[2], parts[3])
    parts = [int(v) for v in rng.integers(-9, 10, size=4)]
    return GaussianRational(parts[0], parts[1]), GaussianRational(parts[2], parts[3])


def build_seed_search(
    c: CoefficientSet,
    lambda0: Any,
    attempts: int = DEFAULT_ATTEMPTS,
    rng: Optional[np.random.Generator] = None,
) -> SeedSolution:
    """Randomized search for a nonvanishing seed; works for complex coefficients.

    Every attempt solves the recurrence from random complex initial data. The nonvanishing
    candidate with the largest ``min |u0|`` wins.

    Raises:
        InvalidArgumentException: When ``attempts < 1``.
        SeedNotFoundException: When every candidate vanishes somewhere.
    """
    if attempts < 1:
        raise InvalidArgumentException(f"attempts must be at least 1, got {attempts}.")
    rng = default_rng() if rng is None else rng
    best: Optional[Sequence] = None
    best_min = 0.0
    vanished_at: List[int] = []
    for attempt in range(attempts):
        candidate = solve_recurrence(c, lambda0, *_random_pair(rng, c.mode))
        zeros = _zero_indices(candidate)
        if zeros:
            vanished_at.append(zeros[0])
            logger.debug(f"Seed attempt {attempt} vanishes at n = {zeros[0]}.")
            continue
        candidate_min = candidate.min_abs()
        if candidate_min > best_min:
            best, best_min = candidate, candidate_min
    if best is None:
        raise SeedNotFoundException(
            f"All {attempts} seed candidates vanish (first zeros at {vanished_at}).",
            indices=vanished_at,
        )
    logger.info(f"Seed search kept min |u0| = {best_min:.3e} over {attempts} attempts.")
    return certify_seed(c, lambda0, best, method="search")


def polya_residual(
    c: CoefficientSet, s: SeedSolution, u: Sequence, lam: Any, n: int
) -> Scalar:
    """The equation at ``n`` written through the seed's factorization of the operator.

    Evaluates ``(1/u0(n))·Δ[p(n-1)u0(n-1)u0(n)Δ(u(n-1)/u0(n-1))] - (lam - lambda0)·r(n)u(n)``,
    which equals ``apply_jacobi(c, u, lam, n)`` whenever ``u0`` solves the equation at ``lambda0``.
    """
    if not (c.window.lo + 1 <= n <= c.window.hi - 1):
        raise IndexOutOfRangeException(
            f"Index {n} is not interior to [{c.window.lo}, {c.window.hi}]."
        )
    mode = c.mode
    u0 = s.u0
    u = u.to_mode(mode)
    lam = mode.coerce(lam)

    def weighted_step(m: int) -> Scalar:
        ratio_step = u[m + 1] / u0[m + 1] - u[m] / u0[m]
        return c.p[m] * u0[m] * u0[m + 1] * ratio_step

    return (weighted_step(n) - weighted_step(n - 1)) / u0[n] - (
        lam - s.lambda0
    ) * c.r[n] * u[n]
