"""Brute-force references: direct recurrence solutions and real eigenvalues by shooting."""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Tuple

import numpy as np
from cachetools import LRUCache, cachedmethod

from pyspps.exception import (
    GridTooCoarseException,
    InvalidArgumentException,
    NonRealCoefficientsException,
)
from pyspps.logging import logger
from pyspps.scalar import ArithmeticMode, Scalar
from pyspps.seed import solve_recurrence
from pyspps.seqgrid import CoefficientSet, Sequence
from pyspps.spectral import BoundaryCondition

__all__ = [
    "BISECTION_TOLERANCE",
    "DEFAULT_GRID",
    "ShootingProfile",
    "oracle_solution",
    "boundary_determinant",
    "shooting_profile",
    "shooting_eigen_real",
    "bisection",
]

BISECTION_TOLERANCE = 1e-12
"""Bisection stops once the bracket is narrower than this times ``max(1, |λ|)``."""

DEFAULT_GRID = 2000

MAX_BISECTION_STEPS = 200


@dataclass(frozen=True, eq=False)
class ShootingProfile:
    """Samples of the boundary determinant on a strictly increasing real grid."""

    lam_grid: np.ndarray
    boundary_value: np.ndarray

    def __post_init__(self):
        if len(self.lam_grid) != len(self.boundary_value):
            raise InvalidArgumentException("Grid and samples differ in length.")
        if np.any(np.diff(self.lam_grid) <= 0):
            raise InvalidArgumentException("The λ grid must be strictly increasing.")

    def sign_changes(self) -> List[int]:
        """Indices ``i`` such that the samples at ``i`` and ``i + 1`` have opposite signs."""
        values = self.boundary_value
        return [
            i for i in range(len(values) - 1) if values[i] * values[i + 1] < 0
        ]

    def zeros(self) -> List[int]:
        return [i for i, v in enumerate(self.boundary_value) if v == 0]


def oracle_solution(c: CoefficientSet, lam: Any, init: Tuple[Any, Any]) -> Sequence:
    """The solution with ``u(lo) = init[0]`` and ``u(lo + 1) = init[1]`` by direct recurrence.

    Examples:
        >>> c = CoefficientSet.build(0, 4, lambda n: 1, lambda n: 0, lambda n: 1, ArithmeticMode.RATIONAL)
        >>> [str(v) for v in oracle_solution(c, 0, (0, 1)).values]
        ['0', '1', '2', '3', '4']
    """
    return solve_recurrence(c, lam, init[0], init[1])


def boundary_determinant(c: CoefficientSet, bc: BoundaryCondition, lam: Any) -> Scalar:
    """Determinant of the boundary matrix of the recurrence solutions started from ``(1, 0)`` and ``(0, 1)``.

    It vanishes exactly at the eigenvalues of the two-point problem.
    """
    bc.check_window(c.window)
    a = solve_recurrence(c, lam, 1, 0)
    b = solve_recurrence(c, lam, 0, 1)
    return bc.left.apply(a, lam) * bc.right.apply(b, lam) - bc.left.apply(
        b, lam
    ) * bc.right.apply(a, lam)


class _Shooter:
    """Memoized real boundary determinant of one real problem."""

    def __init__(self, c: CoefficientSet, bc: BoundaryCondition):
        if not (c.is_real() and c.mode.is_real_array(c.r.values)):
            raise NonRealCoefficientsException("Shooting needs real p, q and r.")
        if not bc.is_real():
            raise NonRealCoefficientsException("Shooting needs real boundary coefficients.")
        bc.check_window(c.window)
        self.c = c.with_mode(ArithmeticMode.FLOAT)
        self.bc = bc
        self._cache: LRUCache = LRUCache(maxsize=4 * DEFAULT_GRID)

    @cachedmethod(operator.attrgetter("_cache"))
    def __call__(self, lam: float) -> float:
        return complex(boundary_determinant(self.c, self.bc, lam)).real


def _check_interval(lam_lo: float, lam_hi: float, grid: int):
    if grid < 2:
        raise InvalidArgumentException(f"The grid needs at least 2 points, got {grid}.")
    if not lam_lo < lam_hi:
        raise InvalidArgumentException(f"Empty interval [{lam_lo}, {lam_hi}].")


def _profile(shooter: _Shooter, lam_lo: float, lam_hi: float, grid: int) -> ShootingProfile:
    lam_grid = np.linspace(lam_lo, lam_hi, grid)
    values = np.array([shooter(float(lam)) for lam in lam_grid])
    return ShootingProfile(lam_grid, values)


def shooting_profile(
    c: CoefficientSet,
    bc: BoundaryCondition,
    lam_lo: float,
    lam_hi: float,
    grid: int = DEFAULT_GRID,
) -> ShootingProfile:
    """Sample the boundary determinant at ``grid`` equally spaced real ``λ``."""
    _check_interval(lam_lo, lam_hi, grid)
    return _profile(_Shooter(c, bc), lam_lo, lam_hi, grid)


def bisection(
    f: Callable[[float], float],
    left: float,
    right: float,
    tol: float = BISECTION_TOLERANCE,
) -> float:
    """A zero of ``f`` in ``[left, right]`` where ``f`` changes sign.

    Examples:
        >>> round(bisection(lambda x: x * x - 2, 0.0, 2.0), 10)
        1.4142135624
    """
    f_left, f_right = f(left), f(right)
    if f_left == 0:
        return left
    if f_right == 0:
        return right
    if f_left * f_right > 0:
        raise InvalidArgumentException(
            f"f does not change sign on [{left}, {right}]."
        )
    for _ in range(MAX_BISECTION_STEPS):
        middle = 0.5 * (left + right)
        if right - left <= tol * max(1.0, abs(middle)):
            break
        f_middle = f(middle)
        if f_middle == 0:
            return middle
        if f_left * f_middle < 0:
            right = middle
        else:
            left, f_left = middle, f_middle
    return 0.5 * (left + right)


def shooting_eigen_real(
    c: CoefficientSet,
    bc: BoundaryCondition,
    lam_lo: float,
    lam_hi: float,
    grid: int = DEFAULT_GRID,
    expected_count: Optional[int] = None,
) -> np.ndarray:
    """Real eigenvalues in ``[lam_lo, lam_hi]`` located by sign changes of the boundary determinant.

    Two eigenvalues between neighbouring grid points cancel in the sign test and are missed, as
    are roots of even multiplicity.

    Raises:
        NonRealCoefficientsException: When the problem is not real.
        GridTooCoarseException: When ``expected_count`` is given and differs from the number found.
    """
    _check_interval(lam_lo, lam_hi, grid)
    shooter = _Shooter(c, bc)
    profile = _profile(shooter, lam_lo, lam_hi, grid)
    grid_points = profile.lam_grid
    roots = [float(grid_points[i]) for i in profile.zeros()]
    for i in profile.sign_changes():
        roots.append(bisection(shooter, float(grid_points[i]), float(grid_points[i + 1])))
    roots.sort()
    logger.debug(f"Shooting found {len(roots)} eigenvalues in [{lam_lo}, {lam_hi}].")
    if expected_count is not None and len(roots) != expected_count:
        raise GridTooCoarseException(
            f"Found {len(roots)} eigenvalues in [{lam_lo}, {lam_hi}], expected "
            f"{expected_count}; refine the grid."
        )
    return np.array(roots, dtype=float)
