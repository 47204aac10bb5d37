"""Two-point boundary value and eigenvalue problems solved through the characteristic polynomial.

Every solution at ``λ`` is ``c1·u1(λ) + c2·u2(λ)``. Imposing one boundary functional on each end
gives a 2×2 system whose determinant is a polynomial in ``λ - λ0``; its roots are the eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from pyspps.exception import (
    DegenerateBoundaryException,
    IndexOutOfRangeException,
    InvalidArgumentException,
    NoConvergenceException,
    NotAnEigenvalueException,
    TableMismatchException,
)
from pyspps.logging import logger
from pyspps.scalar import ArithmeticMode, GaussianRational, Scalar, ScalarLiteral, parse_scalar
from pyspps.serialization import MapJsonSerializable
from pyspps.seqgrid import CoefficientSet, IndexWindow, Sequence, relative_residual
from pyspps.spps import LambdaPolySolution, SolutionKind, eval_solution

__all__ = [
    "TRIM_TOLERANCE",
    "ROOT_TOLERANCE",
    "ROOT_MAX_ITER",
    "MULTIPLICITY_TOLERANCE",
    "SINGULARITY_THRESHOLD",
    "NEAR_REAL_TOLERANCE",
    "REAL_SHAPE_TOLERANCE",
    "BoundarySide",
    "BoundaryCondition",
    "CharPoly",
    "EigenResult",
    "char_poly",
    "find_roots",
    "eigenfunction",
    "solve_eigen",
]

TRIM_TOLERANCE = 1e-13
ROOT_TOLERANCE = 1e-12
ROOT_MAX_ITER = 500
MULTIPLICITY_TOLERANCE = 1e-6
SINGULARITY_THRESHOLD = 1e-6
NEAR_REAL_TOLERANCE = 1e-10
REAL_SHAPE_TOLERANCE = 1e-12
NEWTON_POLISH_STEPS = 3


def _literal(value: Any) -> ScalarLiteral:
    if isinstance(value, Fraction):
        return GaussianRational.from_value(value)
    return parse_scalar(value)


def _optional_literal(value: Any) -> Optional[ScalarLiteral]:
    return None if value is None else _literal(value)


@dataclass(frozen=True)
class BoundarySide(MapJsonSerializable):
    """One boundary functional ``(α + α_λ·λ)·u(site) + (β + β_λ·λ)·u(site + 1) = 0``.

    The λ-dependent parts are optional and omitted from JSON when unset.

    Examples:
        >>> BoundarySide(3, 0, 1).to_primitive()
        {'site': 3, 'alpha': '0', 'beta': '1'}
    """

    site: int
    alpha: ScalarLiteral = field(metadata={"object_hook": _literal})
    beta: ScalarLiteral = field(metadata={"object_hook": _literal})
    alpha_lambda: Optional[ScalarLiteral] = field(
        default=None, metadata={"optional": True, "object_hook": _optional_literal}
    )
    beta_lambda: Optional[ScalarLiteral] = field(
        default=None, metadata={"optional": True, "object_hook": _optional_literal}
    )

    def __post_init__(self):
        object.__setattr__(self, "alpha", _literal(self.alpha))
        object.__setattr__(self, "beta", _literal(self.beta))
        object.__setattr__(self, "alpha_lambda", _optional_literal(self.alpha_lambda))
        object.__setattr__(self, "beta_lambda", _optional_literal(self.beta_lambda))
        if not any((self.alpha, self.beta, self.alpha_lambda, self.beta_lambda)):
            raise DegenerateBoundaryException(
                f"Boundary functional at site {self.site} has all coefficients zero."
            )

    def coefficients(self, mode: ArithmeticMode) -> Tuple[Scalar, Scalar, Scalar, Scalar]:
        """``(α, β, α_λ, β_λ)`` in ``mode``, with unset λ parts as zero."""
        return (
            mode.coerce(self.alpha),
            mode.coerce(self.beta),
            mode.zero if self.alpha_lambda is None else mode.coerce(self.alpha_lambda),
            mode.zero if self.beta_lambda is None else mode.coerce(self.beta_lambda),
        )

    def apply(self, u: Sequence, lam: Any) -> Scalar:
        alpha, beta, alpha_lambda, beta_lambda = self.coefficients(u.mode)
        lam = u.mode.coerce(lam)
        return (alpha + alpha_lambda * lam) * u[self.site] + (
            beta + beta_lambda * lam
        ) * u[self.site + 1]

    def is_real(self) -> bool:
        return all(
            complex(v).imag == 0
            for v in (self.alpha, self.beta, self.alpha_lambda, self.beta_lambda)
            if v is not None
        )


@dataclass(frozen=True)
class BoundaryCondition(MapJsonSerializable):
    """A functional on each end of the window."""

    left: BoundarySide
    right: BoundarySide

    def __post_init__(self):
        if not self.left.site < self.right.site:
            raise DegenerateBoundaryException(
                f"Left site {self.left.site} must precede right site {self.right.site}."
            )

    @classmethod
    def dirichlet(cls, left: int, right: int) -> BoundaryCondition:
        """``u(left) = 0`` and ``u(right) = 0``.

        Examples:
            >>> bc = BoundaryCondition.dirichlet(0, 4)
            >>> bc.left.site, bc.right.site
            (0, 3)
        """
        return cls(BoundarySide(left, 1, 0), BoundarySide(right - 1, 0, 1))

    def check_window(self, window: IndexWindow):
        for name, side in (("left", self.left), ("right", self.right)):
            if not (window.contains(side.site) and window.contains(side.site + 1)):
                raise IndexOutOfRangeException(
                    f"{name} boundary uses u({side.site}) and u({side.site + 1}), "
                    f"outside [{window.lo}, {window.hi}]."
                )

    def is_real(self) -> bool:
        return self.left.is_real() and self.right.is_real()


@dataclass(frozen=True, eq=False)
class CharPoly:
    """The boundary determinant as ascending coefficients in ``μ = λ - lambda0``.

    In float mode the stored coefficients are normalized and the true polynomial is
    ``2**exponent`` times the stored one; roots do not depend on the scale.
    """

    coeffs: np.ndarray
    lambda0: Scalar
    mode: ArithmeticMode
    exponent: int = 0

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, lam: Any) -> Scalar:
        mu = self.mode.coerce(lam) - self.lambda0
        value = P.polyval(mu, self.coeffs)
        return np.ldexp(1.0, self.exponent) * value if self.exponent else value

    def lambda_coefficients(self) -> np.ndarray:
        """Ascending coefficients in powers of ``λ`` itself (scaled like :attr:`coeffs`)."""
        shift = self.mode.array([-self.lambda0, 1])
        result = self.mode.array([self.coeffs[-1]])
        for c in self.coeffs[-2::-1]:
            result = P.polyadd(P.polymul(result, shift), self.mode.array([c]))
        return result

    def roots(
        self, tol: float = ROOT_TOLERANCE, max_iter: int = ROOT_MAX_ITER
    ) -> np.ndarray:
        return find_roots(self, tol, max_iter)


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Eigenvalues sorted by real then imaginary part with their per-root diagnostics."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    multiplicity_flags: np.ndarray
    converged: np.ndarray
    eigenfunctions: Tuple[Optional[Sequence], ...]
    char_poly: CharPoly

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


def _ldexp(values: Any, exponent: Any) -> Any:
    if not np.any(exponent):
        return values
    return np.ldexp(np.real(values), exponent) + 1j * np.ldexp(
        np.imag(values), exponent
    )


def _site_poly(sol: LambdaPolySolution, n: int) -> Tuple[np.ndarray, int]:
    j = n - sol.start
    coeffs, exps = sol.sites[j], sol.exponents[j]
    if coeffs.size == 0:
        return sol.mode.zeros(1), 0
    if not exps.any():
        return coeffs, 0
    top = int(exps.max())
    return _ldexp(coeffs, exps - top), top


def _combine(terms: List[Tuple[np.ndarray, int]]) -> Tuple[np.ndarray, int]:
    exponent = max(e for _, e in terms)
    total = None
    for coeffs, e in terms:
        scaled = _ldexp(coeffs, e - exponent)
        total = scaled if total is None else P.polyadd(total, scaled)
    return total, exponent


def _functional(side: BoundarySide, sol: LambdaPolySolution) -> Tuple[np.ndarray, int]:
    mode = sol.mode
    alpha, beta, alpha_lambda, beta_lambda = side.coefficients(mode)
    # (α + α_λ·λ) written in μ = λ - λ0
    a_poly = mode.array([alpha + alpha_lambda * sol.lambda0, alpha_lambda])
    b_poly = mode.array([beta + beta_lambda * sol.lambda0, beta_lambda])
    here, e_here = _site_poly(sol, side.site)
    there, e_there = _site_poly(sol, side.site + 1)
    return _combine([(P.polymul(a_poly, here), e_here), (P.polymul(b_poly, there), e_there)])


def _check_pair(u1: LambdaPolySolution, u2: LambdaPolySolution):
    if u1.which is not SolutionKind.U1 or u2.which is not SolutionKind.U2:
        raise TableMismatchException("Expected the (u1, u2) pair in that order.")
    if (
        u1.n0 != u2.n0
        or u1.start != u2.start
        or u1.stop != u2.stop
        or u1.mode is not u2.mode
        or u1.lambda0 != u2.lambda0
    ):
        raise TableMismatchException("u1 and u2 were not built from the same table.")


def _check_sites(u1: LambdaPolySolution, bc: BoundaryCondition):
    for side in (bc.left, bc.right):
        if not (u1.start <= side.site and side.site + 1 <= u1.stop):
            raise IndexOutOfRangeException(
                f"Boundary site {side.site} needs indices outside [{u1.start}, {u1.stop}]."
            )


def _trim(coeffs: np.ndarray, mode: ArithmeticMode, rel_tol: float) -> np.ndarray:
    if mode.is_exact:
        keep = [i for i, v in enumerate(coeffs) if v]
    else:
        magnitudes = np.abs(coeffs)
        keep = list(np.nonzero(magnitudes > rel_tol * np.max(magnitudes))[0])
    if not keep or (not mode.is_exact and np.max(np.abs(coeffs)) == 0):
        raise DegenerateBoundaryException(
            "The boundary determinant vanishes identically in λ."
        )
    return coeffs[: keep[-1] + 1]


def char_poly(
    u1: LambdaPolySolution,
    u2: LambdaPolySolution,
    bc: BoundaryCondition,
    trim_tolerance: float = TRIM_TOLERANCE,
) -> CharPoly:
    """Expand ``Bl(u1)·Br(u2) - Bl(u2)·Br(u1)`` as a polynomial in ``λ - λ0``.

    In rational mode every coefficient is exact and only exact zeros are trimmed. In float mode
    leading coefficients below ``trim_tolerance`` times the largest one are dropped.

    Args:
        u1 (LambdaPolySolution): First basis solution.
        u2 (LambdaPolySolution): Second basis solution from the same table.
        bc (BoundaryCondition): The boundary functionals.
        trim_tolerance (float): Relative cutoff for leading coefficients in float mode.

    Returns:
        CharPoly: The characteristic polynomial.

    Raises:
        TableMismatchException: When ``u1`` and ``u2`` do not come from the same table.
        IndexOutOfRangeException: When a boundary site falls outside the window.
        DegenerateBoundaryException: When the determinant is identically zero.
    """
    _check_pair(u1, u2)
    _check_sites(u1, bc)
    left_1, e_l1 = _functional(bc.left, u1)
    left_2, e_l2 = _functional(bc.left, u2)
    right_1, e_r1 = _functional(bc.right, u1)
    right_2, e_r2 = _functional(bc.right, u2)
    det, exponent = _combine(
        [
            (P.polymul(left_1, right_2), e_l1 + e_r2),
            (-P.polymul(left_2, right_1), e_l2 + e_r1),
        ]
    )
    det = _trim(det, u1.mode, trim_tolerance)
    if u1.mode is ArithmeticMode.FLOAT:
        shift = int(np.frexp(np.max(np.abs(det)))[1])
        det = _ldexp(det, -shift)
        exponent += shift
    det.setflags(write=False)
    logger.debug(f"Characteristic polynomial of degree {len(det) - 1}.")
    return CharPoly(det, u1.lambda0, u1.mode, exponent)


def _root_radius(monic: np.ndarray) -> float:
    """Fujiwara's bound on the moduli of the roots of a monic polynomial."""
    n = len(monic) - 1
    terms = [abs(monic[n - k]) ** (1.0 / k) for k in range(1, n + 1)]
    terms[-1] = (abs(monic[0]) / 2) ** (1.0 / n)
    return 2 * max(terms)


def find_roots(
    poly: CharPoly, tol: float = ROOT_TOLERANCE, max_iter: int = ROOT_MAX_ITER
) -> np.ndarray:
    """All complex roots by the Aberth-Ehrlich simultaneous iteration, polished by Newton steps.

    Iterates on the monic polynomial in ``μ = λ - λ0`` from points on a circle whose radius bounds
    every root. A root is converged when its last update is at most ``tol·max(1, |μ|)``.

    Args:
        poly (CharPoly): Polynomial of degree at least one.
        tol (float): Relative update tolerance.
        max_iter (int): Iteration cap.

    Returns:
        np.ndarray: Complex roots in ``λ``.

    Raises:
        InvalidArgumentException: When the degree is zero.
        NoConvergenceException: When some roots have not converged after ``max_iter`` steps. The
            exception carries the current approximations and the unconverged indices.

    Examples:
        >>> linear = CharPoly(np.array([-2, 1], dtype=complex), 0j, ArithmeticMode.FLOAT)
        >>> find_roots(linear)
        array([2.+0.j])
    """
    coeffs = np.asarray(poly.mode.to_float_array(poly.coeffs), dtype=np.complex128)
    n = len(coeffs) - 1
    if n < 1:
        raise InvalidArgumentException("Root finding needs a polynomial of degree >= 1.")
    lambda0 = complex(poly.lambda0)
    monic = coeffs / coeffs[-1]
    if n == 1:
        return np.array([lambda0 - monic[0]])
    if not np.any(monic[:-1]):
        return np.full(n, lambda0, dtype=np.complex128)

    derivative = P.polyder(monic)
    radius = _root_radius(monic)
    k = np.arange(n)
    z = radius * np.exp(1j * (2 * np.pi * k / n + 0.5 / n))
    converged = np.zeros(n, dtype=bool)

    iterations = 0
    with np.errstate(all="ignore"):
        for iterations in range(1, max_iter + 1):
            value = P.polyval(z, monic)
            slope = P.polyval(z, derivative)
            ratio = value / slope
            gaps = z[:, None] - z[None, :]
            np.fill_diagonal(gaps, np.inf)
            repulsion = np.sum(1 / gaps, axis=1)
            step = ratio / (1 - ratio * repulsion)
            step[value == 0] = 0
            stuck = ~np.isfinite(step)
            step[stuck] = tol * radius * (1 + 1j)
            step[converged] = 0
            z = z - step
            converged |= ~stuck & (np.abs(step) <= tol * np.maximum(1, np.abs(z)))
            if converged.all():
                break

        for _ in range(NEWTON_POLISH_STEPS):
            value = P.polyval(z, monic)
            slope = P.polyval(z, derivative)
            candidate = z - value / slope
            better = np.isfinite(candidate) & (
                np.abs(P.polyval(candidate, monic)) < np.abs(value)
            )
            z = np.where(better, candidate, z)

    roots = lambda0 + z
    if not converged.all():
        unconverged = [int(i) for i in np.nonzero(~converged)[0]]
        logger.warning(
            f"Root iteration stopped after {max_iter} steps with {len(unconverged)} "
            f"unconverged roots."
        )
        raise NoConvergenceException(
            f"Roots {unconverged} did not converge in {max_iter} iterations.",
            roots=roots,
            unconverged=unconverged,
        )
    logger.debug(f"Found {n} roots in {iterations} iterations.")
    return roots


def eigenfunction(
    u1: LambdaPolySolution,
    u2: LambdaPolySolution,
    bc: BoundaryCondition,
    lam: Any,
    threshold: float = SINGULARITY_THRESHOLD,
) -> Sequence:
    """The eigenfunction ``c1·u1(λ) + c2·u2(λ)`` for a root ``λ`` of the characteristic polynomial.

    ``(c1, c2)`` spans the numerical null space of the boundary matrix, taken from its singular
    value decomposition. The result is in float mode and scaled so its largest entry is ``1``.

    Raises:
        NotAnEigenvalueException: When the smallest singular value exceeds ``threshold`` times
            the largest, i.e. the boundary matrix is nonsingular at ``lam``.
    """
    _check_pair(u1, u2)
    _check_sites(u1, bc)
    lam = complex(lam)
    a = eval_solution(u1.to_float(), lam)
    b = eval_solution(u2.to_float(), lam)
    matrix = np.array(
        [
            [bc.left.apply(a, lam), bc.left.apply(b, lam)],
            [bc.right.apply(a, lam), bc.right.apply(b, lam)],
        ],
        dtype=np.complex128,
    )
    _, singular, vh = np.linalg.svd(matrix)
    if singular[0] == 0:
        weights = np.array([1, 0], dtype=np.complex128)
    elif singular[-1] > threshold * singular[0]:
        raise NotAnEigenvalueException(
            f"λ = {lam} is not an eigenvalue: boundary matrix singular values {singular}."
        )
    else:
        weights = vh[-1].conj()
    u = a * weights[0] + b * weights[1]
    peak = u.values[int(np.argmax(np.abs(u.values)))]
    return u * (1 / peak)


def _has_real_shape(poly: CharPoly) -> bool:
    """Whether the coefficients in powers of ``λ`` share one phase, so nonreal roots come in conjugate pairs."""
    coeffs = poly.mode.to_float_array(poly.lambda_coefficients())
    lead = coeffs[int(np.argmax(np.abs(coeffs)))]
    rotated = coeffs / lead
    return bool(np.all(np.abs(rotated.imag) <= REAL_SHAPE_TOLERANCE))


def _clean_near_real(roots: np.ndarray) -> np.ndarray:
    cleaned = roots.copy()
    near_real = np.abs(cleaned.imag) <= NEAR_REAL_TOLERANCE * np.maximum(
        1, np.abs(cleaned)
    )
    cleaned[near_real] = cleaned[near_real].real
    return cleaned


def _multiplicity_flags(roots: np.ndarray) -> np.ndarray:
    flags = np.zeros(len(roots), dtype=bool)
    if len(roots) < 2:
        return flags
    scale = max(1.0, float(np.max(np.abs(roots))))
    gaps = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(gaps, np.inf)
    flags[np.any(gaps < MULTIPLICITY_TOLERANCE * scale, axis=1)] = True
    return flags


def solve_eigen(
    c: CoefficientSet,
    u1: LambdaPolySolution,
    u2: LambdaPolySolution,
    bc: BoundaryCondition,
    tol: float = ROOT_TOLERANCE,
    max_iter: int = ROOT_MAX_ITER,
    trim_tolerance: float = TRIM_TOLERANCE,
) -> EigenResult:
    """Eigenvalues, eigenfunctions and residuals of the two-point problem.

    Roots that did not converge are still reported, with ``converged`` false. Residuals are
    relative Jacobi residuals of the float eigenfunctions; ``nan`` marks a root whose boundary
    matrix is not singular enough to yield an eigenfunction.
    """
    bc.check_window(c.window)
    poly = char_poly(u1, u2, bc, trim_tolerance)
    if poly.degree < 1:
        logger.info("Characteristic polynomial is constant: no eigenvalues.")
        empty = np.zeros(0, dtype=np.complex128)
        return EigenResult(
            empty, np.zeros(0), np.zeros(0, dtype=bool), np.zeros(0, dtype=bool), (), poly
        )
    try:
        roots = find_roots(poly, tol, max_iter)
        converged = np.ones(len(roots), dtype=bool)
    except NoConvergenceException as e:
        roots = e.roots
        converged = np.ones(len(roots), dtype=bool)
        converged[e.unconverged] = False

    if _has_real_shape(poly):
        roots = _clean_near_real(roots)
    order = np.lexsort((roots.imag, roots.real))
    roots, converged = roots[order], converged[order]

    float_c = c.with_mode(ArithmeticMode.FLOAT)
    residuals = np.full(len(roots), np.nan)
    functions: List[Optional[Sequence]] = []
    for i, lam in enumerate(roots):
        try:
            u = eigenfunction(u1, u2, bc, lam)
        except NotAnEigenvalueException as e:
            logger.warning(str(e))
            functions.append(None)
            continue
        residuals[i] = relative_residual(float_c, u, lam)
        functions.append(u)
    return EigenResult(
        eigenvalues=roots,
        residuals=residuals,
        multiplicity_flags=_multiplicity_flags(roots),
        converged=converged,
        eigenfunctions=tuple(functions),
        char_poly=poly,
    )
