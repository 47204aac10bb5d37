"""Command line front end.

``spps solve|eigen|bounded|verify --file PROBLEM.json`` and ``spps demo laguerre|delta2`` write CSV
tables to stdout (or ``--out``). Exit codes: 0 success, 1 usage or problem-file error,
2 numerical failure, 3 inconclusive boundedness certificate.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from contextlib import contextmanager
from fractions import Fraction
from math import factorial
from typing import Any, Iterator, List, Optional, Sequence as Seq, TextIO, Tuple

import numpy as np

from pyspps.bounded import (
    necessary_diagnostic,
    phi_bounded_certificate,
    phi_diagnostic,
    sufficiency_certificate,
)
from pyspps.exception import (
    ArithmeticModeException,
    DegenerateBoundaryException,
    DeserializeException,
    IndexOutOfRangeException,
    InvalidArgumentException,
    InvalidCoefficientException,
    InvalidWindowException,
    ProblemFileException,
    SignConditionException,
    SppsException,
    UsageException,
)
from pyspps.logging import logger, set_verbosity
from pyspps.oracle import oracle_solution, shooting_eigen_real
from pyspps.problem import DEFAULT_TOLERANCE, PreparedProblem, ProblemFile, prepare
from pyspps.scalar import ArithmeticMode, format_real, scalar_parts
from pyspps.seed import certify_seed
from pyspps.seqgrid import CoefficientSet, Sequence, jacobi_residuals, relative_residual, residual_scale
from pyspps.spectral import BoundaryCondition, EigenResult, solve_eigen
from pyspps.spps import (
    assemble_u1,
    assemble_u2,
    build_table,
    delta2_x_closed_form,
    delta2_y_closed_form,
    eval_solution,
    laguerre_closed_form,
    laguerre_table_value,
)

__all__ = [
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_NUMERICAL",
    "EXIT_INCONCLUSIVE",
    "EIGEN_RESIDUAL_TOLERANCE",
    "CROSS_CHECK_TOLERANCE",
    "CSV_SCHEMA_VERSION",
    "DEMOS",
    "main",
]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_INCONCLUSIVE = 3

EIGEN_RESIDUAL_TOLERANCE = 1e-8
"""Relative residual accepted for eigenfunctions unless ``--tol`` is given."""

CROSS_CHECK_TOLERANCE = 1e-8
"""Agreement required between shooting, spectral roots and expected eigenvalues."""

CSV_SCHEMA_VERSION = "1"

DEMOS = ("delta2", "laguerre")

DEMO_SIZE = 12

USAGE_ERRORS = (
    DeserializeException,
    InvalidArgumentException,
    InvalidWindowException,
    InvalidCoefficientException,
    ArithmeticModeException,
    IndexOutOfRangeException,
    DegenerateBoundaryException,
    OSError,
)

Row = List[str]


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageException(message)


def _parts(value: Any) -> Tuple[str, str]:
    re, im = scalar_parts(value)
    return format_real(re), format_real(im)


def _float(value: float) -> str:
    return format(float(value), ".17g")


def _render(rows: List[Row], pretty: bool) -> str:
    if pretty:
        widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
        return "".join(
            "  ".join(cell.rjust(w) for cell, w in zip(row, widths)).rstrip() + "\n"
            for row in rows
        )
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(rows)
    return buffer.getvalue()


@contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as f:
            yield f


def _emit(args: argparse.Namespace, *tables: List[Row]):
    with _output(args.out) as stream:
        stream.write("\n".join(_render(table, args.pretty) for table in tables))


def _load(args: argparse.Namespace) -> ProblemFile:
    problem = ProblemFile.load(args.file)
    logger.info(f"Loaded problem '{problem.name}' from {args.file}.")
    return problem


def _mode(args: argparse.Namespace) -> Optional[ArithmeticMode]:
    return None if args.mode is None else ArithmeticMode(args.mode)


def _tolerance(args: argparse.Namespace, problem: ProblemFile) -> float:
    if args.tol is not None:
        return args.tol
    return DEFAULT_TOLERANCE if problem.tolerance is None else problem.tolerance


def _pointwise_residuals(c: CoefficientSet, u: Sequence, lam: Any) -> List[str]:
    """Per-site relative residuals; empty at the two ends where the equation is not imposed."""
    scale = residual_scale(c, u, lam)
    magnitudes = c.mode.magnitudes(jacobi_residuals(c, u, lam))
    relative = magnitudes / scale if scale else magnitudes
    return [""] + [_float(v) for v in relative] + [""]


def _left_solution(
    bc: Optional[BoundaryCondition], a: Sequence, b: Sequence, lam: Any
) -> Optional[Sequence]:
    """The solution ``Bl(u2)·u1 - Bl(u1)·u2``, which satisfies the left boundary condition."""
    if bc is None:
        return None
    return a * bc.left.apply(b, lam) - b * bc.left.apply(a, lam)


def cmd_solve(args: argparse.Namespace) -> int:
    problem = _load(args)
    if not problem.lambdas:
        raise ProblemFileException("solve needs at least one value.", "lambdas")
    prepared = prepare(problem, _mode(args))
    c, mode = prepared.coeffs, prepared.mode
    tol = _tolerance(args, problem)
    header = [
        "schema_version", "lambda_re", "lambda_im", "n", "u0_re", "u0_im",
        "u1_re", "u1_im", "u2_re", "u2_im", "u_re", "u_im", "residual_u1", "residual_u2",
    ]  # fmt: skip
    rows = [header]
    worst = 0.0
    for literal in problem.lambdas:
        lam = mode.coerce(literal)
        a = eval_solution(prepared.u1, lam)
        b = eval_solution(prepared.u2, lam)
        u = _left_solution(problem.boundary, a, b, lam)
        worst = max(worst, relative_residual(c, a, lam), relative_residual(c, b, lam))
        res_a = _pointwise_residuals(c, a, lam)
        res_b = _pointwise_residuals(c, b, lam)
        for j, n in enumerate(c.window.indices()):
            u_cells = _parts(u[n]) if u is not None else ("", "")
            rows.append(
                [CSV_SCHEMA_VERSION, *_parts(lam), str(n), *_parts(prepared.seed.u0[n]),
                 *_parts(a[n]), *_parts(b[n]), *u_cells, res_a[j], res_b[j]]
            )  # fmt: skip
    _emit(args, rows)
    if not worst <= tol:
        logger.error(f"Largest relative residual {worst:.3e} exceeds {tol:.1e}.")
        return EXIT_NUMERICAL
    return EXIT_OK


def _require_boundary(problem: ProblemFile) -> BoundaryCondition:
    if problem.boundary is None:
        raise ProblemFileException("this command needs a boundary condition.", "boundary")
    return problem.boundary


def _eigen(prepared: PreparedProblem) -> EigenResult:
    bc = _require_boundary(prepared.problem)
    return solve_eigen(prepared.coeffs, prepared.u1, prepared.u2, bc)


def cmd_eigen(args: argparse.Namespace) -> int:
    problem = _load(args)
    _require_boundary(problem)
    prepared = prepare(problem, _mode(args))
    result = _eigen(prepared)
    tol = EIGEN_RESIDUAL_TOLERANCE if args.tol is None else args.tol
    rows = [["schema_version", "index", "lambda_re", "lambda_im", "residual", "multiple", "converged"]]
    for i, lam in enumerate(result.eigenvalues):
        rows.append(
            [CSV_SCHEMA_VERSION, str(i), _float(lam.real), _float(lam.imag),
             _float(result.residuals[i]), str(bool(result.multiplicity_flags[i])).lower(),
             str(bool(result.converged[i])).lower()]
        )  # fmt: skip
    tables = [rows]
    if args.eigenfunctions:
        functions = [["schema_version", "index", "n", "value_re", "value_im"]]
        for i, u in enumerate(result.eigenfunctions):
            if u is None:
                continue
            for n, value in zip(u.indices(), u.values):
                functions.append([CSV_SCHEMA_VERSION, str(i), str(n), *_parts(value)])
        tables.append(functions)
    _emit(args, *tables)
    failed = not result.all_converged or bool(
        np.any(~(result.residuals <= tol))
    )
    if failed:
        logger.error("Some eigenvalues did not converge or have large residuals.")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_bounded(args: argparse.Namespace) -> int:
    problem = _load(args).with_mode(_mode(args))
    c = problem.coefficient_set()
    if any(bool(v) for v in c.q.values):
        raise ProblemFileException("boundedness analysis needs q ≡ 0.", "coefficients.q")
    lo, hi = c.window.lo, c.window.hi
    seed = certify_seed(c, 0, Sequence.constant(lo, hi, 1, c.mode))
    table = build_table(c, seed, problem.center)

    rows: List[Row] = [["schema_version", "quantity", "value"]]

    def add(quantity: str, value: Any):
        rows.append([CSV_SCHEMA_VERSION, quantity, str(value).lower() if isinstance(value, bool) else str(value)])

    necessary_violated = False
    try:
        double_rp, inv_p = necessary_diagnostic(c)
        phi_series = phi_diagnostic(c)
        add("sign_conditions", "satisfied")
        for diagnostic in (double_rp, inv_p, phi_series):
            add(f"{diagnostic.kind.value}_total", _float(diagnostic.total))
            add(f"{diagnostic.kind.value}_diverging", diagnostic.diverging)
        necessary_violated = double_rp.diverging or inv_p.diverging
    except SignConditionException as e:
        logger.info(f"Necessary-condition diagnostics skipped: {e}")
        add("sign_conditions", "not_applicable")

    solution = sufficiency_certificate(c, table)
    phi = phi_bounded_certificate(c, table)
    for certificate in (solution, phi):
        prefix = certificate.kind.value
        add(f"{prefix}_certificate", "valid" if certificate.valid else "inconclusive")
        if certificate.valid:
            add(f"{prefix}_n_star", certificate.n_star)
            add(f"{prefix}_delta", _float(certificate.delta))
            add(f"{prefix}_bound", _float(certificate.solution_bound))
        add(f"{prefix}_horizon", certificate.horizon)

    if solution.valid:
        status, code = "certified", EXIT_OK
    elif necessary_violated:
        status, code = "necessary_condition_violated", EXIT_OK
    else:
        status, code = "inconclusive", EXIT_INCONCLUSIVE
    add("status", status)
    _emit(args, rows)
    logger.info(f"Boundedness status: {status}.")
    return code


def _discrepancy(computed: Sequence, reference: Sequence) -> Tuple[float, int]:
    """Largest pointwise difference relative to the largest reference value, and where it occurs.

    A non-finite value on either side counts as an infinite discrepancy at its first site.
    """
    mode = computed.mode
    ours, theirs = mode.magnitudes(computed.values), mode.magnitudes(reference.values)
    broken = ~(np.isfinite(ours) & np.isfinite(theirs))
    if broken.any():
        return float("inf"), computed.start + int(np.argmax(broken))
    differences = mode.magnitudes(computed.values - reference.values)
    scale = float(np.max(theirs)) or 1.0
    worst = int(np.argmax(differences))
    return float(differences[worst]) / scale, computed.start + worst


def _set_distance(found: np.ndarray, reference: np.ndarray) -> Tuple[float, int]:
    """Symmetric matching distance between two root sets, with the index of the worst reference root."""
    if len(found) != len(reference):
        return float("inf"), -1
    if len(found) == 0:
        return 0.0, -1
    gaps = np.abs(found[:, None] - reference[None, :])
    to_reference = gaps.min(axis=0)
    worst = int(np.argmax(to_reference))
    return float(max(to_reference.max(), gaps.min(axis=1).max())), worst


def cmd_verify(args: argparse.Namespace) -> int:
    problem = _load(args)
    prepared = prepare(problem, _mode(args))
    c, mode = prepared.coeffs, prepared.mode
    tol = _tolerance(args, problem)
    lambdas = [mode.coerce(v) for v in problem.lambdas] if problem.lambdas else [
        prepared.lambda0,
        prepared.lambda0 + mode.one,
    ]
    lo = c.window.lo
    rows: List[Row] = [
        ["schema_version", "check", "max_discrepancy", "worst_n", "worst_lambda_re",
         "worst_lambda_im", "passed"]
    ]  # fmt: skip
    passed_all = True

    for label, sol in (("u1_vs_oracle", prepared.u1), ("u2_vs_oracle", prepared.u2)):
        worst: Tuple[float, int, Any] = (0.0, lo, lambdas[0])
        for lam in lambdas:
            computed = eval_solution(sol, lam)
            reference = oracle_solution(c, lam, (computed[lo], computed[lo + 1]))
            gap, n = _discrepancy(computed, reference)
            if not gap <= worst[0]:
                worst = (gap, n, lam)
        passed = bool(worst[0] <= tol)
        passed_all &= passed
        rows.append([CSV_SCHEMA_VERSION, label, _float(worst[0]), str(worst[1]),
                     *_parts(worst[2]), str(passed).lower()])  # fmt: skip

    bc = problem.boundary
    if bc is not None:
        result = _eigen(prepared)
        roots = result.eigenvalues
        real_roots = np.sort(roots[roots.imag == 0].real)
        if c.is_real(0) and mode.is_real_array(c.r.values) and bc.is_real() and len(real_roots):
            margin = 1.0 + 0.05 * float(np.ptp(real_roots))
            shot = shooting_eigen_real(
                c, bc, float(real_roots[0]) - margin, float(real_roots[-1]) + margin
            )
            gap, worst_i = _set_distance(shot.astype(complex), real_roots.astype(complex))
            passed = bool(gap <= CROSS_CHECK_TOLERANCE)
            passed_all &= passed
            worst_lam = real_roots[worst_i] if worst_i >= 0 else 0.0
            rows.append([CSV_SCHEMA_VERSION, "shooting_vs_roots", _float(gap), "",
                         _float(worst_lam), "0", str(passed).lower()])  # fmt: skip
        if problem.expected_eigenvalues is not None:
            expected = np.array([complex(v) for v in problem.expected_eigenvalues])
            gap, worst_i = _set_distance(roots, expected)
            passed = bool(gap <= CROSS_CHECK_TOLERANCE)
            passed_all &= passed
            worst_lam = expected[worst_i] if worst_i >= 0 else 0j
            rows.append([CSV_SCHEMA_VERSION, "expected_eigenvalues", _float(gap), "",
                         *_parts(worst_lam), str(passed).lower()])  # fmt: skip

    _emit(args, rows)
    if not passed_all:
        logger.error("Verification failed; see the rows marked false.")
        return EXIT_NUMERICAL
    return EXIT_OK


def _demo_delta2() -> List[Row]:
    c = CoefficientSet.build(0, DEMO_SIZE, lambda n: 1, lambda n: 0, lambda n: 1, ArithmeticMode.RATIONAL)
    seed = certify_seed(c, 0, Sequence.constant(0, DEMO_SIZE, 1, ArithmeticMode.RATIONAL))
    table = build_table(c, seed, 0)
    rows = []
    for k in range(DEMO_SIZE // 2 + 1):
        for n in c.window.indices():
            rows.append(("x_even", k, n, table.x(2 * k, n), delta2_x_closed_form(n, k)))
            rows.append(("y_odd", k, n, table.y(2 * k + 1, n), delta2_y_closed_form(n, k)))
    return rows


def _demo_laguerre() -> List[Row]:
    mode = ArithmeticMode.RATIONAL
    c = CoefficientSet.build(0, DEMO_SIZE, lambda n: n + 1, lambda n: 0, lambda n: -1, mode)
    seed = certify_seed(c, 0, Sequence.constant(0, DEMO_SIZE, 1, mode))
    table = build_table(c, seed, 0)
    rows = []
    for k in range(1, DEMO_SIZE // 2 + 1):
        sign = (-1) ** k
        for n in c.window.indices():
            computed = sign * table.x(2 * k, n) - sign * table.y(2 * k - 1, n)
            rows.append(("sum_identity", k, n, computed, laguerre_table_value(n, k)))
    for n in range(1, DEMO_SIZE + 1):
        computed = (-1) ** (n - 1) * table.y(2 * n - 1, n)
        rows.append(("y_diagonal", n, n, computed, Fraction(1, factorial(n))))
    a = eval_solution(assemble_u1(table), 1)
    b = eval_solution(assemble_u2(table), 1)
    for n in c.window.indices():
        rows.append(("polynomial_at_1", "", n, a[n] - b[n], laguerre_closed_form(n, 1)))
    return rows


def cmd_demo(args: argparse.Namespace) -> int:
    entries = _demo_delta2() if args.name == "delta2" else _demo_laguerre()
    rows = [["schema_version", "table", "k", "n", "computed", "closed_form", "match"]]
    mismatches = 0
    for table, k, n, computed, closed in entries:
        match = computed == closed
        mismatches += not match
        rows.append([CSV_SCHEMA_VERSION, table, str(k), str(n), str(computed), str(closed),
                     str(match).lower()])  # fmt: skip
    _emit(args, rows)
    if mismatches:
        logger.error(f"{mismatches} table entries differ from their closed forms.")
        return EXIT_NUMERICAL
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="Relative tolerance of the pass/fail checks.")
    common.add_argument("--mode", choices=[m.value for m in ArithmeticMode], help="Override the file's arithmetic mode.")
    common.add_argument("--out", help="Write the CSV to this path instead of stdout.")
    common.add_argument("--pretty", action="store_true", help="Align columns for reading.")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs.")

    parser = _ArgumentParser(prog="spps", description="Finite spectral parameter power series for Jacobi difference equations.")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, handler, summary in (
        ("solve", cmd_solve, "Evaluate the solutions u1, u2 at the file's lambdas."),
        ("eigen", cmd_eigen, "Eigenvalues of the two-point problem."),
        ("bounded", cmd_bounded, "Boundedness diagnostics and certificates."),
        ("verify", cmd_verify, "Cross-check against direct recurrence and shooting."),
    ):
        sub = commands.add_parser(name, parents=[common], help=summary)
        sub.add_argument("--file", required=True, help="Problem file (JSON).")
        if name == "eigen":
            sub.add_argument("--eigenfunctions", action="store_true", help="Append the eigenfunction table.")
        sub.set_defaults(handler=handler)

    demo = commands.add_parser("demo", parents=[common], help="Tables of the built-in examples next to their closed forms.")
    demo.add_argument("name", choices=DEMOS)
    demo.set_defaults(handler=cmd_demo)
    return parser


def main(argv: Optional[Seq[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageException as e:
        print(f"spps: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return EXIT_OK if e.code is None else int(e.code)
    set_verbosity(args.verbose)
    try:
        return args.handler(args)
    except ProblemFileException as e:
        print(f"spps: invalid problem file: {e}", file=sys.stderr)
        return EXIT_USAGE
    except USAGE_ERRORS as e:
        print(f"spps: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SppsException as e:
        print(f"spps: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
