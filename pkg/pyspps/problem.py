"""Problem files: the JSON description of an operator, its window and what to compute.

A problem file looks like::

    {
      "schema_version": 1,
      "name": "delta2-dirichlet-4",
      "window": {"a": 1, "n_max": 4},
      "n0": 0,
      "lambda0": 0,
      "mode": "rational",
      "coefficients": {
        "p": {"name": "constant", "params": {"value": 1}},
        "q": {"name": "constant", "params": {"value": 0}},
        "r": [1, 1, 1, 1]
      },
      "boundary": {"left": {"site": 0, "alpha": 1, "beta": 0},
                   "right": {"site": 3, "alpha": 0, "beta": 1}},
      "lambdas": ["-2", [0.5, 1]]
    }

Integers and ``"p/q"`` strings are exact, JSON floats are inexact and ``[re, im]`` pairs are
complex. The solution lives on ``[a - 1, n_max]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from frozendict import frozendict

from pyspps.exception import (
    ArithmeticModeException,
    DeserializeException,
    IndexOutOfRangeException,
    InvalidCoefficientException,
    ProblemFileException,
)
from pyspps.logging import logger
from pyspps.scalar import (
    ArithmeticMode,
    GaussianRational,
    Scalar,
    ScalarLiteral,
    parse_scalar,
)
from pyspps.seed import (
    SeedSolution,
    build_seed_complex,
    build_seed_search,
    certify_seed,
)
from pyspps.serialization import MapJsonSerializable
from pyspps.seqgrid import CoefficientSet, IndexWindow, Sequence
from pyspps.spectral import BoundaryCondition
from pyspps.spps import (
    LambdaPolySolution,
    SppsTable,
    assemble_u1,
    assemble_u2,
    build_table,
)

__all__ = [
    "SCHEMA_VERSION",
    "DEFAULT_TOLERANCE",
    "BUILTIN_PARAMS",
    "BuiltinSpec",
    "CoefficientSource",
    "CoefficientsSpec",
    "WindowSpec",
    "ProblemFile",
    "PreparedProblem",
    "build_seed",
    "prepare",
]

SCHEMA_VERSION = 1

DEFAULT_TOLERANCE = 1e-10
"""Relative residual accepted by ``solve`` and ``verify`` unless the file or ``--tol`` says otherwise."""

BUILTIN_PARAMS: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    "constant": (("value",), ()),
    "power": (("exponent",), ("scale", "shift")),
    "exponential": (("base",), ("scale", "phase")),
    "laguerre_p": ((), ()),
}
"""Required and optional parameters of every builtin coefficient family."""


def _params_hook(value: Any) -> frozendict:
    if not isinstance(value, dict):
        raise DeserializeException(f"params must be an object, got {value!r}.")
    return frozendict(value)


def _real_param(params: frozendict, key: str, default: Any = 0) -> float:
    value = params.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidCoefficientException(f"'{key}' must be a real number, got {value!r}.")
    return value


@dataclass(frozen=True)
class BuiltinSpec(MapJsonSerializable):
    """A named coefficient family.

    * ``constant {value}``: ``value``
    * ``power {exponent, scale=1, shift=0}``: ``scale·(n + shift)^exponent``
    * ``exponential {base, scale=1, phase=0}``: ``scale·base^n·e^(i·phase·n)``
    * ``laguerre_p {}``: ``n + 1``

    Examples:
        >>> spec = BuiltinSpec("power", frozendict({"exponent": 2, "shift": 1}))
        >>> [str(spec.evaluate(n, ArithmeticMode.RATIONAL)) for n in range(4)]
        ['1', '4', '9', '16']
    """

    name: str
    params: frozendict = field(
        default_factory=frozendict, metadata={"object_hook": _params_hook}
    )

    def __post_init__(self):
        if not isinstance(self.params, frozendict):
            object.__setattr__(self, "params", frozendict(self.params))
        if self.name not in BUILTIN_PARAMS:
            raise InvalidCoefficientException(
                f"Unknown builtin '{self.name}', expected one of {sorted(BUILTIN_PARAMS)}."
            )
        required, optional = BUILTIN_PARAMS[self.name]
        missing = [k for k in required if k not in self.params]
        if missing:
            raise InvalidCoefficientException(f"Builtin '{self.name}' needs {missing}.")
        unknown = [k for k in self.params if k not in required + optional]
        if unknown:
            raise InvalidCoefficientException(
                f"Builtin '{self.name}' does not take {unknown}."
            )

    def evaluate(self, n: int, mode: ArithmeticMode) -> Scalar:
        params = self.params
        if self.name == "constant":
            return mode.coerce(params["value"])
        if self.name == "laguerre_p":
            return mode.coerce(n + 1)
        scale = mode.coerce(params.get("scale", 1))
        try:
            if self.name == "power":
                exponent = _real_param(params, "exponent")
                base = mode.coerce(n + int(_real_param(params, "shift")))
                if mode.is_exact and not isinstance(exponent, int):
                    raise ArithmeticModeException(
                        "Rational mode needs an integer exponent."
                    )
                return scale * base**exponent
            value = scale * mode.coerce(params["base"]) ** n
        except ZeroDivisionError as e:
            raise InvalidCoefficientException(
                f"Builtin '{self.name}' is undefined at n = {n}."
            ) from e
        phase = _real_param(params, "phase")
        if phase:
            if mode.is_exact:
                raise ArithmeticModeException("A nonzero phase needs float mode.")
            value = value * np.exp(1j * phase * n)
        return value


CoefficientSource = Union[Tuple[ScalarLiteral, ...], BuiltinSpec]
"""Explicit values or a builtin family."""


def _scalar_tuple(value: Any) -> Tuple[ScalarLiteral, ...]:
    if not isinstance(value, list):
        raise DeserializeException(f"Expected an array of numbers, got {value!r}.")
    return tuple(parse_scalar(v, f"[{i}]") for i, v in enumerate(value))


def _optional_scalar_tuple(value: Any) -> Optional[Tuple[ScalarLiteral, ...]]:
    return None if value is None else _scalar_tuple(value)


def _source_hook(value: Any) -> CoefficientSource:
    if isinstance(value, dict):
        return BuiltinSpec.from_primitive(value)
    if isinstance(value, list):
        return _scalar_tuple(value)
    raise DeserializeException(
        f"Expected an array of values or a builtin spec, got {value!r}."
    )


def _optional_source_hook(value: Any) -> Optional[CoefficientSource]:
    return None if value is None else _source_hook(value)


@dataclass(frozen=True)
class CoefficientsSpec(MapJsonSerializable):
    p: CoefficientSource = field(metadata={"object_hook": _source_hook})
    q: CoefficientSource = field(metadata={"object_hook": _source_hook})
    r: CoefficientSource = field(metadata={"object_hook": _source_hook})


@dataclass(frozen=True)
class WindowSpec(MapJsonSerializable):
    """The half-line start ``a`` and the last index ``n_max``; the solution lives on ``[a - 1, n_max]``."""

    a: int
    n_max: int

    def __post_init__(self):
        self.to_window()

    def to_window(self) -> IndexWindow:
        return IndexWindow(self.a - 1, self.n_max)


def _expand(
    source: CoefficientSource, first: int, last: int, mode: ArithmeticMode, path: str
) -> Sequence:
    try:
        if isinstance(source, BuiltinSpec):
            values = [source.evaluate(n, mode) for n in range(first, last + 1)]
        else:
            if len(source) != last - first + 1:
                raise InvalidCoefficientException(
                    f"Expected {last - first + 1} values for [{first}, {last}], got {len(source)}."
                )
            values = list(source)
        return Sequence(first, values, mode)
    except (InvalidCoefficientException, ArithmeticModeException) as e:
        raise ProblemFileException(str(e), path) from e


@dataclass(frozen=True)
class ProblemFile(MapJsonSerializable):
    """A parsed problem file.

    Only ``window`` and ``coefficients`` are required. ``n0`` defaults to the window start, the
    seed is searched for when absent, and ``boundary`` is needed by ``eigen`` and the shooting
    check of ``verify``. Coefficients are expanded once at construction so that a zero of ``p`` or
    a length mismatch is reported with its field path.
    """

    window: WindowSpec
    coefficients: CoefficientsSpec
    schema_version: int = SCHEMA_VERSION
    name: str = "unnamed"
    description: Optional[str] = field(default=None, metadata={"optional": True})
    n0: Optional[int] = field(default=None, metadata={"optional": True})
    lambda0: ScalarLiteral = field(
        default=GaussianRational(0), metadata={"object_hook": parse_scalar}
    )
    mode: ArithmeticMode = ArithmeticMode.FLOAT
    boundary: Optional[BoundaryCondition] = field(
        default=None, metadata={"optional": True}
    )
    lambdas: Optional[Tuple[ScalarLiteral, ...]] = field(
        default=None, metadata={"optional": True, "object_hook": _optional_scalar_tuple}
    )
    seed: Optional[CoefficientSource] = field(
        default=None, metadata={"optional": True, "object_hook": _optional_source_hook}
    )
    tolerance: Optional[float] = field(default=None, metadata={"optional": True})
    expected_eigenvalues: Optional[Tuple[ScalarLiteral, ...]] = field(
        default=None, metadata={"optional": True, "object_hook": _optional_scalar_tuple}
    )

    def __post_init__(self):
        object.__setattr__(self, "lambda0", parse_scalar(self.lambda0, "lambda0"))
        if self.schema_version != SCHEMA_VERSION:
            raise ProblemFileException(
                f"Unsupported schema version {self.schema_version}.", "schema_version"
            )
        window = self.window.to_window()
        if self.n0 is not None and not window.lo <= self.n0 <= window.hi - 1:
            raise ProblemFileException(
                f"n0 = {self.n0} must lie in [{window.lo}, {window.hi - 1}].", "n0"
            )
        if self.boundary is not None:
            try:
                self.boundary.check_window(window)
            except IndexOutOfRangeException as e:
                raise ProblemFileException(str(e), "boundary") from e
        if self.tolerance is not None and not self.tolerance > 0:
            raise ProblemFileException("tolerance must be positive.", "tolerance")
        self.coefficient_set()
        self.seed_sequence()

    @property
    def index_window(self) -> IndexWindow:
        return self.window.to_window()

    @property
    def center(self) -> int:
        return self.index_window.lo if self.n0 is None else self.n0

    def coefficient_set(self, mode: Optional[ArithmeticMode] = None) -> CoefficientSet:
        """Expand the coefficients in ``mode`` (the file's mode by default).

        Raises:
            ProblemFileException: With the path of the offending coefficient.
        """
        mode = self.mode if mode is None else mode
        lo, hi = self.index_window.lo, self.index_window.hi
        spec = self.coefficients
        p = _expand(spec.p, lo, hi - 1, mode, "coefficients.p")
        for n, value in zip(p.indices(), p.values):
            if not value:
                raise ProblemFileException(f"p({n}) is zero.", "coefficients.p")
        q = _expand(spec.q, lo + 1, hi, mode, "coefficients.q")
        r = _expand(spec.r, lo + 1, hi, mode, "coefficients.r")
        return CoefficientSet(self.index_window, p, q, r)

    def seed_sequence(self, mode: Optional[ArithmeticMode] = None) -> Optional[Sequence]:
        if self.seed is None:
            return None
        mode = self.mode if mode is None else mode
        return _expand(self.seed, self.index_window.lo, self.index_window.hi, mode, "seed")

    def with_mode(self, mode: Optional[ArithmeticMode]) -> ProblemFile:
        if mode is None or mode is self.mode:
            return self
        return replace(self, mode=mode)


@dataclass(frozen=True, eq=False)
class PreparedProblem:
    """Everything built from a problem file before a command runs."""

    problem: ProblemFile
    coeffs: CoefficientSet
    seed: SeedSolution
    table: SppsTable
    u1: LambdaPolySolution
    u2: LambdaPolySolution

    @property
    def mode(self) -> ArithmeticMode:
        return self.coeffs.mode

    @property
    def lambda0(self) -> Scalar:
        return self.seed.lambda0


def build_seed(problem: ProblemFile, c: CoefficientSet) -> SeedSolution:
    """Certify the file's seed, or build one: ``u + iv`` for real problems, a search otherwise."""
    explicit = problem.seed_sequence(c.mode)
    if explicit is not None:
        return certify_seed(c, problem.lambda0, explicit)
    if c.is_real(problem.lambda0):
        return build_seed_complex(c, problem.lambda0)
    return build_seed_search(c, problem.lambda0)


def prepare(problem: ProblemFile, mode: Optional[ArithmeticMode] = None) -> PreparedProblem:
    """Build coefficients, seed, table and the basis ``(u1, u2)`` for a problem file."""
    problem = problem.with_mode(mode)
    c = problem.coefficient_set()
    seed = build_seed(problem, c)
    table = build_table(c, seed, problem.center)
    logger.info(
        f"Prepared '{problem.name}' on [{c.window.lo}, {c.window.hi}] in {c.mode.value} mode "
        f"with a {seed.method} seed."
    )
    return PreparedProblem(
        problem=problem,
        coeffs=c,
        seed=seed,
        table=table,
        u1=assemble_u1(table),
        u2=assemble_u2(table),
    )
