"""Scalars in the two arithmetic modes (complex float and exact Gaussian rational)."""

from __future__ import annotations

import math
import numbers
from enum import Enum
from fractions import Fraction
from typing import Any, Iterable, Tuple, Union

import numpy as np

from pyspps.exception import ArithmeticModeException, DeserializeException

__all__ = [
    "GaussianRational",
    "ArithmeticMode",
    "Scalar",
    "ScalarLiteral",
    "parse_scalar",
    "scalar_to_primitive",
    "scalar_parts",
    "format_real",
]


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ArithmeticModeException(f"Boolean {value} is not a number.")
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ArithmeticModeException(
                f"Cannot read '{value}' as an exact rational."
            ) from e
    raise ArithmeticModeException(
        f"Expected an exact rational value, got {type(value).__name__} {value!r}."
    )


class GaussianRational:
    """An exact complex number with rational real and imaginary parts.

    Instances are immutable and support the field operations, integer powers and
    comparison with exact numbers. Mixing them with floats is an error, so exact
    computations cannot silently degrade.

    Examples:
        >>> z = GaussianRational(1, "1/2")
        >>> z * z
        GaussianRational('3/4', '1')
        >>> (z - 1) / 2
        GaussianRational('0', '1/4')
        >>> print(GaussianRational("2/3"))
        2/3
    """

    __slots__ = ("_real", "_imag")

    def __init__(
        self,
        real: Union[int, Fraction, str] = 0,
        imag: Union[int, Fraction, str] = 0,
    ):
        self._real = _to_fraction(real)
        self._imag = _to_fraction(imag)

    @classmethod
    def _make(cls, real: Fraction, imag: Fraction) -> GaussianRational:
        obj = object.__new__(cls)
        obj._real = real
        obj._imag = imag
        return obj

    @classmethod
    def from_value(cls, value: Any) -> GaussianRational:
        """Convert a number or a literal to a Gaussian rational.

        Floats are read through their shortest decimal representation, so ``0.1``
        becomes ``1/10`` rather than the nearest binary fraction.

        Args:
            value: An int, Fraction, rational string, float, complex, or GaussianRational.

        Returns:
            GaussianRational: The exact value.

        Raises:
            ArithmeticModeException: When the value cannot be read exactly.
        """
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (numbers.Integral, Fraction, str)):
            return cls._make(_to_fraction(value), Fraction(0))
        if isinstance(value, numbers.Real):
            return cls._make(_float_to_fraction(float(value)), Fraction(0))
        if isinstance(value, numbers.Complex):
            value = complex(value)
            return cls._make(
                _float_to_fraction(value.real), _float_to_fraction(value.imag)
            )
        raise ArithmeticModeException(
            f"Cannot convert {type(value).__name__} {value!r} to an exact value."
        )

    @property
    def real(self) -> Fraction:
        return self._real

    @property
    def imag(self) -> Fraction:
        return self._imag

    @property
    def is_real(self) -> bool:
        return self._imag == 0

    def conjugate(self) -> GaussianRational:
        return GaussianRational._make(self._real, -self._imag)

    @staticmethod
    def _coerce(other: Any) -> Union[GaussianRational, None]:
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, Fraction):
            return GaussianRational._make(other, Fraction(0))
        if isinstance(other, numbers.Integral) and not isinstance(other, bool):
            return GaussianRational._make(Fraction(int(other)), Fraction(0))
        if isinstance(other, numbers.Complex):
            raise ArithmeticModeException(
                f"Inexact value {other!r} cannot enter exact arithmetic."
            )
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational._make(self._real + o._real, self._imag + o._imag)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational._make(self._real - o._real, self._imag - o._imag)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational._make(o._real - self._real, o._imag - self._imag)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b, c, d = self._real, self._imag, o._real, o._imag
        if b == 0 and d == 0:
            return GaussianRational._make(a * c, Fraction(0))
        return GaussianRational._make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self._reciprocal()

    def _reciprocal(self) -> GaussianRational:
        a, b = self._real, self._imag
        if b == 0:
            if a == 0:
                raise ZeroDivisionError("GaussianRational division by zero")
            return GaussianRational._make(1 / a, Fraction(0))
        norm = a * a + b * b
        return GaussianRational._make(a / norm, -b / norm)

    def __pow__(self, exponent):
        if not isinstance(exponent, numbers.Integral):
            return NotImplemented
        exponent = int(exponent)
        base = self
        if exponent < 0:
            base = self._reciprocal()
            exponent = -exponent
        result = GaussianRational._make(Fraction(1), Fraction(0))
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __neg__(self):
        return GaussianRational._make(-self._real, -self._imag)

    def __pos__(self):
        return self

    def __abs__(self) -> float:
        if self._imag == 0:
            return abs(float(self._real))
        return math.hypot(float(self._real), float(self._imag))

    def __bool__(self) -> bool:
        return self._real != 0 or self._imag != 0

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self._real == other._real and self._imag == other._imag
        if isinstance(other, (numbers.Rational)):
            return self._imag == 0 and self._real == other
        if isinstance(other, numbers.Complex):
            return complex(self) == complex(other)
        return NotImplemented

    def __hash__(self):
        if self._imag == 0:
            return hash(self._real)
        return hash((self._real, self._imag))

    def __complex__(self) -> complex:
        return complex(float(self._real), float(self._imag))

    def __float__(self) -> float:
        if self._imag != 0:
            raise TypeError(f"{self} has a nonzero imaginary part.")
        return float(self._real)

    def __repr__(self):
        return f"GaussianRational('{self._real}', '{self._imag}')"

    def __str__(self):
        if self._imag == 0:
            return str(self._real)
        sign = "+" if self._imag >= 0 else "-"
        return f"{self._real}{sign}{abs(self._imag)}i"


def _float_to_fraction(value: float) -> Fraction:
    if not math.isfinite(value):
        raise ArithmeticModeException(f"Non-finite value {value} has no exact form.")
    return Fraction(repr(value))


Scalar = Union[int, float, complex, Fraction, GaussianRational]
"""A number in either arithmetic mode."""

ScalarLiteral = Union[complex, GaussianRational]
"""The parsed form of a scalar written in a problem file."""


class ArithmeticMode(Enum):
    """How a computation represents its numbers.

    ``FLOAT`` keeps values in numpy ``complex128`` arrays. ``RATIONAL`` keeps them in
    numpy object arrays of :class:`GaussianRational`, which makes every identity that
    holds algebraically hold exactly.
    """

    FLOAT = "float"
    RATIONAL = "rational"

    @property
    def is_exact(self) -> bool:
        return self is ArithmeticMode.RATIONAL

    @classmethod
    def of(cls, value: Any) -> ArithmeticMode:
        """The mode a single scalar belongs to."""
        if isinstance(value, (GaussianRational, Fraction)):
            return cls.RATIONAL
        return cls.FLOAT

    def coerce(self, value: Any) -> Scalar:
        """Convert a number or a literal into this mode's scalar type."""
        if isinstance(value, (str, list, tuple)):
            value = parse_scalar(value)
        if self is ArithmeticMode.FLOAT:
            try:
                return complex(value)
            except TypeError as e:
                raise ArithmeticModeException(
                    f"Cannot convert {value!r} to a complex float."
                ) from e
        return GaussianRational.from_value(value)

    def array(self, values: Iterable[Any]) -> np.ndarray:
        """Build a one-dimensional array of this mode from arbitrary numbers."""
        if self is ArithmeticMode.FLOAT:
            if isinstance(values, np.ndarray) and values.dtype != object:
                return values.astype(np.complex128)
            return np.array([self.coerce(v) for v in values], dtype=np.complex128)
        items = [GaussianRational.from_value(v) for v in values]
        out = np.empty(len(items), dtype=object)
        out[:] = items
        return out

    def zeros(self, size: int) -> np.ndarray:
        if self is ArithmeticMode.FLOAT:
            return np.zeros(size, dtype=np.complex128)
        out = np.empty(size, dtype=object)
        out.fill(_EXACT_ZERO)
        return out

    def ones(self, size: int) -> np.ndarray:
        if self is ArithmeticMode.FLOAT:
            return np.ones(size, dtype=np.complex128)
        out = np.empty(size, dtype=object)
        out.fill(_EXACT_ONE)
        return out

    @property
    def zero(self) -> Scalar:
        return 0j if self is ArithmeticMode.FLOAT else _EXACT_ZERO

    @property
    def one(self) -> Scalar:
        return 1 + 0j if self is ArithmeticMode.FLOAT else _EXACT_ONE

    @property
    def imaginary_unit(self) -> Scalar:
        return 1j if self is ArithmeticMode.FLOAT else _EXACT_I

    def magnitudes(self, values: np.ndarray) -> np.ndarray:
        """Element-wise moduli as a float array of the same shape."""
        if self is ArithmeticMode.FLOAT:
            return np.abs(values)
        return np.abs(values).astype(float)

    def is_real_array(self, values: np.ndarray) -> bool:
        if self is ArithmeticMode.FLOAT:
            return bool(np.all(np.imag(values) == 0))
        return all(v.imag == 0 for v in values.ravel())

    def to_float_array(self, values: np.ndarray) -> np.ndarray:
        if self is ArithmeticMode.FLOAT:
            return values
        return np.array([complex(v) for v in values.ravel()]).reshape(values.shape)


_EXACT_ZERO = GaussianRational(0)
_EXACT_ONE = GaussianRational(1)
_EXACT_I = GaussianRational(0, 1)


def _parse_part(value: Any, path: str) -> Union[Fraction, float]:
    if isinstance(value, bool):
        raise DeserializeException(f"{path}: booleans are not numbers.")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise DeserializeException(
                f"{path}: '{value}' is not a rational literal."
            ) from e
    raise DeserializeException(f"{path}: expected a number, got {value!r}.")


def parse_scalar(value: Any, path: str = "value") -> ScalarLiteral:
    """Read a scalar literal from its JSON primitive.

    Integers and ``"p/q"`` strings are exact. JSON floats are inexact. A two-element
    array is ``[re, im]``; it is exact only when both parts are.

    Args:
        value: The JSON primitive.
        path (str): Location used in error messages.

    Returns:
        ScalarLiteral: A :class:`GaussianRational` for exact literals, ``complex`` otherwise.

    Raises:
        DeserializeException: When the primitive is not a scalar literal.

    Examples:
        >>> parse_scalar("1/3")
        GaussianRational('1/3', '0')
        >>> parse_scalar([0.5, 2])
        (0.5+2j)
    """
    if isinstance(value, (GaussianRational, complex)):
        return value
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise DeserializeException(
                f"{path}: complex literals are [re, im], got {value!r}."
            )
        re = _parse_part(value[0], f"{path}[0]")
        im = _parse_part(value[1], f"{path}[1]")
        if isinstance(re, Fraction) and isinstance(im, Fraction):
            return GaussianRational._make(re, im)
        return complex(float(re), float(im))
    part = _parse_part(value, path)
    if isinstance(part, Fraction):
        return GaussianRational._make(part, Fraction(0))
    return complex(part)


def scalar_to_primitive(value: Any) -> Any:
    """Write a scalar as its JSON primitive, the inverse of :func:`parse_scalar`.

    Examples:
        >>> scalar_to_primitive(GaussianRational("1/2", 3))
        ['1/2', '3']
        >>> scalar_to_primitive(2.5 + 0j)
        2.5
    """
    if isinstance(value, GaussianRational):
        if value.is_real:
            return str(value.real)
        return [str(value.real), str(value.imag)]
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, numbers.Integral) and not isinstance(value, bool):
        return str(int(value))
    c = complex(value)
    if c.imag == 0:
        return c.real
    return [c.real, c.imag]


def scalar_parts(value: Any) -> Tuple[Union[Fraction, float], Union[Fraction, float]]:
    """Real and imaginary parts, exact when the scalar is exact."""
    if isinstance(value, GaussianRational):
        return value.real, value.imag
    if isinstance(value, Fraction):
        return value, Fraction(0)
    c = complex(value)
    return c.real, c.imag


def format_real(value: Union[Fraction, float]) -> str:
    """Render a real part at full precision: 17 significant digits or an exact fraction."""
    if isinstance(value, Fraction):
        return str(value)
    return format(float(value), ".17g")
