"""JSON encoding for problem files, certificates and other records of the solver."""

from __future__ import annotations

import json
import os
import typing
from dataclasses import Field, fields
from enum import Enum
from functools import wraps
from inspect import isclass
from typing import Any, Type, TypeVar, Union, get_type_hints

from frozendict import frozendict
from pprintpp import pformat

from pyspps.exception import (
    DeserializeException,
    ProblemFileException,
    SerializeException,
    SppsException,
)
from pyspps.scalar import GaussianRational, scalar_to_primitive
from pyspps.types import check_type, typechecked

__all__ = [
    "Primitive",
    "JsonSerializable",
    "MapJsonSerializable",
    "limit_primitive_type",
]

Primitive = Union[str, int, float, bool, None, list, dict]
"""Values the json module reads and writes."""

PRIMITIVE_TYPES = (str, int, float, bool)


def limit_primitive_type(*accepted):
    """Reject primitives of the wrong JSON type before ``from_primitive`` sees them.

    Internal helper.
    """

    def decorator(restore):
        @wraps(restore)
        def guarded(cls, primitive: Primitive):
            if isinstance(primitive, accepted):
                return restore(cls, primitive)
            names = " or ".join(t.__name__ for t in accepted)
            raise DeserializeException(
                f"Expected {names} for {cls.__name__}, "
                f"got {type(primitive).__name__}: {primitive!r}"
            )

        return guarded

    return decorator


JsonBase = TypeVar("JsonBase", bound="JsonSerializable")


def _to_json_value(obj: Any) -> Any:
    if isinstance(obj, JsonSerializable):
        return _to_json_value(obj.to_primitive())
    if isinstance(obj, (dict, frozendict)):
        return {str(k): _to_json_value(item) for k, item in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_json_value(item) for item in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (GaussianRational, complex)):
        return scalar_to_primitive(obj)
    if obj is None or isinstance(obj, PRIMITIVE_TYPES):
        return obj
    raise SerializeException(f"Value {obj!r} of type {type(obj)} has no JSON form.")


@typechecked
class JsonSerializable:
    """Base for objects stored as JSON documents.

    Subclasses provide :meth:`to_shallow_primitive` and :meth:`from_primitive`. The shallow form may hold
    nested :class:`JsonSerializable` objects, enums and scalars; :meth:`to_primitive` flattens it. Scalars
    are written with :func:`pyspps.scalar.scalar_to_primitive`.
    """

    def to_shallow_primitive(self) -> Any:
        """One level of the JSON form. Containers may still hold serializable objects or scalars.

        Raises:
            SerializeException: When part of the object has no JSON form.
        """
        raise NotImplementedError(
            f"{type(self).__name__} does not define to_shallow_primitive()."
        )

    def to_primitive(self) -> Any:
        """The complete JSON form of the object."""
        return _to_json_value(self.to_shallow_primitive())

    def validate(self):
        """Check every annotated attribute against its annotation.

        Raises:
            TypeError: When an attribute holds a value of the wrong type.
        """
        hints = get_type_hints(type(self))
        for name, hint in hints.items():
            if getattr(hint, "__origin__", None) is typing.ClassVar:
                continue
            check_type(name, getattr(self, name), hint)

    def to_validated_primitive(self) -> Any:
        """:meth:`to_primitive` after :meth:`validate`."""
        self.validate()
        return self.to_primitive()

    @classmethod
    def from_primitive(cls: Type[JsonBase], value: Any) -> JsonBase:
        """Rebuild an instance from its JSON form.

        Raises:
            DeserializeException: When ``value`` does not describe an instance.
        """
        raise NotImplementedError(f"{cls.__name__} does not define from_primitive().")

    def to_json(self, indent: Union[int, None] = None) -> str:
        """Encode the object as a JSON document."""
        return json.dumps(self.to_validated_primitive(), indent=indent)

    @classmethod
    def from_json(cls: Type[JsonBase], data: str) -> JsonBase:
        """Decode an instance from a JSON document.

        Raises:
            DeserializeException: When the document is not valid JSON or does not describe the class.
        """
        try:
            document = json.loads(data)
        except json.JSONDecodeError as e:
            raise DeserializeException(
                f"Invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
            ) from e
        return cls.from_primitive(document)

    def save(self, path: str, overwrite: bool = False):
        """Write the object to ``path`` as indented JSON.

        Raises:
            IOError: When ``path`` is a non-empty file and ``overwrite`` is False.
        """
        if not overwrite and os.path.isfile(path) and os.stat(path).st_size > 0:
            raise IOError(f"File {path} already exists!")
        with open(path, "w") as out:
            out.write(self.to_json(indent=2))

    @classmethod
    def load(cls: Type[JsonBase], path: str) -> JsonBase:
        """Read an object written by :meth:`save`."""
        with open(path) as src:
            return cls.from_json(src.read())

    def __repr__(self):
        return pformat(vars(self), indent=2)


def _decode_field(f: Field, raw: Primitive) -> Any:
    hook = f.metadata.get("object_hook")
    if hook is not None:
        return hook(raw)
    return _decode_as(f.type, raw)


def _decode_union(hint: Any, raw: Primitive) -> Any:
    members = hint.__args__
    if raw is None and type(None) in members:
        return None
    candidates = [m for m in members if m is not type(None)]
    if len(candidates) == 1:
        return _decode_as(candidates[0], raw)
    for member in candidates:
        try:
            return _decode_as(member, raw)
        except DeserializeException:
            continue
    raise DeserializeException(f"{raw!r} matches none of {members}.")


def _decode_as(hint: Any, raw: Primitive) -> Any:
    """Decode ``raw`` following the type annotation ``hint``."""
    if hint is Any:
        return raw
    if hint is float and isinstance(raw, int) and not isinstance(raw, bool):
        return float(raw)
    if hint in PRIMITIVE_TYPES and isinstance(raw, hint):
        return raw
    if isclass(hint):
        if issubclass(hint, JsonSerializable):
            return hint.from_primitive(raw)
        if issubclass(hint, Enum):
            try:
                return hint(raw)
            except ValueError as e:
                choices = [m.value for m in hint]
                raise DeserializeException(f"{raw!r} is not one of {choices}.") from e
    origin = getattr(hint, "__origin__", None)
    if origin in (list, tuple):
        if not isinstance(raw, list):
            raise DeserializeException(
                f"Expected a list but got {type(raw).__name__}."
            )
        decoded = [_decode_as(hint.__args__[0], item) for item in raw]
        return decoded if origin is list else tuple(decoded)
    if origin is Union:
        return _decode_union(hint, raw)
    raise DeserializeException(f"Cannot deserialize {raw!r} to type {hint}.")


MapBase = TypeVar("MapBase", bound="MapJsonSerializable")


class MapJsonSerializable(JsonSerializable):
    """A `dataclass <https://docs.python.org/3/library/dataclasses.html>`_ stored as a JSON object.

    Field metadata controls the mapping: ``key`` renames the JSON key, ``optional`` omits the key when the
    value is None, and ``object_hook`` decodes the field from its primitive. Unknown keys are rejected and
    every error names the dotted path of the field that caused it.

    Examples:

        >>> from dataclasses import dataclass, field
        >>> @dataclass(frozen=True)
        ... class Side(MapJsonSerializable):
        ...     site: int
        ...     weight: float = field(default=None, metadata={"optional": True})
        >>> @dataclass(frozen=True)
        ... class Pair(MapJsonSerializable):
        ...     left: Side
        ...     right: Side = field(metadata={"key": "other"})
        >>> p = Pair(Side(0), Side(4, 0.5))
        >>> p.to_primitive()
        {'left': {'site': 0}, 'other': {'site': 4, 'weight': 0.5}}
        >>> Pair.from_primitive(p.to_primitive()) == p # doctest: +SKIP
        True
    """

    def to_shallow_primitive(self) -> Any:
        obj = {}
        for f in fields(self):
            key = f.metadata.get("key", f.name)
            if key in obj:
                raise SerializeException(f"Key: '{key}' already exists in the map.")
            current = getattr(self, f.name)
            if current is None and f.metadata.get("optional"):
                continue
            obj[key] = current
        return obj

    @classmethod
    @limit_primitive_type(dict)
    def from_primitive(cls: Type[MapBase], values: dict) -> MapBase:
        """Build an instance from a JSON object.

        Raises:
            :class:`pyspps.exception.ProblemFileException`: When a field cannot be decoded, with the path
                of the offending field.
        """
        by_key = {f.metadata.get("key", f.name): f for f in fields(cls) if f.init}
        hints = get_type_hints(cls)

        kwargs = {}
        for key, raw in values.items():
            f = by_key.get(key)
            if f is None:
                raise ProblemFileException(f"Unexpected key '{key}'.", str(key))
            try:
                if not isclass(f.type):
                    f.type = hints[f.name]
                kwargs[f.name] = _decode_field(f, raw)
            except ProblemFileException as e:
                raise ProblemFileException(
                    e.reason, f"{key}.{e.path}" if e.path else key
                ) from e
            except (SppsException, ValueError, TypeError) as e:
                raise ProblemFileException(str(e), key) from e
        try:
            return cls(**kwargs)
        except ProblemFileException:
            raise
        except (SppsException, ValueError) as e:
            raise ProblemFileException(str(e)) from e
        except TypeError as e:
            raise ProblemFileException(f"Incomplete {cls.__name__}: {e}") from e
