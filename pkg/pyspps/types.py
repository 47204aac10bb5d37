"""Runtime type checks through typeguard, switched off by ``SPPS_NO_TYPE_CHECK=true``.

The variable is read at decoration time for :func:`typechecked` and at call time for
:func:`check_type`.
"""

import os
from functools import partial

import typeguard

__all__ = ["NO_TYPE_CHECK_ENV", "typechecked", "check_type", "type_check_disabled"]

NO_TYPE_CHECK_ENV = "SPPS_NO_TYPE_CHECK"


def type_check_disabled() -> bool:
    return os.getenv(NO_TYPE_CHECK_ENV, "False").lower() in ("true", "1")


def typechecked(func=None, *args, **kwargs):
    """``typeguard.typechecked``, or the undecorated function when checks are off."""
    if not type_check_disabled():
        return typeguard.typechecked(func, *args, **kwargs)
    if func is None:
        return partial(typechecked, *args, **kwargs)
    return func


def check_type(*args, **kwargs):
    if type_check_disabled():
        return None
    return typeguard.check_type(*args, **kwargs)
