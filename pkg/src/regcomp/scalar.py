"""Scalar backends.

Every table in the package lives in exactly one of two backends:

* ``"exact"`` -- :class:`fractions.Fraction` values, arbitrary precision.
* ``"float"`` -- IEEE doubles.

Parameters arrive in many shapes (ints, ``"1/2"``, ``"0.25"``,
``{"num": 1, "den": 2}``); :func:`lift` turns them into the scalar type of a
backend and refuses floats when exact arithmetic is requested.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Any, Union

EXACT = "exact"
FLOAT = "float"
BACKENDS = (EXACT, FLOAT)

Scalar = Union[Fraction, float]


class BackendError(ValueError):
    """A value cannot be represented in the requested backend."""


def check_backend(backend: str) -> str:
    if backend not in BACKENDS:
        raise BackendError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    return backend


def as_rational(value: Any) -> Fraction:
    """Parse ``value`` as an exact rational number.

    Accepts ints, Fractions, strings such as ``"3/4"`` or ``"0.75"`` and
    mappings ``{"num": 3, "den": 4}``. Python floats are rejected: their
    binary expansion is almost never the number the caller meant.
    """
    if isinstance(value, bool):
        raise BackendError(f"boolean {value!r} is not a number")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise BackendError(f"cannot parse {value!r} as a rational") from exc
    if isinstance(value, dict):
        if set(value) != {"num", "den"}:
            raise BackendError(f"rational object must have exactly 'num' and 'den', got {sorted(value)}")
        num, den = value["num"], value["den"]
        if not (isinstance(num, int) and isinstance(den, int)) or isinstance(num, bool) or isinstance(den, bool):
            raise BackendError("'num' and 'den' must be integers")
        if den == 0:
            raise BackendError("zero denominator")
        return Fraction(num, den)
    if isinstance(value, float):
        raise BackendError(f"float {value!r} cannot enter exact arithmetic; pass a Fraction or a string")
    raise BackendError(f"unsupported numeric value {value!r}")


def lift(value: Any, backend: str) -> Scalar:
    """Convert ``value`` to the scalar type of ``backend``."""
    if check_backend(backend) == EXACT:
        return as_rational(value)
    if isinstance(value, float):
        return value
    return float(as_rational(value))


def one(backend: str) -> Scalar:
    return Fraction(1) if check_backend(backend) == EXACT else 1.0


def zero(backend: str) -> Scalar:
    return Fraction(0) if check_backend(backend) == EXACT else 0.0


def backend_of(values) -> str:
    """Infer the backend of a collection of scalars, refusing mixtures."""
    kinds = set()
    for v in values:
        if isinstance(v, bool):
            raise BackendError("boolean is not a scalar")
        if isinstance(v, (Fraction, int)):
            kinds.add(EXACT)
        elif isinstance(v, float):
            kinds.add(FLOAT)
        else:
            raise BackendError(f"unsupported scalar {v!r}")
    if len(kinds) > 1:
        raise BackendError("exact and float scalars mixed in one table")
    return kinds.pop() if kinds else EXACT


def rising(x: Scalar, n: int) -> Scalar:
    """Rising factorial ``x (x+1) ... (x+n-1)``; equals 1 for ``n == 0``."""
    result = x * 0 + 1
    for i in range(n):
        result *= x + i
    return result


def binom(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


def is_close(a: Scalar, b: Scalar, tol: float) -> bool:
    """Equality on the exact backend, absolute tolerance otherwise."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(a - b) <= tol


def fmt(value: Scalar) -> str:
    """Deterministic text form: ``p/q`` for fractions, ``repr`` for floats."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return repr(float(value))
