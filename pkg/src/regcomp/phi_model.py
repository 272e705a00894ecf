"""Lévy data and Laplace-exponent tables.

A regenerative composition structure is parametrised by the drift ``d`` and
the Lévy measure of a subordinator, pushed to ``(0, 1]`` by
``x = 1 - exp(-z)``.  Everything downstream only needs the values of the
Laplace exponent at the integers together with the binomial moments

    Phi(n:m) = C(n, m) * integral x^m (1-x)^(n-m) nu(dx) + n d 1(m == 1),

which this module tabulates as a :class:`PhiTable`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from .scalar import (
    EXACT,
    FLOAT,
    BackendError,
    Scalar,
    as_rational,
    backend_of,
    binom,
    check_backend,
    lift,
    rising,
)

UNIT = "unit"
RAW = "raw"


class NotCompletelyAlternating(ValueError):
    """A sequence produced a negative binomial moment ``Phi(n:m)``.

    Such a sequence is not the restriction of any Laplace exponent to the
    positive integers.
    """

    def __init__(self, n: int, m: int, value):
        self.n, self.m, self.value = n, m, value
        super().__init__(f"Phi({n}:{m}) = {value} < 0: sequence is not completely alternating")


def _number(value):
    # keep floats as floats, everything else becomes an exact rational
    if isinstance(value, float):
        return value
    return as_rational(value)


# --------------------------------------------------------------------------
# Lévy families


@dataclass(frozen=True)
class DiscreteMeasure:
    """Drift plus finitely many atoms ``(x_i, w_i)`` of the measure on ``(0, 1]``.

    An atom at ``x = 1`` is a killing rate: the subordinator jumps to infinity.
    """

    drift: Scalar = Fraction(0)
    atoms: tuple = ()

    def __post_init__(self):
        drift = _number(self.drift)
        atoms = tuple((_number(x), _number(w)) for x, w in self.atoms)
        if drift < 0:
            raise ValueError(f"drift must be >= 0, got {drift}")
        for x, w in atoms:
            if not 0 < x <= 1:
                raise ValueError(f"atom location {x} outside (0, 1]")
            if w <= 0:
                raise ValueError(f"atom weight {w} must be positive")
        if drift == 0 and not atoms:
            raise ValueError("drift and measure cannot both vanish")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "atoms", atoms)


@dataclass(frozen=True)
class BetaDensity:
    """Drift plus the density ``c x^(a-1) (1-x)^(b-1)`` on ``(0, 1)``."""

    drift: Scalar = Fraction(0)
    scale: Scalar = Fraction(1)
    a: Scalar = Fraction(1)
    b: Scalar = Fraction(1)

    def __post_init__(self):
        for name in ("drift", "scale", "a", "b"):
            object.__setattr__(self, name, _number(getattr(self, name)))
        if self.drift < 0:
            raise ValueError(f"drift must be >= 0, got {self.drift}")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"beta exponents must be positive, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class TwoParam:
    """The ``(alpha, theta)`` family, ``0 <= alpha < 1`` and ``theta >= 0``."""

    alpha: Scalar
    theta: Scalar

    def __post_init__(self):
        alpha, theta = _number(self.alpha), _number(self.theta)
        if not 0 <= alpha < 1:
            raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
        if theta < 0:
            raise ValueError(f"theta must be >= 0, got {theta}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class Degenerate:
    """``singletons``: every part equals 1.  ``one_part``: ``C_n = (n)``."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("singletons", "one_part"):
            raise ValueError(f"unknown degenerate kind {self.kind!r}")

    def as_measure(self) -> DiscreteMeasure:
        if self.kind == "singletons":
            return DiscreteMeasure(drift=Fraction(1))
        return DiscreteMeasure(atoms=((Fraction(1), Fraction(1)),))


LevyFamily = Union[DiscreteMeasure, BetaDensity, TwoParam, Degenerate]


def ewens(theta) -> TwoParam:
    """Ordered Ewens structure: stick-breaking with beta(1, theta) cuts."""
    return TwoParam(Fraction(0), theta)


def geometric(x) -> DiscreteMeasure:
    """Geometric sampling with tail probability ``x``: a single atom."""
    return DiscreteMeasure(atoms=((x, Fraction(1)),))


def myriads(x, drift) -> DiscreteMeasure:
    """Stick-breaking at a fixed fraction ``x`` interlaced with drift."""
    return DiscreteMeasure(drift=drift, atoms=((x, Fraction(1)),))


PRESETS = {
    "ewens_theta1": TwoParam(Fraction(0), Fraction(1)),
    "two_param_half_half": TwoParam(Fraction(1, 2), Fraction(1, 2)),
    "two_param_half_zero": TwoParam(Fraction(1, 2), Fraction(0)),
    "geometric_half": geometric(Fraction(1, 2)),
    "drift_only": DiscreteMeasure(drift=Fraction(1)),
    "myriads_half": myriads(Fraction(1, 2), Fraction(1)),
}


# --------------------------------------------------------------------------
# Phi tables


@dataclass(frozen=True)
class PhiTable:
    """``Phi(1..n_max)`` and the triangle of binomial moments ``Phi(n:m)``.

    ``binom_rows[n-1][m-1]`` holds ``Phi(n:m)``.  ``Phi(0) = 0`` is implied.
    """

    phi_values: tuple
    binom_rows: tuple
    backend: str = EXACT
    normalization: str = RAW

    def __post_init__(self):
        check_backend(self.backend)
        if self.normalization not in (UNIT, RAW):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if len(self.phi_values) != len(self.binom_rows) or not self.phi_values:
            raise ValueError("phi values and binomial rows must have the same positive length")
        for n, row in enumerate(self.binom_rows, start=1):
            if len(row) != n:
                raise ValueError(f"row {n} has length {len(row)}")
        if any(v <= 0 for v in self.phi_values):
            raise ValueError("Phi(n) must be positive")

    @property
    def n_max(self) -> int:
        return len(self.phi_values)

    def phi(self, n: int) -> Scalar:
        if n == 0:
            return self.phi_values[0] * 0
        return self.phi_values[n - 1]

    def binom(self, n: int, m: int) -> Scalar:
        return self.binom_rows[n - 1][m - 1]

    def normalized(self) -> "PhiTable":
        """Rescale so that ``Phi(1) = 1``."""
        c = self.phi_values[0]
        return PhiTable(
            tuple(v / c for v in self.phi_values),
            tuple(tuple(v / c for v in row) for row in self.binom_rows),
            self.backend,
            UNIT,
        )

    def truncated(self, n_max: int) -> "PhiTable":
        return PhiTable(self.phi_values[:n_max], self.binom_rows[:n_max], self.backend, self.normalization)

    def identity_residuals(self):
        """Yield ``(name, n, m, residual)`` for the row-sum and Pascal identities."""
        for n in range(1, self.n_max + 1):
            yield "row_sum", n, None, self.phi(n) - sum(self.binom_rows[n - 1])
        for n in range(1, self.n_max):
            for m in range(1, n + 1):
                rhs = Fraction(m + 1, n + 1) * self.binom(n + 1, m + 1) + Fraction(n - m + 1, n + 1) * self.binom(n + 1, m)
                yield "pascal", n, m, self.binom(n, m) - rhs


def alternating_binomial_moment(phi: Sequence, n: int, m: int):
    """``Phi(n:m) = C(n,m) sum_j (-1)^(j+1) C(m,j) Phi(n-m+j)``.

    ``phi`` is indexed from 0 with ``phi[0] == 0``.
    """
    total = phi[0] * 0
    for j in range(m + 1):
        term = binom(m, j) * phi[n - m + j]
        total = total + term if j % 2 else total - term
    return binom(n, m) * total


def _float_clamp(value: float, scale: float) -> float:
    # roundoff in alternating sums; genuinely negative entries still fail
    if -1e-12 * max(scale, 1.0) <= value < 0:
        return 0.0
    return value


def _triangle_from_sequence(phi_values: Sequence, backend: str):
    phi = [phi_values[0] * 0, *phi_values]
    rows = []
    for n in range(1, len(phi_values) + 1):
        row = []
        for m in range(1, n + 1):
            value = alternating_binomial_moment(phi, n, m)
            if backend == FLOAT:
                value = _float_clamp(value, phi[n])
            if value < 0:
                raise NotCompletelyAlternating(n, m, value)
            row.append(value)
        rows.append(tuple(row))
    return tuple(rows)


def phi_from_sequence(phi_values: Sequence, n_max: int | None = None, normalization: str = RAW) -> PhiTable:
    """Build a table from ``Phi(1), Phi(2), ...`` and certify complete alternation.

    Raises :class:`NotCompletelyAlternating` at the first negative
    ``Phi(n:m)`` (row by row, then column by column).
    """
    values = list(phi_values)
    if n_max is None:
        n_max = len(values)
    if n_max < 1 or len(values) < n_max:
        raise ValueError(f"need at least n_max={n_max} values, got {len(values)}")
    backend = backend_of(values[:n_max])
    values = [lift(v, backend) for v in values[:n_max]]
    if any(v <= 0 for v in values):
        raise ValueError("Phi(n) must be positive")
    rows = _triangle_from_sequence(values, backend)
    table = PhiTable(tuple(values), rows, backend, RAW)
    if normalization == UNIT:
        table = table.normalized()
    return table


def _lower_family(spec: LevyFamily, backend: str) -> LevyFamily:
    """Validate the scalar types of ``spec`` against ``backend``."""
    if isinstance(spec, Degenerate):
        return spec.as_measure()
    if backend == EXACT:
        params = []
        if isinstance(spec, DiscreteMeasure):
            params = [spec.drift, *(v for atom in spec.atoms for v in atom)]
        elif isinstance(spec, BetaDensity):
            params = [spec.drift, spec.scale, spec.a, spec.b]
            if any(isinstance(v, Fraction) and v.denominator != 1 for v in (spec.a, spec.b)):
                raise BackendError("exact beta moments need integer exponents a, b; use the float backend")
        elif isinstance(spec, TwoParam):
            params = [spec.alpha, spec.theta]
        if any(isinstance(v, float) for v in params):
            raise BackendError(f"{type(spec).__name__} has float parameters; exact backend needs rationals")
    return spec


def _beta_function(p, q, backend):
    if backend == EXACT:
        p, q = int(p), int(q)
        return Fraction(math.factorial(p - 1) * math.factorial(q - 1), math.factorial(p + q - 1))
    return math.exp(math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q))


def _rows_from_measure(spec, n_max: int, backend: str):
    drift = lift(spec.drift, backend)
    if isinstance(spec, DiscreteMeasure):
        atoms = [(lift(x, backend), lift(w, backend)) for x, w in spec.atoms]

        def integral(n, m):
            return sum((w * x**m * (1 - x) ** (n - m) for x, w in atoms), drift * 0)

    else:
        c, a, b = (lift(v, backend) for v in (spec.scale, spec.a, spec.b))

        def integral(n, m):
            return c * _beta_function(m + a, n - m + b, backend)

    rows = []
    for n in range(1, n_max + 1):
        row = [binom(n, m) * integral(n, m) for m in range(1, n + 1)]
        row[0] += n * drift
        rows.append(tuple(row))
    return tuple(rows)


def two_param_phi(alpha, theta, n: int, backend: str = EXACT):
    """``Phi(n)/Phi(1) = n [theta+1]_(n-1) / [2+theta-alpha]_(n-1)``."""
    alpha, theta = lift(alpha, backend), lift(theta, backend)
    return n * rising(theta + 1, n - 1) / rising(2 + theta - alpha, n - 1)


def two_param_binomial_moment(alpha, theta, n: int, m: int, backend: str = EXACT):
    """Closed form of ``Phi(n:m)/Phi(1)`` for the ``(alpha, theta)`` family."""
    alpha, theta = lift(alpha, backend), lift(theta, backend)
    head = binom(n, m) * rising(1 - alpha, m - 1) / rising(2 + theta - alpha, n - 1)
    if m == n:
        # [theta]_n = theta [theta+1]_(n-1) cancels the factor n*theta
        return head * n
    return head * rising(theta + 1, n - 1) / rising(theta + n - m, m) * ((n - m) * alpha + m * theta)


def build_phi_table(spec: LevyFamily, n_max: int, backend: str = EXACT, normalization: str = UNIT) -> PhiTable:
    """Tabulate ``Phi(n)`` and ``Phi(n:m)`` for ``1 <= m <= n <= n_max``.

    The two-parameter family has no finite measure representation here; its
    table comes from the closed form of ``Phi(n)/Phi(1)``, so ``raw`` and
    ``unit`` coincide for it.
    """
    check_backend(backend)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    spec = _lower_family(spec, backend)
    if isinstance(spec, TwoParam):
        values = tuple(two_param_phi(spec.alpha, spec.theta, n, backend) for n in range(1, n_max + 1))
        if backend == EXACT:
            rows = _triangle_from_sequence(values, backend)
        else:
            # the alternating sum cancels catastrophically in doubles
            rows = tuple(
                tuple(two_param_binomial_moment(spec.alpha, spec.theta, n, m, backend) for m in range(1, n + 1))
                for n in range(1, n_max + 1)
            )
        return PhiTable(values, rows, backend, UNIT)
    if isinstance(spec, (DiscreteMeasure, BetaDensity)):
        rows = _rows_from_measure(spec, n_max, backend)
        values = tuple(sum(row) for row in rows)
        table = PhiTable(values, rows, backend, RAW)
        return table.normalized() if normalization == UNIT else table
    raise TypeError(f"not a Lévy family: {spec!r}")
