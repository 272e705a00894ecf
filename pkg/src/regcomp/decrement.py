"""Decrement matrices ``q(n:m)``, the law of the first part of ``C_n``.

Besides the constructors this module holds the reparametrisations of a
regenerative structure by its structural moments ``p(n) = q(n:n)``, by its
singleton probabilities ``e(n) = q(2:1) ... q(n:1)`` and by the first column
``q(n:1)``, plus the reversibility test.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .phi_model import (
    UNIT,
    DiscreteMeasure,
    LevyFamily,
    NotCompletelyAlternating,
    PhiTable,
    TwoParam,
    build_phi_table,
    phi_from_sequence,
)
from .scalar import EXACT, Scalar, backend_of, binom, check_backend, fmt, is_close, lift, rising

FLOAT_SYMMETRY_TOL = 1e-9
FLOAT_RECURSION_TOL = 1e-12


@dataclass(frozen=True)
class DecrementMatrix:
    """Lower-triangular row-stochastic matrix; ``q[n, m]`` is ``q(n:m)``."""

    rows: tuple
    backend: str = EXACT

    def __post_init__(self):
        check_backend(self.backend)
        if not self.rows:
            raise ValueError("empty decrement matrix")
        for n, row in enumerate(self.rows, start=1):
            if len(row) != n:
                raise ValueError(f"row {n} has length {len(row)}, expected {n}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "DecrementMatrix":
        """Build from nested sequences, inferring the backend."""
        flat = [v for row in rows for v in row]
        backend = backend_of(flat) if not any(isinstance(v, str) for v in flat) else EXACT
        return cls(tuple(tuple(lift(v, backend) for v in row) for row in rows), backend)

    @property
    def n_max(self) -> int:
        return len(self.rows)

    def __getitem__(self, key) -> Scalar:
        n, m = key
        return self.rows[n - 1][m - 1]

    def row(self, n: int) -> tuple:
        return self.rows[n - 1]

    def truncated(self, n_max: int) -> "DecrementMatrix":
        return DecrementMatrix(self.rows[:n_max], self.backend)

    def stochastic_defects(self, tol: float = 0.0):
        """Yield ``(n, problem)`` for rows that are not probability vectors."""
        for n, row in enumerate(self.rows, start=1):
            if any(v < -tol for v in row):
                yield n, "negative entry"
            if abs(sum(row) - 1) > tol:
                yield n, f"row sums to {sum(row)}"

    @cached_property
    def float_rows(self) -> tuple:
        return tuple(tuple(float(v) for v in row) for row in self.rows)

    @cached_property
    def cumulative_rows(self) -> tuple:
        """Per-row cumulative sums in doubles, renormalised to end at 1."""
        out = []
        for row in self.float_rows:
            total = sum(row)
            acc, cum = 0.0, []
            for v in row:
                acc += v / total
                cum.append(acc)
            cum[-1] = 1.0
            out.append(tuple(cum))
        return tuple(out)


# --------------------------------------------------------------------------
# constructors


def decrement_from_phi(table: PhiTable) -> DecrementMatrix:
    """``q(n:m) = Phi(n:m) / Phi(n)``."""
    rows = tuple(
        tuple(v / table.phi(n) for v in table.binom_rows[n - 1]) for n in range(1, table.n_max + 1)
    )
    return DecrementMatrix(rows, table.backend)


def degenerate_decrement(kind: str, n_max: int, backend: str = EXACT) -> DecrementMatrix:
    one, nil = lift(1, backend), lift(0, backend)
    if kind == "singletons":
        rows = tuple(tuple(one if m == 1 else nil for m in range(1, n + 1)) for n in range(1, n_max + 1))
    elif kind == "one_part":
        rows = tuple(tuple(one if m == n else nil for m in range(1, n + 1)) for n in range(1, n_max + 1))
    else:
        raise ValueError(f"unknown degenerate kind {kind!r}")
    return DecrementMatrix(rows, backend)


def two_param_decrement(alpha, theta, n_max: int, backend: str = EXACT) -> DecrementMatrix:
    """Decrement matrix of the ``(alpha, theta)`` regenerative structure.

    ``q(n:m) = C(n,m) [1-alpha]_(m-1) / [theta+n-m]_m * ((n-m) alpha + m theta) / n``
    for ``m < n``; the diagonal is ``[1-alpha]_(n-1) / [1+theta]_(n-1)``.
    """
    TwoParam(alpha, theta)  # range check
    a, t = lift(alpha, backend), lift(theta, backend)
    rows = []
    for n in range(1, n_max + 1):
        row = [
            binom(n, m) * rising(1 - a, m - 1) / rising(t + n - m, m) * ((n - m) * a + m * t) / n
            for m in range(1, n)
        ]
        row.append(rising(1 - a, n - 1) / rising(1 + t, n - 1))
        rows.append(tuple(row))
    return DecrementMatrix(tuple(rows), backend)


def _probability_atoms(atoms, backend):
    atoms = [(lift(x, backend), lift(w, backend)) for x, w in atoms]
    if not atoms:
        raise ValueError("X law needs at least one atom")
    for x, w in atoms:
        if not 0 < x <= 1:
            raise ValueError(f"atom location {x} outside (0, 1]")
        if w <= 0:
            raise ValueError(f"atom weight {w} must be positive")
    total = sum(w for _, w in atoms)
    if not is_close(total, lift(1, backend), 1e-12):
        raise ValueError(f"atom weights sum to {total}, not 1")
    return atoms


def stick_breaking_decrement(x_law, n_max: int, backend: str = EXACT) -> DecrementMatrix:
    """``q(n:m) = C(n,m) E[X^m (1-X)^(n-m)] / E[1 - (1-X)^n]`` for atomic ``X``.

    ``x_law`` is a sequence of ``(x, probability)`` pairs or a
    :class:`DiscreteMeasure` with zero drift.
    """
    if isinstance(x_law, DiscreteMeasure):
        if x_law.drift != 0:
            raise ValueError("stick-breaking law cannot carry drift")
        x_law = x_law.atoms
    atoms = _probability_atoms(x_law, backend)
    rows = []
    for n in range(1, n_max + 1):
        denom = sum(w * (1 - (1 - x) ** n) for x, w in atoms)
        rows.append(
            tuple(binom(n, m) * sum(w * x**m * (1 - x) ** (n - m) for x, w in atoms) / denom for m in range(1, n + 1))
        )
    return DecrementMatrix(tuple(rows), backend)


def decrement_from_family(spec: LevyFamily, n_max: int, backend: str = EXACT) -> DecrementMatrix:
    if isinstance(spec, TwoParam):
        return two_param_decrement(spec.alpha, spec.theta, n_max, backend)
    return decrement_from_phi(build_phi_table(spec, n_max, backend))


# --------------------------------------------------------------------------
# consistency


@dataclass(frozen=True)
class RecursionReport:
    ok: bool
    n: int | None = None
    m: int | None = None
    residual: Scalar | None = None

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "n": self.n,
            "m": self.m,
            "residual": None if self.residual is None else fmt(self.residual),
        }


def verify_decrement_recursion(q: DecrementMatrix, tol: float | None = None) -> RecursionReport:
    """Check ``q(1:1) = 1`` and, for ``1 <= m <= n < n_max``,

    ``q(n:m) = (m+1)/(n+1) q(n+1:m+1) + (n+1-m)/(n+1) q(n+1:m) + 1/(n+1) q(n+1:1) q(n:m)``.

    Exact comparison on the exact backend; otherwise absolute ``tol``
    (default ``1e-12``).  Reports the first failing ``(n, m)``.
    """
    if tol is None:
        tol = 0.0 if q.backend == EXACT else FLOAT_RECURSION_TOL
    if not is_close(q[1, 1], lift(1, q.backend), tol):
        return RecursionReport(False, 1, 1, q[1, 1] - 1)
    for n in range(1, q.n_max):
        for m in range(1, n + 1):
            rhs = (
                Fraction(m + 1, n + 1) * q[n + 1, m + 1]
                + Fraction(n + 1 - m, n + 1) * q[n + 1, m]
                + Fraction(1, n + 1) * q[n + 1, 1] * q[n, m]
            )
            if not is_close(q[n, m], rhs, tol):
                return RecursionReport(False, n, m, q[n, m] - rhs)
    return RecursionReport(True)


# --------------------------------------------------------------------------
# structural moments p(n) = q(n:n)


def structural_moments(q: DecrementMatrix) -> tuple:
    return tuple(q[n, n] for n in range(1, q.n_max + 1))


def _degenerate_table(kind: str, n_max: int, backend: str) -> PhiTable:
    one_part = DiscreteMeasure(atoms=((Fraction(1), Fraction(1)),))
    spec = DiscreteMeasure(drift=Fraction(1)) if kind == "singletons" else one_part
    return build_phi_table(spec, n_max, backend, UNIT)


def phi_from_structural_moments(p: Sequence) -> PhiTable:
    """Recover the unit-normalised table from ``p(1) = 1, p(2), ...``.

    Solves ``Phi(n) (p(n) + (-1)^n) = sum_(j<n) (-1)^(j+1) C(n,j) Phi(j)``
    with ``Phi(1) = 1`` and certifies complete alternation of the result.
    ``p(2) = 0`` and ``p(2) = 1`` are the pure-singleton and one-part
    structures; they are returned directly since the general route divides
    by quantities vanishing there.
    """
    backend = backend_of(p)
    p = [lift(v, backend) for v in p]
    n_max = len(p)
    if n_max < 1 or p[0] != 1:
        raise ValueError("structural moments must start with p(1) = 1")
    if n_max >= 2 and p[1] in (0, 1):
        kind = "singletons" if p[1] == 0 else "one_part"
        if any(v != p[1] for v in p[2:]):
            raise ValueError(f"p(2) = {p[1]} forces p(n) = {p[1]} for all n > 1")
        return _degenerate_table(kind, n_max, backend)
    for n, v in enumerate(p[1:], start=2):
        if not 0 < v < 1:
            raise ValueError(f"p({n}) = {v} must lie strictly between 0 and 1")
    phi = [p[0] * 0, p[0] * 0 + 1]
    for n in range(2, n_max + 1):
        rhs = sum(((-1) ** (j + 1) * binom(n, j) * phi[j] for j in range(1, n)), p[0] * 0)
        value = rhs / (p[n - 1] + (-1) ** n)
        if value <= 0:
            # Phi(n) <= 0 makes Phi(n:1) = n (Phi(n) - Phi(n-1)) negative
            raise NotCompletelyAlternating(n, 1, n * (value - phi[n - 1]))
        phi.append(value)
    return phi_from_sequence(phi[1:], normalization=UNIT)


# --------------------------------------------------------------------------
# singleton probabilities e(n) = q(2:1) ... q(n:1)


def singleton_probs_from_q(q: DecrementMatrix) -> tuple:
    """``e(n)``, the chance that ``C_n`` is ``(1, 1, ..., 1)``."""
    out, acc = [], lift(1, q.backend)
    for n in range(1, q.n_max + 1):
        if n > 1:
            acc = acc * q[n, 1]
        out.append(acc)
    return tuple(out)


def phi_from_singleton_probs(e: Sequence) -> PhiTable:
    """Invert ``Phi(1)/Phi(n) = prod_(j=2..n) (1 - e(j) / (j e(j-1)))``."""
    backend = backend_of(e)
    e = [lift(v, backend) for v in e]
    n_max = len(e)
    if n_max < 1 or e[0] != 1:
        raise ValueError("singleton probabilities must start with e(1) = 1")
    if n_max >= 2 and e[1] in (0, 1):
        kind = "singletons" if e[1] == 1 else "one_part"
        if any(v != e[1] for v in e[2:]):
            raise ValueError(f"e(2) = {e[1]} forces e(n) = {e[1]} for all n > 1")
        return _degenerate_table(kind, n_max, backend)
    phi, ratio = [e[0]], e[0]
    for j in range(2, n_max + 1):
        if not 0 < e[j - 1] <= e[j - 2]:
            raise ValueError(f"e({j}) = {e[j - 1]} must satisfy 0 < e(j) <= e(j-1)")
        factor = 1 - e[j - 1] / (j * e[j - 2])
        if factor <= 0:
            raise ValueError(f"factor at j={j} is {factor}; Phi({j}) would not be positive")
        ratio = ratio * factor
        phi.append(1 / ratio)
    return phi_from_sequence(phi, normalization=UNIT)


def decrement_from_first_column(q1: Sequence) -> DecrementMatrix:
    """Rebuild ``q`` from ``q(n:1)`` alone via the polynomial formula

    ``q(n:m) = C(n,m) sum_j (-1)^(m-j+1) C(m,j) prod_(k<j) (1 - q(n-k:1)/(n-k))``.
    """
    backend = backend_of(q1)
    q1 = [lift(v, backend) for v in q1]
    n_max = len(q1)
    rows = []
    for n in range(1, n_max + 1):
        # prods[j] = prod_(k<j) (1 - q(n-k:1)/(n-k)) = Phi(n-j)/Phi(n)
        prods = [q1[0] * 0 + 1]
        for k in range(n):
            prods.append(prods[-1] * (1 - q1[n - k - 1] / (n - k)))
        row = []
        for m in range(1, n + 1):
            s = q1[0] * 0
            for j in range(m + 1):
                term = binom(m, j) * prods[j]
                s = s + term if (m - j + 1) % 2 == 0 else s - term
            row.append(binom(n, m) * s)
        rows.append(tuple(row))
    return DecrementMatrix(tuple(rows), backend)


# --------------------------------------------------------------------------
# first and last singleton parts, reversibility


def first_part_one_probability(table: PhiTable, n: int) -> Scalar:
    """``P(F_n = 1) = n (Phi(n) - Phi(n-1)) / Phi(n)``."""
    return n * (table.phi(n) - table.phi(n - 1)) / table.phi(n)


def last_part_one_probability(table: PhiTable, n: int) -> Scalar:
    """``P(L_n = 1) = n [1 - sum_(k=2..n) C(n-1,k-1) (-1)^k / Phi(k)]`` with ``Phi(1) = 1``."""
    if table.normalization != UNIT:
        table = table.normalized()
    s = table.phi(1) * 0
    for k in range(2, n + 1):
        term = binom(n - 1, k - 1) / table.phi(k)
        s = s + term if k % 2 == 0 else s - term
    return n * (1 - s)


@dataclass(frozen=True)
class Asymmetric:
    """First index ``n`` where ``P(F_n = 1) != P(L_n = 1)``."""

    n: int
    first_part_one: Scalar
    last_part_one: Scalar

    def as_dict(self) -> dict:
        return {
            "verdict": "Asymmetric",
            "n": self.n,
            "P(F_n=1)": fmt(self.first_part_one),
            "P(L_n=1)": fmt(self.last_part_one),
        }


@dataclass(frozen=True)
class SymmetricAlphaAlpha:
    """The table matches the reversible ``(alpha, alpha)`` structure up to ``n_max``.

    ``alpha = 1`` is the pure-singleton boundary, ``alpha = 0`` the one-part one.
    """

    alpha: Scalar

    def as_dict(self) -> dict:
        return {"verdict": "SymmetricAlphaAlpha", "alpha": fmt(self.alpha)}


@dataclass(frozen=True)
class Inconsistent:
    """First- and last-part singleton laws agree but ``Phi`` is not ``Phi_alpha``.

    Only reachable through rounding on the float backend.
    """

    n: int
    alpha: Scalar

    def as_dict(self) -> dict:
        return {"verdict": "Inconsistent", "n": self.n, "alpha": fmt(self.alpha)}


def detect_symmetry(table: PhiTable, tol: float | None = None):
    """Decide reversibility from ``P(F_n = 1)`` versus ``P(L_n = 1)``, ``3 <= n <= n_max``."""
    if table.n_max < 3:
        raise ValueError("symmetry detection needs n_max >= 3")
    if tol is None:
        tol = 0.0 if table.backend == EXACT else FLOAT_SYMMETRY_TOL
    if table.normalization != UNIT:
        table = table.normalized()
    for n in range(3, table.n_max + 1):
        first = first_part_one_probability(table, n)
        last = last_part_one_probability(table, n)
        if not is_close(first, last, tol):
            return Asymmetric(n, first, last)
    alpha = table.phi(2) - 1
    for n in range(1, table.n_max + 1):
        target = rising(1 + alpha, n - 1) / rising(alpha * 0 + 1, n - 1)
        if not is_close(table.phi(n), target, tol):
            return Inconsistent(n, alpha)
    return SymmetricAlphaAlpha(alpha)
