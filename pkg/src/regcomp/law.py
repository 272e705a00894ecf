"""Exact laws of regenerative compositions.

Compositions are tuples of positive integers.  The law of ``C_n`` follows
from the product formula ``p(n_1, ..., n_k) = prod_j q(N_j : n_j)`` with tail
sums ``N_j = n_j + ... + n_k``; everything else here (sampling consistency,
EPPF, Green matrix, last part, interval moments) is built on top of it.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .decrement import DecrementMatrix, last_part_one_probability
from .phi_model import PhiTable, TwoParam
from .scalar import EXACT, Scalar, binom, is_close, lift, rising

ENUMERATION_CAP = 16
EPPF_CAP = 9

__all__ = [
    "Composition",
    "CompositionLaw",
    "GreenMatrix",
    "compositions",
    "integer_partitions",
    "composition_probability",
    "enumerate_law",
    "sampling_extensions",
    "check_sampling_consistency",
    "eppf",
    "two_param_eppf",
    "ordering_factor_sum",
    "green_matrix",
    "green_matrix_formula",
    "first_part_law",
    "last_part_law",
    "last_part_one_probability",
    "tripartite_moment",
    "singleton_frequency_moment",
]


class CapExceeded(ValueError):
    """A combinatorial operation would exceed its configured size cap."""


class Composition(tuple):
    """An ordered sequence of positive integer parts."""

    def __new__(cls, parts: Iterable[int]):
        parts = tuple(parts)
        if not parts:
            raise ValueError("a composition needs at least one part")
        for part in parts:
            if isinstance(part, bool) or not isinstance(part, int) or part < 1:
                raise ValueError(f"parts must be positive integers, got {part!r}")
        return super().__new__(cls, parts)

    @classmethod
    def parse(cls, text: str) -> "Composition":
        """Read the dash-joined form, e.g. ``"3-1-2"``."""
        try:
            return cls(int(tok) for tok in text.strip().split("-"))
        except ValueError as exc:
            raise ValueError(f"bad composition {text!r}: {exc}") from None

    @property
    def total(self) -> int:
        return sum(self)

    def tail_sums(self) -> tuple:
        """``(N_1, ..., N_k)``: the path of the decrement chain before absorption."""
        out, acc = [], 0
        for part in reversed(self):
            acc += part
            out.append(acc)
        return tuple(reversed(out))

    def __str__(self) -> str:
        return "-".join(map(str, self))

    def __repr__(self) -> str:
        return f"Composition({tuple(self)!r})"


def compositions(n: int) -> Iterator[Composition]:
    """All ``2^(n-1)`` compositions of ``n`` in lexicographic order."""
    if n < 1:
        raise ValueError("n must be >= 1")

    def rec(rest):
        if rest == 0:
            yield ()
            return
        for first in range(1, rest + 1):
            for tail in rec(rest - first):
                yield (first, *tail)

    for parts in rec(n):
        yield Composition(parts)


def integer_partitions(n: int, largest: int | None = None) -> Iterator[tuple]:
    """Partitions of ``n`` as non-increasing tuples."""
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in integer_partitions(n - first, first):
            yield (first, *rest)


@dataclass(frozen=True)
class CompositionLaw:
    """Probabilities of every composition of ``n``."""

    n: int
    probabilities: Mapping

    def __getitem__(self, composition) -> Scalar:
        return self.probabilities[composition]

    def get(self, composition, default=0):
        return self.probabilities.get(composition, default)

    def items(self):
        return self.probabilities.items()

    def total_mass(self) -> Scalar:
        return sum(self.probabilities.values())

    def marginal(self, statistic) -> dict:
        """Push the law forward through ``statistic(composition)``."""
        out: dict = {}
        for comp, prob in self.probabilities.items():
            key = statistic(comp)
            out[key] = out.get(key, 0) + prob
        return out


def _check_size(q: DecrementMatrix, n: int):
    if n > q.n_max:
        raise ValueError(f"composition of {n} needs a decrement matrix of size >= {n}, have {q.n_max}")


def composition_probability(q: DecrementMatrix, composition: Sequence[int]) -> Scalar:
    """Product formula ``prod_j q(N_j : n_j)``."""
    composition = Composition(composition)
    _check_size(q, composition.total)
    prob = lift(1, q.backend)
    for part, tail in zip(composition, composition.tail_sums()):
        prob *= q[tail, part]
    return prob


def enumerate_law(q: DecrementMatrix, n: int, cap: int = ENUMERATION_CAP) -> CompositionLaw:
    """Exact law of ``C_n`` over all ``2^(n-1)`` compositions."""
    if n > cap:
        raise CapExceeded(f"enumeration of compositions of {n} exceeds the cap of {cap}")
    _check_size(q, n)
    # laws[m] maps compositions of m (plain tuples) to probabilities
    laws = [{(): lift(1, q.backend)}]
    for m in range(1, n + 1):
        level = {}
        for first in range(m, 0, -1):
            weight = q[m, first]
            for tail, prob in laws[m - first].items():
                level[(first, *tail)] = weight * prob
        laws.append(level)
    ordered = {Composition(c): laws[n][tuple(c)] for c in compositions(n)}
    return CompositionLaw(n, ordered)


# --------------------------------------------------------------------------
# sampling consistency


def sampling_extensions(composition: Sequence[int]) -> list:
    """Compositions ``mu`` of ``n+1`` extending ``lambda`` with coefficients ``kappa``.

    Growing part ``n_j`` carries ``(n_j + 1)/(n + 1)``; inserting a 1 into a run
    of ``j >= 0`` consecutive ones carries ``(j + 1)/(n + 1)``.
    """
    lam = tuple(composition)
    n = sum(lam)
    out = []
    for j, part in enumerate(lam):
        mu = lam[:j] + (part + 1,) + lam[j + 1 :]
        out.append((Composition(mu), Fraction(part + 1, n + 1)))
    seen = set()
    for pos in range(len(lam) + 1):
        mu = lam[:pos] + (1,) + lam[pos:]
        if mu in seen:
            continue
        seen.add(mu)
        # length of the run of ones in mu that contains the inserted 1
        lo = pos
        while lo > 0 and mu[lo - 1] == 1:
            lo -= 1
        hi = pos
        while hi + 1 < len(mu) and mu[hi + 1] == 1:
            hi += 1
        out.append((Composition(mu), Fraction(hi - lo + 1, n + 1)))
    return out


@dataclass(frozen=True)
class ConsistencyReport:
    ok: bool
    composition: Composition | None = None
    expected: Scalar | None = None
    recomputed: Scalar | None = None

    @property
    def residual(self):
        if self.expected is None:
            return None
        return self.expected - self.recomputed


def check_sampling_consistency(
    law_n: CompositionLaw, law_n1: CompositionLaw, tol: float | None = None
) -> ConsistencyReport:
    """Verify ``p(lambda) = sum_(mu extends lambda) kappa(lambda, mu) p(mu)``."""
    if law_n1.n != law_n.n + 1:
        raise ValueError(f"laws over n={law_n.n} and n={law_n1.n} are not consecutive")
    exact = all(isinstance(v, Fraction) for v in law_n.probabilities.values())
    if tol is None:
        tol = 0.0 if exact else 1e-12
    for lam, prob in law_n.items():
        total = sum(kappa * law_n1.get(mu) for mu, kappa in sampling_extensions(lam))
        if not is_close(prob, total, tol):
            return ConsistencyReport(False, Composition(lam), prob, total)
    return ConsistencyReport(True)


# --------------------------------------------------------------------------
# exchangeable partition probability function


def _distinct_permutations(items: Sequence[int]) -> Iterator[tuple]:
    counts = Counter(items)
    k = len(items)

    def rec(prefix):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for value in sorted(counts):
            if counts[value]:
                counts[value] -= 1
                prefix.append(value)
                yield from rec(prefix)
                prefix.pop()
                counts[value] += 1

    yield from rec([])


def _multinomial(sizes: Sequence[int]) -> int:
    out, acc = 1, 0
    for s in sizes:
        acc += s
        out *= math.comb(acc, s)
    return out


def eppf(q: DecrementMatrix, sizes: Sequence[int], cap: int = EPPF_CAP) -> Scalar:
    """Probability of one particular set partition with block sizes ``sizes``.

    Symmetrises the product formula over block orders; repeated sizes are
    summed once and weighted by the product of multiplicity factorials.
    """
    sizes = tuple(sizes)
    if len(sizes) > cap:
        raise CapExceeded(f"EPPF over {len(sizes)} blocks exceeds the cap of {cap}")
    weight = math.prod(math.factorial(c) for c in Counter(sizes).values())
    total = sum(composition_probability(q, perm) for perm in _distinct_permutations(sizes))
    return total * weight / _multinomial(sizes)


def two_param_eppf(alpha, theta, sizes: Sequence[int], backend: str = EXACT) -> Scalar:
    """``prod_(i<k) (theta + alpha i) / [1+theta]_(n-1) * prod_i [1-alpha]_(n_i - 1)``."""
    TwoParam(alpha, theta)
    a, t = lift(alpha, backend), lift(theta, backend)
    sizes = tuple(sizes)
    n, k = sum(sizes), len(sizes)
    num = math.prod((t + a * i for i in range(1, k)), start=lift(1, backend))
    num *= math.prod((rising(1 - a, s - 1) for s in sizes), start=lift(1, backend))
    return num / rising(1 + t, n - 1)


def ordering_factor_sum(alpha, theta, sizes: Sequence[int], backend: str = EXACT) -> Scalar:
    """Sum over all ``k!`` block orders of

    ``prod_i ((N_i - n_i) alpha + n_i theta) / (N_i ((k - i) alpha + theta))``.

    The last factor is ``n_k theta / (n_k theta)``; it is taken as 1, which
    also covers ``theta = 0``.
    """
    a, t = lift(alpha, backend), lift(theta, backend)
    if a == 0 and t == 0:
        raise ZeroDivisionError("ordering factors are undefined for alpha = theta = 0")
    TwoParam(alpha, theta)
    sizes = tuple(sizes)
    k = len(sizes)
    if k == 0:
        raise ValueError("need at least one block")
    total = lift(0, backend)
    for perm in itertools.permutations(sizes):
        tails = Composition(perm).tail_sums()
        prod = lift(1, backend)
        for i in range(1, k):
            n_i, big_n = perm[i - 1], tails[i - 1]
            prod *= ((big_n - n_i) * a + n_i * t) / (big_n * ((k - i) * a + t))
        total += prod
    return total


# --------------------------------------------------------------------------
# Green matrix and last part


@dataclass(frozen=True)
class GreenMatrix:
    """``g(n, j)``: probability that the decrement chain from ``n`` visits ``j``."""

    rows: tuple
    backend: str = EXACT

    @property
    def n_max(self) -> int:
        return len(self.rows)

    def __getitem__(self, key) -> Scalar:
        n, j = key
        return self.rows[n - 1][j - 1]


def green_matrix(q: DecrementMatrix) -> GreenMatrix:
    """Hitting probabilities ``g(n, j) = sum_m q(n:m) g(n-m, j)``, ``g(j, j) = 1``."""
    n_max = q.n_max
    g = [[None] * n for n in range(1, n_max + 1)]
    one, nil = lift(1, q.backend), lift(0, q.backend)
    for j in range(1, n_max + 1):
        g[j - 1][j - 1] = one
        for n in range(j + 1, n_max + 1):
            acc = nil
            for m in range(1, n - j + 1):
                acc += q[n, m] * g[n - m - 1][j - 1]
            g[n - 1][j - 1] = acc
    return GreenMatrix(tuple(tuple(row) for row in g), q.backend)


def green_matrix_formula(table: PhiTable) -> GreenMatrix:
    """``g(n, j) = Phi(j) C(n, j) sum_a C(n-j, a) (-1)^a / Phi(j+a)``.

    Alternating sum: use the exact backend.
    """
    rows = []
    for n in range(1, table.n_max + 1):
        row = []
        for j in range(1, n + 1):
            s = table.phi(1) * 0
            for a in range(n - j + 1):
                term = binom(n - j, a) / table.phi(j + a)
                s = s + term if a % 2 == 0 else s - term
            row.append(table.phi(j) * binom(n, j) * s)
        rows.append(tuple(row))
    return GreenMatrix(tuple(rows), table.backend)


def first_part_law(q: DecrementMatrix, n: int) -> tuple:
    """Law of the first part ``F_n``: the row ``q(n:1..n)``."""
    _check_size(q, n)
    return q.row(n)


def last_part_law(table: PhiTable, green: GreenMatrix, n: int) -> tuple:
    """``P(L_n = j) = g(n, j) Phi(j:j) / Phi(j)`` for ``j = 1..n``."""
    if n > min(table.n_max, green.n_max):
        raise ValueError(f"n={n} exceeds table size")
    return tuple(green[n, j] * table.binom(j, j) / table.phi(j) for j in range(1, n + 1))


# --------------------------------------------------------------------------
# interval partition moments


def tripartite_moment(table: PhiTable, i: int, j: int, k: int) -> Scalar:
    """``E G^i H^(j-1) D^k`` for the gaps around the block of a uniform point.

    ``(sum_a C(i,a) (-1)^a / Phi(a+j+k)) * (sum_b (-1)^b C(k,b) Phi(j+b : j+b))``.
    The second binomial coefficient is indexed by ``k``, the exponent of
    ``D``; this is the reading under which the moments reproduce
    ``E(1-G)^(n-1) = Phi(1)/Phi(n)``, ``E D^(n-1) = Phi(n:1)/(n Phi(n))`` and
    ``E H^(n-1) = Phi(n:n)/Phi(n)``.
    """
    if i < 0 or k < 0 or j < 1:
        raise ValueError("need i >= 0, j >= 1, k >= 0")
    if i + j + k > table.n_max:
        raise ValueError(f"i+j+k = {i + j + k} exceeds n_max = {table.n_max}")
    first = table.phi(1) * 0
    for a in range(i + 1):
        term = binom(i, a) / table.phi(a + j + k)
        first = first + term if a % 2 == 0 else first - term
    second = table.phi(1) * 0
    for b in range(k + 1):
        term = binom(k, b) * table.binom(j + b, j + b)
        second = second + term if b % 2 == 0 else second - term
    return first * second


def singleton_frequency_moment(table: PhiTable, drift, n: int) -> Scalar:
    """``E f^n = n! d^n / prod_(i<=n) Phi(i)`` for the total singleton frequency ``f``.

    ``table`` must be on the same scale as ``drift`` (raw normalisation).
    """
    if n > table.n_max:
        raise ValueError(f"n={n} exceeds n_max = {table.n_max}")
    d = lift(drift, table.backend)
    denom = math.prod((table.phi(i) for i in range(1, n + 1)), start=lift(1, table.backend))
    return math.factorial(n) * d**n / denom
