"""Monte Carlo generation of regenerative compositions and goodness-of-fit checks.

Four generators are provided:

* the decrement chain (draw the first part from ``q(n:.)``, recurse on the rest),
* sequential growth ``C_n -> C_(n+1)`` by inserting or adjoining one ball,
* stick-breaking of ``[0, 1]`` with i.i.d. atomic cut fractions,
* the alternating beta/``X`` stick of the "myriads of singletons" example,
  returning the total length of the singleton intervals.

Samplers take an explicit :class:`RngStream`; the same seed always gives the
same draws.  Batch helpers split work into fixed-size chunks with spawned
sub-streams, so results do not depend on the number of threads.
"""

from __future__ import annotations

import bisect
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .decrement import DecrementMatrix
from .law import Composition, CompositionLaw
from .phi_model import DiscreteMeasure
from .scalar import lift

CHUNK_SIZE = 8192
STICK_DRAW_CAP = 10_000
MYRIADS_EPS = 1e-10


class RngStream:
    """Seeded pseudo-random stream (PCG64 via :class:`numpy.random.SeedSequence`).

    Child streams from :meth:`spawn` are statistically independent of the
    parent and of each other and depend only on the seed and spawn order.
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            if not 0 <= int(seed) < 2**64:
                raise ValueError("seed must be a 64-bit unsigned integer")
            self._seq = np.random.SeedSequence(int(seed))
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def spawn(self, count: int) -> list:
        return [RngStream(child) for child in self._seq.spawn(count)]

    def uniform(self) -> float:
        return float(self.generator.random())

    def uniforms(self, size: int) -> np.ndarray:
        return self.generator.random(size)

    def beta(self, a: float, b: float, size=None):
        return self.generator.beta(a, b, size)

    def categorical(self, weights: Sequence) -> int:
        """Index drawn with probability proportional to ``weights``."""
        return _invert(_cumulative(weights), self.uniform())


def _cumulative(weights: Sequence) -> list:
    w = [float(v) for v in weights]
    total = sum(w)
    if total <= 0:
        raise ValueError("categorical weights must have positive total")
    acc, cum = 0.0, []
    for v in w:
        acc += v / total
        cum.append(acc)
    cum[-1] = 1.0
    return cum


def _invert(cum: Sequence[float], u: float) -> int:
    return min(bisect.bisect_right(cum, u), len(cum) - 1)


# --------------------------------------------------------------------------
# decrement chain


def _chain(cum_rows, n: int, uniforms) -> Composition:
    parts, rest, idx = [], n, 0
    while rest:
        m = _invert(cum_rows[rest - 1], uniforms[idx]) + 1
        idx += 1
        parts.append(m)
        rest -= m
    return Composition(parts)


def sample_composition(q: DecrementMatrix, n: int, rng: RngStream) -> Composition:
    """Run the decrement chain from ``n``: first part ``m ~ q(n:.)``, then recurse on ``n - m``."""
    if n > q.n_max:
        raise ValueError(f"n={n} exceeds n_max={q.n_max}")
    return _chain(q.cumulative_rows, n, rng.uniforms(n))


def _batch(draw_chunk: Callable, count: int, rng: RngStream, threads: int = 1) -> list:
    chunks = [min(CHUNK_SIZE, count - start) for start in range(0, count, CHUNK_SIZE)]
    streams = rng.spawn(len(chunks))
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(draw_chunk, chunks, streams))
    else:
        results = [draw_chunk(size, stream) for size, stream in zip(chunks, streams)]
    return [c for chunk in results for c in chunk]


def sample_compositions(q: DecrementMatrix, n: int, count: int, rng: RngStream, threads: int = 1) -> list:
    """``count`` independent chain samples, deterministic in ``rng``'s seed."""
    if n > q.n_max:
        raise ValueError(f"n={n} exceeds n_max={q.n_max}")
    cum = q.cumulative_rows

    def draw(size, stream):
        u = stream.uniforms((size, n))
        return [_chain(cum, n, row) for row in u.tolist()]

    return _batch(draw, count, rng, threads)


# --------------------------------------------------------------------------
# growth kernel


def growth_transitions(q: DecrementMatrix, composition: Sequence[int]) -> dict:
    """Exact law of ``C_(n+1)`` given ``C_n = composition``.

    Scanning blocks left to right, at block ``i`` (having passed blocks
    before it) the new ball opens a singleton just before the block with
    probability ``q(N_i+1:1)/(N_i+1)`` or joins it with probability
    ``(n_i+1)/(N_i+1) q(N_i+1:n_i+1)/q(N_i:n_i)``.  Whatever remains after
    the last block is a singleton appended at the end.  Singleton insertions
    that land in the same run of ones give the same composition and are
    summed.
    """
    comp = Composition(composition)
    n = comp.total
    if n + 1 > q.n_max:
        raise ValueError(f"growth to n={n + 1} needs n_max >= {n + 1}")
    parts = tuple(comp)
    tails = comp.tail_sums()
    out: dict = {}
    survive = lift(1, q.backend)
    for i, (part, tail) in enumerate(zip(parts, tails)):
        denom = q[tail, part]
        assert denom != 0, f"composition {comp} has zero probability under q"
        insert = q[tail + 1, 1] / (tail + 1)
        join = Fraction(part + 1, tail + 1) * q[tail + 1, part + 1] / denom
        before = Composition(parts[:i] + (1,) + parts[i:])
        joined = Composition(parts[:i] + (part + 1,) + parts[i + 1 :])
        out[before] = out.get(before, 0) + survive * insert
        out[joined] = out.get(joined, 0) + survive * join
        survive = survive * (1 - insert - join)
    last = Composition(parts + (1,))
    out[last] = out.get(last, 0) + survive
    return {c: p for c, p in out.items() if p != 0}


def push_forward(q: DecrementMatrix, law: CompositionLaw) -> dict:
    """Exact law at ``n+1`` obtained by growing every composition of ``law``."""
    out: dict = {}
    for comp, prob in law.items():
        if prob == 0:
            continue
        for nxt, t in growth_transitions(q, comp).items():
            out[nxt] = out.get(nxt, 0) + prob * t
    return out


class _GrowthTable:
    """Memoised float transition tables keyed by composition."""

    def __init__(self, q: DecrementMatrix):
        self.q = DecrementMatrix(q.float_rows, "float")
        self.cache: dict = {}

    def step(self, comp: tuple, u: float) -> tuple:
        entry = self.cache.get(comp)
        if entry is None:
            trans = growth_transitions(self.q, comp)
            targets = list(trans)
            entry = (targets, _cumulative([max(trans[t], 0.0) for t in targets]))
            self.cache[comp] = entry
        targets, cum = entry
        return targets[_invert(cum, u)]


def grow_composition(q: DecrementMatrix, current: Sequence[int], rng: RngStream) -> Composition:
    """Add one ball to ``current`` according to :func:`growth_transitions`."""
    trans = growth_transitions(DecrementMatrix(q.float_rows, "float"), current)
    targets = list(trans)
    return targets[rng.categorical([max(trans[t], 0.0) for t in targets])]


def sample_by_growth(
    q: DecrementMatrix, n: int, count: int, rng: RngStream, start: Sequence[int] = (1,), threads: int = 1
) -> list:
    """Grow ``count`` compositions from ``start`` up to size ``n``."""
    start = Composition(start)
    steps = n - start.total
    if steps < 0:
        raise ValueError(f"start composition already exceeds n={n}")
    if n > q.n_max:
        raise ValueError(f"n={n} exceeds n_max={q.n_max}")
    table = _GrowthTable(q)

    def draw(size, stream):
        u = stream.uniforms((size, max(steps, 1))).tolist()
        out = []
        for row in u:
            comp = start
            for s in range(steps):
                comp = table.step(comp, row[s])
            out.append(comp)
        return out

    return _batch(draw, count, rng, threads)


# --------------------------------------------------------------------------
# stick-breaking


def _x_atoms(x_law) -> tuple:
    if isinstance(x_law, DiscreteMeasure):
        x_law = x_law.atoms
    xs = [float(x) for x, _ in x_law]
    if not xs or any(not 0 < x <= 1 for x in xs):
        raise ValueError("X law must be atoms on (0, 1]")
    return tuple(xs), tuple(_cumulative([w for _, w in x_law]))


def _stick_groups(xs, cum, points: Sequence[float], u_x: Callable[[], float]) -> Composition:
    points = sorted(points)
    parts, idx, residual = [], 0, 1.0
    for _ in range(STICK_DRAW_CAP):
        x = xs[_invert(cum, u_x())]
        right = 1.0 - residual * (1.0 - x)
        if x == 1.0:
            right = 1.0
        hi = len(points) if right >= 1.0 else bisect.bisect_left(points, right, idx)
        if hi > idx:
            parts.append(hi - idx)
            idx = hi
        if idx == len(points):
            return Composition(parts)
        residual *= 1.0 - x
    raise RuntimeError(f"stick-breaking did not cover the sample after {STICK_DRAW_CAP} cuts")


def sample_stick_breaking(x_law, n: int, rng: RngStream) -> Composition:
    """Cut ``[0,1]`` at ``Y_k = 1 - prod_(i<=k) (1 - X_i)`` and group ``n`` uniforms.

    Groups are reported left to right, empty intervals skipped.
    """
    xs, cum = _x_atoms(x_law)
    points = rng.uniforms(n).tolist()
    return _stick_groups(xs, cum, points, rng.uniform)


def sample_stick_breaking_batch(x_law, n: int, count: int, rng: RngStream, threads: int = 1) -> list:
    xs, cum = _x_atoms(x_law)

    def draw(size, stream):
        out = []
        for _ in range(size):
            points = stream.uniforms(n).tolist()
            out.append(_stick_groups(xs, cum, points, stream.uniform))
        return out

    return _batch(draw, count, rng, threads)


# --------------------------------------------------------------------------
# myriads of singletons


def sample_myriads_frequencies(x_law, drift, count: int, rng: RngStream, eps: float = MYRIADS_EPS) -> np.ndarray:
    """Vectorised draws of the singleton frequency ``f``.

    Odd cuts are beta(1, 1/d) and their pieces belong to the regenerative
    set; even cuts follow ``X`` and open a gap.  Stops once the unbroken
    stick is shorter than ``eps``, so each draw underestimates ``f`` by at
    most ``eps``.
    """
    d = float(drift)
    if d <= 0:
        raise ValueError("myriads construction needs positive drift")
    if not 0 < eps < 1:
        raise ValueError("truncation eps must lie in (0, 1)")
    xs, cum = _x_atoms(x_law)
    xs_arr, cum_arr = np.asarray(xs), np.asarray(cum)
    gen = rng.generator
    f = np.zeros(count)
    residual = np.ones(count)
    active = np.arange(count)
    while active.size:
        z = gen.beta(1.0, 1.0 / d, active.size)
        r = residual[active]
        f[active] += r * z
        r = r * (1.0 - z)
        idx = np.minimum(np.searchsorted(cum_arr, gen.random(active.size), side="right"), len(xs) - 1)
        r = r * (1.0 - xs_arr[idx])
        residual[active] = r
        active = active[r >= eps]
    return f


def sample_myriads_frequency(x_law, drift, rng: RngStream, eps: float = MYRIADS_EPS) -> float:
    """A single draw of ``f``; see :func:`sample_myriads_frequencies`."""
    return float(sample_myriads_frequencies(x_law, drift, 1, rng, eps)[0])


# --------------------------------------------------------------------------
# empirical laws and goodness of fit


@dataclass(frozen=True)
class EmpiricalLaw:
    n: int
    counts: dict
    sample_size: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.sample_size:
            raise ValueError(f"counts sum to {sum(self.counts.values())}, not sample_size={self.sample_size}")

    def frequency(self, composition) -> float:
        return self.counts.get(composition, 0) / self.sample_size


def empirical_law(samples: Iterable[Sequence[int]]) -> EmpiricalLaw:
    counts: dict = {}
    n = None
    size = 0
    for s in samples:
        comp = Composition(s)
        if n is None:
            n = comp.total
        elif comp.total != n:
            raise ValueError(f"samples mix n={n} and n={comp.total}")
        counts[comp] = counts.get(comp, 0) + 1
        size += 1
    if not size:
        raise ValueError("no samples")
    return EmpiricalLaw(n, counts, size)


def _check_same_n(emp: EmpiricalLaw, exact: CompositionLaw):
    if emp.n != exact.n:
        raise ValueError(f"empirical law over n={emp.n} vs exact law over n={exact.n}")


def tv_distance(emp: EmpiricalLaw, exact: CompositionLaw) -> float:
    """Total variation ``1/2 sum |freq - p|``."""
    _check_same_n(emp, exact)
    keys = set(emp.counts) | set(exact.probabilities)
    return 0.5 * sum(abs(emp.frequency(c) - float(exact.get(c))) for c in keys)


class ChiSquareResult(NamedTuple):
    statistic: float
    dof: int
    p_value: float


def _pool(cells: list, min_expected: float) -> list:
    """Merge cells with expected count below ``min_expected`` into one."""
    cells = sorted(cells)
    kept = [c for c in cells if c[0] >= min_expected]
    small = [c for c in cells if c[0] < min_expected]
    pool_e = sum(e for e, _ in small)
    pool_o = sum(o for _, o in small)
    if pool_e == 0 and pool_o == 0:
        return kept
    if pool_e < min_expected and kept:
        e, o = kept.pop(0)
        pool_e, pool_o = pool_e + e, pool_o + o
    return kept + [(pool_e, pool_o)]


def chi_square(emp: EmpiricalLaw, exact: CompositionLaw, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson goodness of fit, pooling cells whose expected count is below 5."""
    _check_same_n(emp, exact)
    size = emp.sample_size
    keys = set(emp.counts) | set(exact.probabilities)
    cells = [(float(exact.get(c)) * size, emp.counts.get(c, 0)) for c in keys]
    cells = _pool(cells, min_expected)
    if any(e == 0 and o > 0 for e, o in cells):
        return ChiSquareResult(math.inf, max(len(cells) - 1, 0), 0.0)
    statistic = sum((o - e) ** 2 / e for e, o in cells if e > 0)
    dof = len(cells) - 1
    p_value = float(stats.chi2.sf(statistic, dof)) if dof > 0 else 1.0
    return ChiSquareResult(float(statistic), dof, p_value)


def chi_square_two_sample(a: EmpiricalLaw, b: EmpiricalLaw, min_count: int = 10) -> ChiSquareResult:
    """Homogeneity test of two empirical laws over the same ``n``."""
    if a.n != b.n:
        raise ValueError(f"empirical laws over n={a.n} and n={b.n}")
    keys = sorted(set(a.counts) | set(b.counts), key=lambda c: a.counts.get(c, 0) + b.counts.get(c, 0))
    table, pooled = [], [0, 0]
    for c in keys:
        ca, cb = a.counts.get(c, 0), b.counts.get(c, 0)
        if ca + cb < min_count:
            pooled[0] += ca
            pooled[1] += cb
        else:
            table.append([ca, cb])
    if sum(pooled):
        table.append(pooled)
    if len(table) < 2:
        return ChiSquareResult(0.0, 0, 1.0)
    res = stats.chi2_contingency(np.array(table).T, correction=False)
    return ChiSquareResult(float(res.statistic), int(res.dof), float(res.pvalue))
