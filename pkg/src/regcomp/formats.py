"""Spec-file parsing and CSV/JSON encodings.

A spec file is a JSON object::

    {"family": {"kind": "two_param", "alpha": "1/2", "theta": "1/2"},
     "n_max": 10, "backend": "exact", "normalization": "unit"}

or, to referee a decrement matrix produced elsewhere::

    {"matrix": [["1"], ["1/2", "1/2"], ...], "backend": "exact"}

Rationals may be written as JSON integers, decimal numbers, strings such as
``"3/4"`` or objects ``{"num": 3, "den": 4}``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, TextIO

from .decrement import DecrementMatrix, decrement_from_family, phi_from_singleton_probs, singleton_probs_from_q
from .law import Composition, CompositionLaw, GreenMatrix
from .phi_model import (
    RAW,
    UNIT,
    BetaDensity,
    Degenerate,
    DiscreteMeasure,
    LevyFamily,
    PhiTable,
    TwoParam,
    build_phi_table,
    ewens,
    geometric,
    myriads,
)
from .scalar import BACKENDS, EXACT, BackendError, as_rational, fmt


class SpecError(ValueError):
    """A spec file could not be parsed; the message names the offending field."""


def _field(obj: dict, key: str, path: str, default: Any = ...):
    if key in obj:
        return obj[key]
    if default is ...:
        raise SpecError(f"{path}: missing required field '{key}'")
    return default


def _rational(value, path: str) -> Fraction:
    try:
        return as_rational(value)
    except BackendError as exc:
        raise SpecError(f"{path}: {exc}") from None


def _atoms(raw, path: str) -> tuple:
    if not isinstance(raw, list):
        raise SpecError(f"{path}: expected a list of atoms")
    atoms = []
    for i, atom in enumerate(raw):
        where = f"{path}[{i}]"
        if isinstance(atom, dict):
            x, w = _field(atom, "x", where), _field(atom, "w", where)
        elif isinstance(atom, list) and len(atom) == 2:
            x, w = atom
        else:
            raise SpecError(f"{where}: atom must be [x, w] or {{'x': .., 'w': ..}}")
        atoms.append((_rational(x, f"{where}.x"), _rational(w, f"{where}.w")))
    return tuple(atoms)


def parse_family(obj: Any, path: str = "family") -> LevyFamily:
    """Decode a Lévy family from its JSON object (``"kind"`` discriminator)."""
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    kind = _field(obj, "kind", path)
    num = lambda key, default=...: _rational(_field(obj, key, path, default), f"{path}.{key}")  # noqa: E731
    try:
        if kind in ("discrete", "discrete_measure"):
            return DiscreteMeasure(num("drift", 0), _atoms(_field(obj, "atoms", path, []), f"{path}.atoms"))
        if kind in ("beta", "beta_density"):
            return BetaDensity(num("drift", 0), num("scale", 1), num("a"), num("b"))
        if kind == "two_param":
            return TwoParam(num("alpha"), num("theta"))
        if kind == "ewens":
            return ewens(num("theta"))
        if kind == "geometric":
            return geometric(num("x"))
        if kind == "myriads":
            return myriads(num("x"), num("drift"))
        if kind == "degenerate":
            return Degenerate(_field(obj, "type", path))
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(f"{path}: {exc}") from None
    raise SpecError(f"{path}.kind: unknown family kind {kind!r}")


def family_to_json(spec: LevyFamily) -> dict:
    enc = lambda v: fmt(v) if isinstance(v, Fraction) else v  # noqa: E731
    if isinstance(spec, DiscreteMeasure):
        return {"kind": "discrete", "drift": enc(spec.drift), "atoms": [[enc(x), enc(w)] for x, w in spec.atoms]}
    if isinstance(spec, BetaDensity):
        return {"kind": "beta", "drift": enc(spec.drift), "scale": enc(spec.scale), "a": enc(spec.a), "b": enc(spec.b)}
    if isinstance(spec, TwoParam):
        return {"kind": "two_param", "alpha": enc(spec.alpha), "theta": enc(spec.theta)}
    if isinstance(spec, Degenerate):
        return {"kind": "degenerate", "type": spec.kind}
    raise TypeError(f"not a Lévy family: {spec!r}")


@dataclass(frozen=True)
class SpecFile:
    n_max: int
    backend: str = EXACT
    normalization: str = UNIT
    family: LevyFamily | None = None
    matrix: DecrementMatrix | None = None

    def with_overrides(self, n_max: int | None = None, backend: str | None = None) -> "SpecFile":
        matrix = self.matrix
        backend = backend or self.backend
        if matrix is not None and backend != matrix.backend:
            matrix = DecrementMatrix.from_rows([[float(v) if backend != EXACT else v for v in row] for row in matrix.rows])
        return SpecFile(n_max or self.n_max, backend, self.normalization, self.family, matrix)

    def decrement(self) -> DecrementMatrix:
        if self.matrix is not None:
            if self.n_max > self.matrix.n_max:
                raise SpecError(f"n_max={self.n_max} exceeds the {self.matrix.n_max} rows of the supplied matrix")
            return self.matrix.truncated(self.n_max)
        return decrement_from_family(self.family, self.n_max, self.backend)

    def phi_table(self) -> PhiTable:
        """The family's table, or for a raw matrix the one implied by its first column."""
        if self.family is not None:
            return build_phi_table(self.family, self.n_max, self.backend, self.normalization)
        return phi_from_singleton_probs(singleton_probs_from_q(self.decrement()))


def parse_spec(text: str) -> SpecFile:
    try:
        obj = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise SpecError("spec: top level must be an object")
    backend = _field(obj, "backend", "spec", EXACT)
    if backend not in BACKENDS:
        raise SpecError(f"spec.backend: expected one of {BACKENDS}, got {backend!r}")
    normalization = _field(obj, "normalization", "spec", UNIT)
    if normalization not in (UNIT, RAW):
        raise SpecError(f"spec.normalization: expected 'unit' or 'raw', got {normalization!r}")
    has_family, has_matrix = "family" in obj, "matrix" in obj
    if has_family == has_matrix:
        raise SpecError("spec: exactly one of 'family' or 'matrix' is required")
    family = matrix = None
    if has_family:
        family = parse_family(obj["family"])
        n_max = _field(obj, "n_max", "spec")
    else:
        rows = obj["matrix"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise SpecError("spec.matrix: expected a list of rows")
        parsed = [[_rational(v, f"spec.matrix[{n}][{m}]") for m, v in enumerate(row)] for n, row in enumerate(rows)]
        if backend != EXACT:
            parsed = [[float(v) for v in row] for row in parsed]
        try:
            matrix = DecrementMatrix.from_rows(parsed)
        except ValueError as exc:
            raise SpecError(f"spec.matrix: {exc}") from None
        n_max = _field(obj, "n_max", "spec", matrix.n_max)
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise SpecError(f"spec.n_max: expected a positive integer, got {n_max!r}")
    return SpecFile(n_max, backend, normalization, family, matrix)


def load_spec(path: str) -> SpecFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path!r}: {exc.strerror}") from None
    return parse_spec(text)


# --------------------------------------------------------------------------
# CSV


def _writer(out: TextIO):
    return csv.writer(out, lineterminator="\n")


def _triangle_csv(out: TextIO, head: list, label: str, rows: Iterable, extra=None):
    rows = list(rows)
    n_max = len(rows)
    w = _writer(out)
    w.writerow(head + [f"{label}={m}" for m in range(1, n_max + 1)])
    for n, row in enumerate(rows, start=1):
        lead = [n] + ([fmt(extra[n - 1])] if extra is not None else [])
        w.writerow(lead + [fmt(v) for v in row] + [""] * (n_max - n))


def write_phi_table(table: PhiTable, out: TextIO):
    """Rows ``n``; columns ``phi`` then ``Phi(n:m)``, blank above the diagonal."""
    _triangle_csv(out, ["n", "phi"], "m", table.binom_rows, table.phi_values)


def write_decrement(q: DecrementMatrix, out: TextIO):
    _triangle_csv(out, ["n"], "m", q.rows)


def write_green(g: GreenMatrix, out: TextIO):
    _triangle_csv(out, ["n"], "j", g.rows)


def write_law(law: CompositionLaw, out: TextIO):
    w = _writer(out)
    w.writerow(["composition", "probability"])
    for comp, prob in law.items():
        w.writerow([str(comp), fmt(prob)])


def write_samples(samples: Iterable, out: TextIO):
    for comp in samples:
        out.write(f"{Composition(comp)}\n")


def to_csv(writer, obj) -> str:
    buf = io.StringIO()
    writer(obj, buf)
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
