"""Exact cross-checks of a decrement matrix and its Lévy table.

Each check returns a :class:`Check`; :func:`run_verification` runs them all
and is what ``regcomp verify`` reports.  Independent routes to the same
quantity are compared exactly, so the exact backend is required.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .decrement import (
    DecrementMatrix,
    decrement_from_first_column,
    decrement_from_phi,
    detect_symmetry,
    phi_from_singleton_probs,
    phi_from_structural_moments,
    singleton_probs_from_q,
    structural_moments,
    verify_decrement_recursion,
)
from .law import (
    EPPF_CAP,
    ENUMERATION_CAP,
    check_sampling_consistency,
    enumerate_law,
    eppf,
    green_matrix,
    green_matrix_formula,
    integer_partitions,
    last_part_law,
    two_param_eppf,
)
from .phi_model import PhiTable, TwoParam
from .scalar import EXACT, fmt

DEFAULT_N_LIMIT = 8


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, **self.detail}


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple
    verdict: dict | None

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.ok), None)

    def as_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.as_dict() for c in self.checks], "symmetry": self.verdict}


def _first_mismatch(a, b):
    for i, (x, y) in enumerate(zip(a, b), start=1):
        if x != y:
            return i, x, y
    return None


def check_stochastic(q: DecrementMatrix) -> Check:
    for n, problem in q.stochastic_defects():
        return Check("row_stochastic", False, {"n": n, "problem": problem})
    return Check("row_stochastic", True)


def check_recursion(q: DecrementMatrix) -> Check:
    report = verify_decrement_recursion(q)
    return Check("decrement_recursion", report.ok, {} if report.ok else report.as_dict())


def check_consistency(q: DecrementMatrix, n_limit: int) -> Check:
    prev = enumerate_law(q, 1)
    for n in range(2, n_limit + 1):
        cur = enumerate_law(q, n, cap=n_limit)
        report = check_sampling_consistency(prev, cur)
        if not report.ok:
            return Check(
                "sampling_consistency",
                False,
                {
                    "n": n - 1,
                    "composition": str(report.composition),
                    "expected": fmt(report.expected),
                    "recomputed": fmt(report.recomputed),
                },
            )
        prev = cur
    return Check("sampling_consistency", True, {"n_limit": n_limit})


def check_green(q: DecrementMatrix, table: PhiTable) -> Check:
    dp, closed = green_matrix(q), green_matrix_formula(table)
    for n in range(1, q.n_max + 1):
        bad = _first_mismatch(dp.rows[n - 1], closed.rows[n - 1])
        if bad:
            j, x, y = bad
            return Check("green_dp_vs_formula", False, {"n": n, "j": j, "dp": fmt(x), "formula": fmt(y)})
    return Check("green_dp_vs_formula", True)


def check_last_part(q: DecrementMatrix, table: PhiTable, n_limit: int) -> Check:
    green = green_matrix(q)
    for n in range(1, n_limit + 1):
        marginal = enumerate_law(q, n, cap=n_limit).marginal(lambda c: c[-1])
        oracle = tuple(marginal.get(j, 0) for j in range(1, n + 1))
        bad = _first_mismatch(last_part_law(table, green, n), oracle)
        if bad:
            j, x, y = bad
            return Check("last_part_vs_enumeration", False, {"n": n, "j": j, "formula": fmt(x), "enumerated": fmt(y)})
    return Check("last_part_vs_enumeration", True, {"n_limit": n_limit})


def _roundtrip(name: str, q: DecrementMatrix, rebuild) -> Check:
    try:
        back = rebuild(q)
    except ValueError as exc:
        return Check(name, False, {"error": str(exc)})
    for n in range(1, q.n_max + 1):
        bad = _first_mismatch(q.row(n), back.row(n))
        if bad:
            m, x, y = bad
            return Check(name, False, {"n": n, "m": m, "original": fmt(x), "rebuilt": fmt(y)})
    return Check(name, True)


def check_roundtrips(q: DecrementMatrix) -> list:
    return [
        _roundtrip(
            "roundtrip_structural_moments",
            q,
            lambda q: decrement_from_phi(phi_from_structural_moments(structural_moments(q))),
        ),
        _roundtrip(
            "roundtrip_singleton_probs",
            q,
            lambda q: decrement_from_phi(phi_from_singleton_probs(singleton_probs_from_q(q))),
        ),
        _roundtrip(
            "roundtrip_first_column",
            q,
            lambda q: decrement_from_first_column([q[n, 1] for n in range(1, q.n_max + 1)]),
        ),
    ]


def check_two_param_eppf(q: DecrementMatrix, family: TwoParam, n_limit: int, eppf_cap: int = EPPF_CAP) -> Check:
    # a partition of n has at most n blocks, so n <= eppf_cap keeps every sum under the cap
    for n in range(1, min(n_limit, eppf_cap, q.n_max) + 1):
        for sizes in integer_partitions(n):
            left = eppf(q, sizes, cap=eppf_cap)
            right = two_param_eppf(family.alpha, family.theta, sizes)
            if left != right:
                return Check(
                    "eppf_two_param",
                    False,
                    {"partition": "-".join(map(str, sizes)), "from_decrement": fmt(left), "closed_form": fmt(right)},
                )
    return Check("eppf_two_param", True)


def run_verification(
    q: DecrementMatrix,
    table: PhiTable | None = None,
    family=None,
    n_limit: int = DEFAULT_N_LIMIT,
    eppf_cap: int = EPPF_CAP,
    enumeration_cap: int = ENUMERATION_CAP,
) -> VerificationReport:
    """Run every check on ``q``.

    ``table`` is the Lévy table behind ``q``; when omitted it is recovered
    from the singleton probabilities of ``q``.  ``family`` enables the
    two-parameter EPPF check.
    """
    if q.backend != EXACT:
        raise ValueError("verification compares independent routes exactly; use the exact backend")
    n_limit = min(n_limit, q.n_max, enumeration_cap)
    checks = [check_recursion(q), check_stochastic(q)]
    checks.append(check_consistency(q, n_limit))
    if table is None:
        try:
            table = phi_from_singleton_probs(singleton_probs_from_q(q))
        except ValueError as exc:
            checks.append(Check("phi_from_matrix", False, {"error": str(exc)}))
    verdict = None
    if table is not None:
        table = table.normalized().truncated(q.n_max)
        checks.append(check_green(q, table))
        checks.append(check_last_part(q, table, n_limit))
    checks.extend(check_roundtrips(q))
    if isinstance(family, TwoParam):
        checks.append(check_two_param_eppf(q, family, n_limit, eppf_cap))
    if table is not None and table.n_max >= 3:
        result = detect_symmetry(table)
        verdict = result.as_dict()
        checks.append(Check("symmetry_verdict", verdict["verdict"] != "Inconsistent", verdict))
    return VerificationReport(tuple(checks), verdict)
