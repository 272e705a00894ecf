"""``regcomp``: command-line front end.

Every subcommand reads the same JSON spec file (see :mod:`regcomp.formats`).
Tables and laws are written as CSV, reports as JSON.  Exit status is 0 when
the command succeeded and every requested check passed, 1 when a check
failed and 2 on bad input.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys

from . import formats
from .decrement import NotCompletelyAlternating, detect_symmetry
from .law import EPPF_CAP, ENUMERATION_CAP, CapExceeded, Composition, enumerate_law, green_matrix
from .phi_model import DiscreteMeasure
from .sampler import (
    RngStream,
    chi_square,
    empirical_law,
    sample_by_growth,
    sample_compositions,
    sample_stick_breaking_batch,
    tv_distance,
)
from .scalar import BACKENDS, BackendError
from .verify import DEFAULT_N_LIMIT, run_verification

log = logging.getLogger("regcomp")

SAMPLE_COUNT_CAP = 10**8


class UsageError(ValueError):
    pass


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _cap(args, name: str, default: int) -> int:
    value = getattr(args, name)
    if value is None:
        return default
    if value > default:
        log.warning("raising the %s from %d to %d; expect long runtimes", name.replace("_", " "), default, value)
    return value


def _load(args) -> formats.SpecFile:
    spec = formats.load_spec(args.spec)
    return spec.with_overrides(n_max=getattr(args, "n", None), backend=args.backend)


# --------------------------------------------------------------------------
# subcommands


def cmd_phi(args) -> int:
    spec = _load(args)
    with _output(args.out) as out:
        formats.write_phi_table(spec.phi_table(), out)
    return 0


def cmd_decrement(args) -> int:
    spec = _load(args)
    with _output(args.out) as out:
        formats.write_decrement(spec.decrement(), out)
    return 0


def cmd_law(args) -> int:
    spec = _load(args)
    law = enumerate_law(spec.decrement(), spec.n_max, cap=_cap(args, "enumeration_cap", ENUMERATION_CAP))
    with _output(args.out) as out:
        formats.write_law(law, out)
    return 0


def cmd_green(args) -> int:
    spec = _load(args)
    with _output(args.out) as out:
        formats.write_green(green_matrix(spec.decrement()), out)
    return 0


def _write_samples(args, spec, q, samples, method: str) -> int:
    with _output(args.out) as out:
        formats.write_samples(samples, out)
    n = spec.n_max
    summary = {"seed": args.seed, "sample_size": len(samples), "n": n, "method": method}
    cap = _cap(args, "enumeration_cap", ENUMERATION_CAP)
    if n <= cap:
        exact = enumerate_law(q, n, cap=cap)
        emp = empirical_law(samples)
        result = chi_square(emp, exact)
        summary.update(
            tv=tv_distance(emp, exact), chi_square=result.statistic, dof=result.dof, p_value=result.p_value
        )
    else:
        summary.update(tv=None, chi_square=None, dof=None, p_value=None)
    text = formats.dumps(summary) + "\n"
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)
    return 0


def _count(args) -> int:
    cap = _cap(args, "max_count", SAMPLE_COUNT_CAP)
    if args.count < 1:
        raise UsageError("--count must be positive")
    if args.count > cap:
        raise CapExceeded(f"--count {args.count} exceeds the sample count cap of {cap}")
    return args.count


def cmd_sample(args) -> int:
    spec = _load(args)
    count = _count(args)
    q = spec.decrement()
    rng = RngStream(args.seed)
    if args.method == "stick":
        family = spec.family
        if not isinstance(family, DiscreteMeasure) or family.drift != 0:
            raise UsageError("--method stick needs a discrete family with zero drift (its atoms are the law of X)")
        samples = sample_stick_breaking_batch(family, spec.n_max, count, rng, args.threads)
    else:
        samples = sample_compositions(q, spec.n_max, count, rng, args.threads)
    return _write_samples(args, spec, q, samples, args.method)


def cmd_grow(args) -> int:
    spec = _load(args)
    count = _count(args)
    q = spec.decrement()
    try:
        start = Composition.parse(args.start)
    except ValueError as exc:
        raise UsageError(f"--start: {exc}") from None
    samples = sample_by_growth(q, spec.n_max, count, RngStream(args.seed), start=start, threads=args.threads)
    return _write_samples(args, spec, q, samples, "growth")


def cmd_verify(args) -> int:
    spec = formats.load_spec(args.spec).with_overrides(backend=args.backend)
    if spec.backend != "exact":
        raise UsageError("verify compares independent routes exactly; use the exact backend")
    n_limit = args.n if args.n is not None else DEFAULT_N_LIMIT
    enum_cap = _cap(args, "enumeration_cap", ENUMERATION_CAP)
    if n_limit > enum_cap:
        raise CapExceeded(f"--n {n_limit} exceeds the enumeration cap of {enum_cap}")
    q = spec.decrement()
    table = spec.phi_table() if spec.family is not None else None
    report = run_verification(q, table, spec.family, n_limit, _cap(args, "eppf_cap", EPPF_CAP), enum_cap)
    with _output(args.out) as out:
        out.write(formats.dumps(report.as_dict()) + "\n")
    failure = report.first_failure()
    if failure is not None:
        sys.stderr.write(f"verification failed: {failure.name} {formats.dumps(failure.detail)}\n")
        return 1
    return 0


def cmd_detect_symmetry(args) -> int:
    spec = _load(args)
    verdict = detect_symmetry(spec.phi_table()).as_dict()
    with _output(args.out) as out:
        out.write(formats.dumps(verdict) + "\n")
    return 0


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regcomp", description="Regenerative composition structures.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, n_help="override n_max from the spec"):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--spec", required=True, metavar="PATH", help="JSON spec file")
        p.add_argument("--n", type=int, help=n_help)
        p.add_argument("--backend", choices=BACKENDS, help="override the spec's backend")
        p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
        p.add_argument("--enumeration-cap", type=int, help=f"largest n to enumerate (default {ENUMERATION_CAP})")
        p.set_defaults(func=func)
        return p

    add("phi", cmd_phi, "binomial moment table as CSV")
    add("decrement", cmd_decrement, "decrement matrix as CSV")
    add("law", cmd_law, "exact law of the composition of n as CSV", "size of the composition")
    add("green", cmd_green, "Green matrix of the decrement chain as CSV")
    for name, func, help_text in (
        ("sample", cmd_sample, "sample compositions with the decrement chain or stick-breaking"),
        ("grow", cmd_grow, "sample compositions by sequential growth"),
    ):
        p = add(name, func, help_text, "size of the sampled compositions")
        p.add_argument("--count", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--max-count", type=int, help=f"sample count cap (default {SAMPLE_COUNT_CAP})")
        p.add_argument("--summary", metavar="PATH", help="summary JSON file (default stderr)")
        if name == "sample":
            p.add_argument("--method", choices=("chain", "stick"), default="chain")
        else:
            p.add_argument("--start", default="1", help="dash-joined starting composition")
    p = add("verify", cmd_verify, "run every exact check; exit 1 on failure", f"enumeration depth (default {DEFAULT_N_LIMIT})")
    p.add_argument("--eppf-cap", type=int, help=f"largest block count for the EPPF sum (default {EPPF_CAP})")
    add("detect-symmetry", cmd_detect_symmetry, "reversibility verdict as JSON")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (formats.SpecError, CapExceeded, BackendError, NotCompletelyAlternating, UsageError, ValueError) as exc:
        sys.stderr.write(f"regcomp {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
