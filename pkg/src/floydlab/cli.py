"""``floydlab``: command-line front end.

Every command prints one JSON document on stdout.  Exit codes: 0 success,
1 a verified failure, 2 inconclusive (horizon or pending carry), 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Optional, Sequence

from . import __version__
from .choice import BinarySeq, ChoicePattern, counter_family, find_realising, verify_choice_at_horizon
from .classify import classify_structure, detect_cases
from .dyadic import Dyadic, image
from .dynamics import PointState, compose_along, fibre, fibre_class, is_maximal, project_y, step
from .errors import (
    DepthInsufficient,
    FloydLabError,
    HorizonExceeded,
    NoAdmissibleTemplate,
    NotNormalizable,
    PendingCarryBeyondDepth,
    ScheduleUnavailable,
    SpecParseError,
)
from .idempotent import (
    Orientation,
    SeparationTarget,
    build_family,
    build_push_word,
    build_translation,
    default_target,
    verify_collapse,
    verify_membership,
    verify_push,
)
from .odometer import OdometerPoint
from .system import format_fas, load_fas, normalize, validate

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(obj, out=None):
    out = out or sys.stdout
    out.write(json.dumps(obj, indent=2) + "\n")


def _csv_ints(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


def _dyadic(text: str) -> Dyadic:
    try:
        return Dyadic.coerce(text)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"not a dyadic rational: {text!r} ({exc})")


def _seqs(words) -> list:
    try:
        return [BinarySeq.periodic(w) for w in words]
    except ValueError as exc:
        raise UsageError(str(exc))


def _alpha(spec, args) -> OdometerPoint:
    if args.alpha is None:
        raise UsageError("--alpha is required")
    digits = _csv_ints(args.alpha)
    if args.tail == "period":
        if not digits:
            raise UsageError("--tail period needs a nonempty --alpha")
        point = OdometerPoint.periodic_tail(spec.radices, (), digits)
    else:
        point = OdometerPoint.zero_tail(spec.radices, digits)
    point.digits(max(len(digits), 1))
    return point


def _ready(spec):
    """The spec itself if it meets the standing assumption, else its normal form."""
    if validate(spec).standing_assumption:
        return spec, False
    return normalize(spec)[0], True


# --- commands -----------------------------------------------------------------


def cmd_validate(args, spec):
    report = validate(spec)
    _emit(report.to_json())
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_normalize(args, spec):
    new, descriptors = normalize(spec)
    text = format_fas(new)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    _emit({
        "steps": [d.to_json() for d in descriptors],
        "standing_assumption": validate(new).standing_assumption,
        "spec_text": text,
    })
    return EXIT_OK


def cmd_classify(args, spec):
    report = classify_structure(spec).to_json()
    report["valid"] = validate(spec).ok
    cases = {}
    for n, level in zip(spec.period_positions(), spec.period):
        found = detect_cases(level, position=n)
        cases[str(n)] = {c: [w.to_json() for w in ws] for c, ws in found.items() if ws}
    report["case_witnesses"] = cases
    _emit(report)
    return EXIT_OK


def cmd_fibre(args, spec):
    depth = args.depth or 64
    alpha = _alpha(spec, args)
    approx = fibre(spec, alpha, depth)
    out = {
        "alpha_prefix": list(alpha.digits(min(depth, 32))),
        "fibre": approx.to_json(),
        "class": fibre_class(spec, alpha, depth).to_json(),
        "maximality": is_maximal(spec, alpha, depth).to_json(),
    }
    if args.plot_data:
        digits = alpha.digits(depth)
        sep = "" if max(spec.radices.radices(depth), default=2) <= 10 else "."
        with open(args.plot_data, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha_prefix", "lo", "hi"])
            for n in range(depth + 1):
                iv = image(compose_along(spec, digits[:n]))
                writer.writerow([sep.join(map(str, digits[:n])), str(iv.lo), str(iv.hi)])
        out["plot_data"] = args.plot_data
    _emit(out)
    return EXIT_OK


def cmd_orbit(args, spec):
    depth = args.depth or 64
    state = PointState(_alpha(spec, args), _dyadic(args.z))
    rows = []
    for t in range(args.steps + 1):
        y, bound = project_y(spec, state, depth)
        rows.append({"t": t, "alpha_prefix": list(state.alpha.digits(min(depth, 16))),
                     "y": str(y), "error_bound": str(bound)})
        if t < args.steps:
            state = step(spec, state, depth)
    _emit({"z": str(state.z), "depth": depth, "orbit": rows})
    return EXIT_OK


def cmd_realising(args, spec=None):
    members = _seqs(args.seq)
    if not members:
        raise UsageError("give the family with --seq")
    if len(args.phi) != len(members):
        raise UsageError("give one --phi row per --seq member")
    try:
        pattern = ChoicePattern(members, args.phi)
    except ValueError as exc:
        raise UsageError(str(exc))
    try:
        times = find_realising(pattern, args.horizon)
    except HorizonExceeded as exc:
        _emit({"status": "inconclusive_at_horizon", "horizon": exc.horizon})
        return EXIT_INCONCLUSIVE
    _emit({"status": "found", "m": pattern.m, "times": list(times.times), "horizon": args.horizon})
    return EXIT_OK


def cmd_choiceverify(args, spec=None):
    members = _seqs(args.seq)
    if not members:
        raise UsageError("give the family with --seq")
    verdict = verify_choice_at_horizon(members, args.m or 1, args.horizon)
    _emit(verdict.to_json())
    return EXIT_OK if verdict.passed else EXIT_INCONCLUSIVE


def _target(args, family, word):
    target = default_target(family, word, threshold=_dyadic(args.a) if args.a else None)
    if args.orientation:
        target = SeparationTarget(target.threshold, Orientation[args.orientation])
    return target


def cmd_idemdemo(args, spec):
    spec, normalized = _ready(spec)
    labels = _csv_ints(args.labels) if args.labels else [0, 1]
    if any(l not in (0, 1) for l in labels):
        raise UsageError("--labels takes 0/1 values")
    members = _seqs(args.seq) if args.seq else counter_family(len(labels))
    if len(members) != len(labels):
        raise UsageError("give one label per --seq member")
    m = 2 if args.m is None else args.m
    family = build_family(spec, case=args.case)
    word = build_translation(family, members, labels, m, args.horizon)
    table = verify_membership(family, word, members, args.depth)
    report = verify_collapse(family, word, members, _target(args, family, word), args.depth)
    _emit({
        "normalized": normalized,
        "family": family.to_json(),
        "members": [x.name for x in members],
        "labels": labels,
        "word": word.to_json(),
        "membership": table.to_json(),
        "collapse": report.to_json(),
    })
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_pushword(args, spec):
    spec, normalized = _ready(spec)
    if not args.a:
        raise UsageError("--a is required")
    a = _dyadic(args.a)
    try:
        family = build_family(spec, case=args.case)
        members = _seqs(args.seq) if args.seq else None
        word = build_push_word(family, a, args.direction, j_override=args.j, members=members)
    except ValueError as exc:
        raise UsageError(str(exc))
    report = verify_push(family, word, a, depth=args.depth)
    _emit({
        "normalized": normalized,
        "family": family.to_json(),
        "word": word.to_json(),
        "push": report.to_json(),
    })
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "validate": (cmd_validate, True),
    "normalize": (cmd_normalize, True),
    "classify": (cmd_classify, True),
    "fibre": (cmd_fibre, True),
    "orbit": (cmd_orbit, True),
    "realising": (cmd_realising, False),
    "choiceverify": (cmd_choiceverify, False),
    "idemdemo": (cmd_idemdemo, True),
    "pushword": (cmd_pushword, True),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="floydlab", description="Exact experiments on Floyd-Auslander systems.")
    parser.add_argument("--version", action="version", version=f"floydlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, spec=True):
        if spec:
            p.add_argument("spec", help="path to a .fas system description")
        p.add_argument("--depth", type=int, default=None, help="digit depth (default 64, or what the word needs)")
        p.add_argument("--horizon", type=int, default=4096, help="search horizon for realising times")
        return p

    common(sub.add_parser("validate", help="check the defining conditions"))
    p = common(sub.add_parser("normalize", help="conjugate to a spec meeting 1 <= |Q| < p"))
    p.add_argument("-o", "--output", help="write the normalized .fas here")
    common(sub.add_parser("classify", help="minimality, Lambda, tameness, fibre count, cases"))

    for name in ("fibre", "orbit"):
        p = common(sub.add_parser(name))
        p.add_argument("--alpha", help="comma-separated digits of the odometer point")
        p.add_argument("--tail", choices=("zero", "period"), default="zero")
        if name == "fibre":
            p.add_argument("--plot-data", metavar="PATH", help="write CSV rows alpha_prefix,lo,hi per depth")
        else:
            p.add_argument("--z", default="0", help="fibre coordinate z (dyadic)")
            p.add_argument("--steps", type=int, default=8)

    p = common(sub.add_parser("realising", help="m-realising times for a periodic family"), spec=False)
    p.add_argument("--seq", action="append", default=[], help="periodic 01-word of a member (repeatable)")
    p.add_argument("--phi", action="append", default=[], help="choice row for the matching member (repeatable)")
    p = common(sub.add_parser("choiceverify", help="all choice matrices up to --m within the horizon"), spec=False)
    p.add_argument("--seq", action="append", default=[])
    p.add_argument("--m", type=int, default=None, help="largest matrix width (default 1)")

    for name in ("idemdemo", "pushword"):
        p = common(sub.add_parser(name))
        p.add_argument("--case", choices=("A", "B", "C"))
        p.add_argument("--seq", action="append", default=[], help="family member as periodic 01-word")
        p.add_argument("--a", help="threshold in (0, 1), e.g. 1/4 or 1/2^2")
        if name == "idemdemo":
            p.add_argument("--m", type=int, default=None)
            p.add_argument("--labels", help="comma-separated 0 (outside B) / 1 (in B)")
            p.add_argument("--orientation", choices=("LOW_BASE", "HIGH_BASE"))
        else:
            p.add_argument("--direction", type=str.upper, choices=("UP", "DOWN"), default="UP")
            p.add_argument("--j", type=int, default=None, help="override the number of steered levels")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    func, needs_spec = COMMANDS[args.command]
    try:
        spec = None
        if needs_spec:
            try:
                spec = load_fas(args.spec)
            except OSError as exc:
                raise UsageError(f"cannot read {args.spec}: {exc.strerror}")
        return func(args, spec)
    except (UsageError, SpecParseError, ValueError) as exc:
        print(f"floydlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HorizonExceeded, PendingCarryBeyondDepth, DepthInsufficient) as exc:
        print(f"floydlab: inconclusive: {exc}", file=sys.stderr)
        _emit({"status": "inconclusive", "reason": type(exc).__name__, "detail": str(exc)})
        return EXIT_INCONCLUSIVE
    except (NoAdmissibleTemplate, ScheduleUnavailable, NotNormalizable) as exc:
        print(f"floydlab: {exc}", file=sys.stderr)
        _emit({"status": "fail", "reason": type(exc).__name__, "detail": str(exc)})
        return EXIT_FAIL
    except FloydLabError as exc:
        print(f"floydlab: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
