"""Command-line front end: convert calendar files, query and verify the results.

Commands
--------
``granlower convert FILE [--target NAME] [--minimize|--no-minimize] [--gstp]
[--format json|text]``
    Lower every definition (or one) to its periodic representation.
``granlower expand FILE NAME --labels A..B``
    Print the bottom indices of a granule range.
``granlower up FILE NAME --instant T``
    Print the label of the granule covering a bottom instant.
``granlower verify FILE [--window W] [--seed S]``
    Check every definition against the brute-force evaluator.

Exit codes: 0 ok, 1 usage, 2 parse/validation, 3 conversion precondition,
4 verification mismatch.  The environment variable ``GRANLOWER_MAX_PERIOD``
(default 10**9) caps result periods so pathological lcm blowups fail fast.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from .algebra import CalendarSyntaxError, parse_calendar, rewrite_to_bottom, validate
from .convert import ConversionError, convert_expression, gstp_relabel
from .core import EmptyRep, PeriodicRep, Rep
from .oracle import verify_against_oracle

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_CONVERT = 3
EXIT_VERIFY = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _max_period() -> int:
    raw = os.environ.get("GRANLOWER_MAX_PERIOD")
    if not raw:
        return 10**9
    try:
        value = int(raw)
        if value < 1:
            raise ValueError
    except ValueError:
        print(f"granlower: invalid GRANLOWER_MAX_PERIOD {raw!r}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from None
    return value


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"granlower: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE) from None
    try:
        doc = parse_calendar(text)
    except CalendarSyntaxError as exc:
        print(f"{path}:{exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE) from None
    report = validate(doc)
    if not report.ok:
        print(f"{path}: validation failed\n{report}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)
    return doc


def _convert_all(doc, names, minimize: bool, gstp: bool, max_period: int):
    cache: dict = {}
    out = []
    for name in names:
        try:
            rep = convert_expression(
                rewrite_to_bottom(doc, name),
                minimize=minimize,
                cache=cache,
                max_period=max_period,
            )
            if gstp:
                rep = gstp_relabel(rep)
        except ConversionError as exc:
            print(f"granlower: {name}: {exc}", file=sys.stderr)
            raise SystemExit(EXIT_CONVERT) from None
        out.append((name, rep))
    return out


def _render_text(reps) -> str:
    blocks = []
    for name, rep in reps:
        lines = [f"granularity {name}"]
        if isinstance(rep, EmptyRep):
            lines.append("empty")
        else:
            if rep.bounds is None:
                bounds = "none"
            else:
                lo, hi = rep.bounds
                bounds = f"{'-inf' if lo is None else lo}..{'+inf' if hi is None else hi}"
            suffix = f"P={rep.period} N={rep.step} bounds={bounds}"
            for label in rep.labels:
                indices = " ".join(str(x) for x in rep.explicit[label])
                lines.append(f"{label}: {indices} | {suffix}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _render_json(doc, reps) -> str:
    payload = {
        "calendar": doc.name,
        "bottom": doc.bottom,
        "granularities": [
            {"name": name, "rep": rep.to_json_dict()} for name, rep in reps
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def cmd_convert(args) -> int:
    doc = _load(args.file)
    names = [args.target] if args.target else list(doc.names)
    if args.target and args.target not in doc.names and args.target != doc.bottom:
        print(f"granlower: no definition named {args.target!r}", file=sys.stderr)
        return EXIT_PARSE
    reps = _convert_all(doc, names, args.minimize, args.gstp, _max_period())
    if args.format == "json":
        sys.stdout.write(_render_json(doc, reps))
    else:
        sys.stdout.write(_render_text(reps))
    return EXIT_OK


def _parse_label_range(spec: str) -> tuple[int, int]:
    lo, sep, hi = spec.partition("..")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        print(f"granlower: bad label range {spec!r} (use A or A..B)", file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from None
    if b < a:
        print(f"granlower: empty label range {spec!r}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return a, b


def cmd_expand(args) -> int:
    doc = _load(args.file)
    if args.name not in doc.names and args.name != doc.bottom:
        print(f"granlower: no definition named {args.name!r}", file=sys.stderr)
        return EXIT_PARSE
    ((_, rep),) = _convert_all(doc, [args.name], True, False, _max_period())
    lo, hi = _parse_label_range(args.labels)
    for label in range(lo, hi + 1):
        granule = rep.expand(label)
        body = " ".join(str(x) for x in granule) if granule else "empty"
        print(f"{label}: {body}")
    return EXIT_OK


def cmd_up(args) -> int:
    doc = _load(args.file)
    if args.name not in doc.names and args.name != doc.bottom:
        print(f"granlower: no definition named {args.name!r}", file=sys.stderr)
        return EXIT_PARSE
    ((_, rep),) = _convert_all(doc, [args.name], True, False, _max_period())
    label = rep.up(args.instant)
    print("none" if label is None else label)
    return EXIT_OK


def _spot_check(rep: Rep, rng: random.Random, lo: int, hi: int) -> str | None:
    # seeded up/expand round trips inside the verified window
    for _ in range(20):
        t = rng.randint(lo, hi)
        label = rep.up(t)
        if label is not None and t not in rep.expand(label):
            return f"up({t}) = {label} but granule does not contain {t}"
    return None


def cmd_verify(args) -> int:
    doc = _load(args.file)
    max_period = _max_period()
    reps = _convert_all(doc, list(doc.names), True, False, max_period)
    periods = [r.period for _, r in reps if isinstance(r, PeriodicRep)]
    needed = 3 * max(periods, default=1)
    window = args.window or needed
    if window < needed:
        print(
            f"granlower: warning: window {window} below 3x max period; raised to {needed}",
            file=sys.stderr,
        )
        window = needed
    rng = random.Random(args.seed)
    failures = 0
    for name, rep in reps:
        period = rep.period if isinstance(rep, PeriodicRep) else max(window // 3, 1)
        base = max(period, window // 3, 1)
        issues = verify_against_oracle(rewrite_to_bottom(doc, name), rep, base)
        probe = _spot_check(rep, rng, 1, base)
        if probe:
            issues.append(probe)
        if issues:
            failures += 1
            print(f"FAIL {name}")
            for line in issues:
                print(f"  {line}")
        else:
            print(f"ok {name} (interior [1, {base}])")
    return EXIT_VERIFY if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="granlower", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_convert = sub.add_parser("convert", help="lower definitions to periodic representations")
    p_convert.add_argument("file")
    p_convert.add_argument("--target", help="convert a single definition")
    p_convert.add_argument(
        "--minimize", default=True, action=argparse.BooleanOptionalAction,
        help="interleave period minimization (default on)",
    )
    p_convert.add_argument("--gstp", action="store_true", help="relabel for the constraint solver convention")
    p_convert.add_argument("--format", choices=("json", "text"), default="json")
    p_convert.set_defaults(run=cmd_convert)

    p_expand = sub.add_parser("expand", help="print granule contents for a label range")
    p_expand.add_argument("file")
    p_expand.add_argument("name")
    p_expand.add_argument("--labels", required=True, help="label or range A..B")
    p_expand.set_defaults(run=cmd_expand)

    p_up = sub.add_parser("up", help="label of the granule covering an instant")
    p_up.add_argument("file")
    p_up.add_argument("name")
    p_up.add_argument("--instant", type=int, required=True)
    p_up.set_defaults(run=cmd_up)

    p_verify = sub.add_parser("verify", help="compare conversions against the brute-force evaluator")
    p_verify.add_argument("file")
    p_verify.add_argument("--window", type=int, default=0, help="minimum window width in bottom granules")
    p_verify.add_argument("--seed", type=int, default=0, help="seed for spot-check probes")
    p_verify.set_defaults(run=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
