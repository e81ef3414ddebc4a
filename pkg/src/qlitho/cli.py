"""Command-line front end.

    qlitho run scenario.yaml [--out DIR] [--set key=value ...]
    qlitho <kind> [--set key=value ...] [--out DIR]

Common flags: ``--seed-override`` replaces the scenario seed,
``--tolerance-scale`` multiplies every check tolerance, ``--formats``
selects which report files to write. Exit status is 0 when every check
passes, 1 when any check fails and 2 for scenario or usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import NamedTuple, Sequence

from .errors import QlithoError, ScenarioError
from .reports import FORMATS, ReportBundle, emit_report
from .runners import execute
from .scenario import KINDS, Scenario, load_scenario, parse_assignment, schema_for, validate


class RunResult(NamedTuple):
    bundle: ReportBundle
    out_dir: Path
    files: list[Path]


def run_scenario(
    source,
    out_dir=None,
    overrides: dict | None = None,
    seed_override: int | None = None,
    tolerance_scale: float = 1.0,
    formats: Sequence[str] = FORMATS,
) -> RunResult:
    """Load (or accept) a scenario, run it and write its report files."""
    overrides = dict(overrides or {})
    if isinstance(source, Scenario):
        sc = source
    elif isinstance(source, dict):
        sc = validate(source, None, overrides)
    else:
        sc = load_scenario(source, overrides)
    notes = []
    if seed_override is not None:
        if "seed" in schema_for(sc.kind):
            sc = validate({"kind": sc.kind, "output_dir": str(sc.output_dir), "parameters": {**sc.parameters, "seed": seed_override}})
        else:
            notes.append(f"--seed-override ignored: kind {sc.kind!r} draws no random numbers")
    bundle = execute(sc, tolerance_scale)
    bundle.notes.extend(notes)
    target = Path(out_dir) if out_dir is not None else sc.output_dir
    files = emit_report(bundle, target, formats)
    return RunResult(bundle, target, files)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--out", type=Path, default=None, help="output directory (default: scenario output_dir)")
    p.add_argument("--set", dest="assign", action="append", default=[], metavar="KEY=VALUE", help="override a parameter")
    p.add_argument("--seed-override", type=int, default=None, help="replace the scenario seed")
    p.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every check tolerance")
    p.add_argument("--formats", default=",".join(FORMATS), help=f"comma-separated subset of {','.join(FORMATS)}")
    p.add_argument("--quiet", action="store_true", help="print only the final status line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlitho", description="Multiphoton lithography scenario runner")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file (YAML or JSON)")
    run.add_argument("file", type=Path)
    _add_common(run)
    for kind in KINDS:
        kp = sub.add_parser(kind, help=f"run a {kind} scenario from defaults and --set overrides")
        _add_common(kp)
    sub.add_parser("kinds", help="list scenario kinds with their parameters and defaults")
    return parser


def _print_kinds(stream):
    for kind in KINDS:
        print(kind, file=stream)
        for name, prm in schema_for(kind).items():
            extra = f" one of {list(prm.choices)}" if prm.choices else ""
            print(f"    {name} = {prm.default!r} ({prm.type}{extra})", file=stream)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "kinds":
        _print_kinds(sys.stdout)
        return 0
    try:
        overrides = dict(parse_assignment(a) for a in args.assign)
        formats = [f.strip() for f in args.formats.split(",") if f.strip()]
        source = args.file if args.command == "run" else {"kind": args.command}
        result = run_scenario(source, args.out, overrides, args.seed_override, args.tolerance_scale, formats)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (QlithoError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    bundle = result.bundle
    if not args.quiet:
        for check in bundle.checks:
            print(check.line())
        for note in bundle.notes:
            print(f"note: {note}")
    failed = sum(not c.passed for c in bundle.checks)
    status = "all checks passed" if failed == 0 else f"{failed} of {len(bundle.checks)} checks failed"
    print(f"{bundle.kind}: {status}; {len(result.files)} files written to {result.out_dir}")
    return 0 if failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
