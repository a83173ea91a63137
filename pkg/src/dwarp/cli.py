"""Command line entry point: ``dwarp check``, ``dwarp list``."""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .harness import (
    CHECKS,
    ScenarioFileError,
    bundled_scenarios,
    load_scenario,
    resolve_scenario,
    run_checks,
)

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dwarp", description="Numerical checks for doubly warped product immersions.")
    ap.add_argument("--version", action="version", version=f"dwarp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    chk = sub.add_parser("check", help="run the checks of a scenario file or bundled scenario")
    chk.add_argument("scenario", help="path to a .dwp file or the name of a bundled scenario")
    chk.add_argument("--seed", type=int, default=None, help="sampling seed (default: the file's seed)")
    chk.add_argument("--tol", type=float, default=None, help="override every check tolerance")
    chk.add_argument("--points", type=int, default=None, help="number of sample points")
    chk.add_argument("--budget", type=int, default=None, help="plane samples for the curvature maximum (>= 64)")
    chk.add_argument("--format", choices=("text", "json"), default="text")
    chk.add_argument("--check", action="append", dest="checks", metavar="NAME",
                     help="run only this check (repeatable)")

    sub.add_parser("list", help="list bundled scenarios and check names")
    return ap


def _check(args) -> int:
    if args.points is not None and args.points < 1:
        print("dwarp: --points must be positive", file=sys.stderr)
        return EXIT_INVALID
    if args.budget is not None and args.budget < 64:
        print("dwarp: --budget must be at least 64", file=sys.stderr)
        return EXIT_INVALID
    if args.tol is not None and not args.tol > 0:
        print("dwarp: --tol must be positive", file=sys.stderr)
        return EXIT_INVALID
    unknown = [n for n in args.checks or () if n not in CHECKS]
    if unknown:
        print(f"dwarp: unknown check(s): {', '.join(unknown)}", file=sys.stderr)
        return EXIT_INVALID
    try:
        sf = load_scenario(resolve_scenario(args.scenario))
    except ScenarioFileError as err:
        print(f"dwarp: {err}", file=sys.stderr)
        return EXIT_INVALID
    report = run_checks(sf, args.seed, names=args.checks, points=args.points, budget=args.budget, tol=args.tol)
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_text())
    return report.exit_code()


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        print("bundled scenarios:")
        for name in bundled_scenarios():
            print(f"  {name}")
        print("checks:")
        for name, spec in CHECKS.items():
            print(f"  {name:<28} {spec.anchor}")
        return EXIT_OK
    return _check(args)


if __name__ == "__main__":
    sys.exit(main())
