"""Command-line front end: ``openmap run|preset|validate``."""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import OpenMapError
from .runner import run_scenario
from .scenario import PRESET_TEXT, load_scenario, preset_scenario


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", default=None, help="directory for CSV and JSON outputs")
    p.add_argument("--tolerance", type=float, default=None, help="divisibility verdict tolerance")
    p.add_argument("--grid-dt", type=float, default=None, help="override the grid step")
    p.add_argument("--grid-tmax", type=float, default=None, help="override the grid end time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="openmap",
        description="Reduced dynamics, divisibility and coherence diagnostics for system+environment models",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario")
    _add_overrides(p_run)
    p_preset = sub.add_parser("preset", help="run a built-in scenario")
    p_preset.add_argument("name", choices=sorted(PRESET_TEXT))
    p_preset.add_argument("--print", dest="print_only", action="store_true",
                          help="print the preset scenario text instead of running it")
    _add_overrides(p_preset)
    p_val = sub.add_parser("validate", help="parse and validate a scenario file")
    p_val.add_argument("scenario")
    return parser


def _execute(scenario, args) -> int:
    scenario = scenario.with_overrides(out_dir=args.out_dir, tolerance=args.tolerance,
                                       grid_dt=args.grid_dt, grid_tmax=args.grid_tmax)
    report = run_scenario(scenario)
    for name, block in report.results.items():
        if "error" in block:
            print(f"{name}: ERROR {block['error']['message']}")
        else:
            print(f"{name}: ok")
    print(f"wrote {', '.join(report.files)} to {scenario.out_dir}")
    return 0 if report.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            s = load_scenario(args.scenario)
            print(f"{args.scenario}: valid ({s.params.variant if s.custom is None else 'custom'} model, "
                  f"n={s.model.n}, N={s.model.N}, {s.grid.steps + 1} grid points, "
                  f"analyses: {', '.join(s.analyses)})")
            return 0
        if args.command == "preset":
            if args.print_only:
                print(PRESET_TEXT[args.name], end="")
                return 0
            return _execute(preset_scenario(args.name), args)
        return _execute(load_scenario(args.scenario), args)
    except OpenMapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
