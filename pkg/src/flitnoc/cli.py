"""Command-line front end.

Verbs:
  run <scenario>        execute a builtin or a scenario file, write CSVs
                        and figures, print a summary
  validate <scenario>   check a configuration and report the probe flow's
                        contention profile without running
  list-scenarios        names of the builtin scenario files

Exit codes: 0 success, 1 usage or configuration error, 2 a run completed
but an invariant (latency bound, ordering, conservation) was violated.
"""

from __future__ import annotations

import argparse
import sys

from .scenario import (
    BUILTIN_SCENARIOS,
    ScenarioError,
    load_scenario,
    run_scenario,
    validate_scenario,
)
from . import report

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flitnoc",
        description="Cycle-accurate flit-interleaving NoC simulator and latency toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("scenario", help="builtin name or path to a .scn file")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--duration", type=int, default=None, help="override run length in cycles")
    p_run.add_argument("--clock-ns", type=float, default=None, help="cycle time for ns columns")
    p_run.add_argument("--output-dir", default="results", help="where CSVs and figures go")
    p_run.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    p_val = sub.add_parser("validate", help="check a scenario without running it")
    p_val.add_argument("scenario")

    sub.add_parser("list-scenarios", help="list builtin scenarios")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-scenarios":
        for name in BUILTIN_SCENARIOS:
            print(name)
        return EXIT_OK

    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, KeyError) as exc:
        print(f"error: cannot load scenario {args.scenario!r}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        try:
            info = validate_scenario(sc)
        except ScenarioError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for key, value in info.items():
            print(f"{key}: {value}")
        return EXIT_OK

    # run
    if args.seed is not None:
        sc.seed = args.seed
        if sc.rand is not None:
            sc.rand.seeds = [args.seed]
    if args.duration is not None:
        sc.duration = args.duration
        if sc.rand is not None:
            sc.rand.duration = args.duration
    if args.clock_ns is not None:
        sc.clock_ns = args.clock_ns

    try:
        validate_scenario(sc)
        outcome = run_scenario(sc)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    written = report.emit(outcome, args.output_dir, plot=not args.no_plot)
    for line in outcome.summary:
        print(line)
    for path in written:
        print(f"wrote {path}")
    if outcome.violations:
        for v in outcome.violations:
            print(f"INVARIANT VIOLATION: {v}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
