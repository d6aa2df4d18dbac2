"""Command-line entry point: ``nhur run <file>``, ``nhur list``, ``nhur --version``.

Exit codes for ``run``: 0 all expectations pass, 1 an expectation failed,
2 the scenario does not match the schema, 3 a numerical guard fired
(exponential overflow, ill-conditioned metric, truncation too small, ...).
"""
import argparse
import sys

from . import __version__
from .errors import NumericalGuard
from .scenario import (
    ScenarioError,
    list_scenarios,
    load_scenario,
    render_text,
    resolve_scenario_path,
    run_scenario,
    write_outputs,
)

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_NUMERIC = 0, 1, 2, 3


def _positive_int(text):
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nhur", description="Uncertainty relations for non-Hermitian operators."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file or bundled scenario")
    run.add_argument("scenario", help="path to a .toml scenario, or a bundled scenario name")
    run.add_argument("--out", default="reports", help="output directory (default: ./reports)")
    run.add_argument("--seed", type=_positive_int, help="override the scenario seed")
    run.add_argument("--tol", type=float, help="override the saturation tolerance")
    run.add_argument("--truncation", type=int, help="override the Fock truncation N")
    run.add_argument("--dir", help="extra directory searched for scenario names")
    run.add_argument("--quiet", action="store_true", help="do not echo the text report")

    ls = sub.add_parser("list", help="list bundled scenarios")
    ls.add_argument("--dir", help="also list scenarios found in this directory")
    return parser


def cmd_run(args):
    try:
        path = resolve_scenario_path(args.scenario, args.dir)
        scn = load_scenario(path)
        result = run_scenario(scn, seed=args.seed, tol=args.tol, truncation=args.truncation)
        files = write_outputs(result, args.out)
    except ScenarioError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NumericalGuard as exc:
        print(f"numerical guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not args.quiet:
        print(render_text(result), end="")
    for f in files:
        print(f"wrote {f}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_list(args):
    try:
        catalog = list_scenarios(args.dir)
    except ScenarioError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    width = max(len(n) for n in catalog)
    for name, (desc, _) in sorted(catalog.items()):
        print(f"{name:<{width}}  {desc}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_list(args)


if __name__ == "__main__":
    sys.exit(main())
