"""Command-line front end: ``run``, ``constant`` and ``validate``."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError
from .inequality_verifier import InequalityParams, sobolev_constant_domain, sobolev_constant_submanifold
from .report import FAIL, NUMERICAL_FAILURE, emit_report
from .scenarios import run_scenarios, validate_config

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog="curvdecay", description="Curvature-decay Sobolev constants and numerical verification.")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run every scenario of a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)

    const = sub.add_parser("constant", help="print a Sobolev constant")
    const.add_argument("--case", choices=("domain", "submanifold"), required=True)
    const.add_argument("--n", type=int, required=True)
    const.add_argument("--p", type=int, default=None)
    const.add_argument("--theta", type=float, required=True)
    const.add_argument("--B", type=float, required=True)
    const.add_argument("--b1", type=float, required=True)
    const.add_argument("--r0", type=float, required=True)

    val = sub.add_parser("validate", help="check a config file against the schema")
    val.add_argument("--config", required=True)
    return parser


def exit_code(reports):
    statuses = {r.status for r in reports}
    if FAIL in statuses:
        return EXIT_FAIL
    if NUMERICAL_FAILURE in statuses:
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_run(args):
    if args.workers is not None and args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    reports = run_scenarios(args.config, seed=args.seed, workers=args.workers)
    path = emit_report(reports, args.format, args.out)
    for r in reports:
        print(f"{r.status:<17} {r.scenario_id}  ({r.wall_time:.2f} s)", file=sys.stderr)
    print(f"wrote {path}", file=sys.stderr)
    return exit_code(reports)


def _cmd_constant(args):
    if args.case == "submanifold" and args.p is None:
        raise ConfigError("--p is required for the submanifold case")
    q = InequalityParams(args.n, args.theta, args.B, args.b1, args.r0, args.p)
    c = sobolev_constant_domain(q) if args.case == "domain" else sobolev_constant_submanifold(q)
    print(format(c, ".17g"))
    return EXIT_OK


def _cmd_validate(args):
    cfg = validate_config(args.config)
    print(f"{args.config}: {len(cfg.scenario)} scenario(s) valid")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "constant": _cmd_constant, "validate": _cmd_validate}[args.cmd]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"curvdecay: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        if args.cmd == "run":
            raise
        print(f"curvdecay: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"curvdecay: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
