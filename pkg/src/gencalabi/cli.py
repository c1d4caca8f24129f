"""Command line entry point.

Exit codes: 0 all claims pass, 1 a claim failed, 2 configuration error,
3 the Liouville solver did not converge.
"""

import argparse
import logging
import os
import sys

from . import __version__, harness
from .errors import ConfigError, DomainError, NonConvergence, ParseError, ShapeMismatch, UnboundConstant

EXIT_OK, EXIT_CLAIM, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
_CONFIG_ERRORS = (ConfigError, ParseError, UnboundConstant, ShapeMismatch, DomainError)


def _parser():
    p = argparse.ArgumentParser(prog="gencalabi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the scenario)")
        sp.add_argument("--tolerance", action="append", default=[], metavar="KEY=VALUE",
                        help="override a tolerance by claim id or class; repeatable")
        sp.add_argument("--out", default=None, help="output path")

    common(sub.add_parser("verify", help="check every claim at the scenario's sample points"))
    prof = sub.add_parser("profile", help="tabulate curvature along z or t as CSV")
    common(prof)
    prof.add_argument("--axis", choices=("z", "t"), default="z")
    prof.add_argument("--count", type=int, default=25)
    solve = sub.add_parser("solve", help="solve the Liouville-type constraint for H")
    common(solve)
    return p


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = harness.parse_tolerance_overrides(args.tolerance)
        sc = harness.load_scenario(args.scenario, seed=args.seed, tolerances=overrides)
        if args.command == "verify":
            report = harness.run_verify(sc)
            out = args.out or (os.path.join(sc.base_dir, sc.report) if sc.report else None)
            _write(harness.dump_report(report), out)
            s = report["summary"]
            print(f"verify: {s['status']} ({s['pass']} pass, {s['fail']} fail, "
                  f"{s['not-applicable']} not applicable, {report['points']['accepted']} points)",
                  file=sys.stderr)
            return harness.exit_status(report)
        if args.command == "profile":
            _write(harness.run_profile(sc, args.axis, args.count), args.out)
            return EXIT_OK
        out_dir = args.out or os.path.join(sc.base_dir, "solve-output")
        summary, code = harness.run_solve(sc, out_dir)
        print(f"solve: {summary['status']}, residual {summary['residual']:.3e} "
              f"after {summary['iterations']} iterations -> {out_dir}", file=sys.stderr)
        return code
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
