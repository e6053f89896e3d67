"""Command line interface: run, study, validate.

Exit codes: 0 ok, 2 config error, 3 blow-up, 4 solver failure.
The output root is --out when given, else $IBFLOW_OUT, else ./out.
"""

import argparse
import sys

from . import config as cfgmod
from . import runner, studies
from .errors import ConfigError


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ibflow",
        description="2D immersed-boundary platelet simulations (PL and RBF membranes)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation from a config file")
    p_run.add_argument("config", help="path to an INI run config")
    p_run.add_argument("--out", default=None, help="output root directory")
    p_run.add_argument("--fresh", action="store_true", help="ignore cached results")

    p_study = sub.add_parser("study", help="run a preset experiment study")
    p_study.add_argument("name", choices=studies.STUDIES)
    p_study.add_argument("--base", default=None, help="base config file (optional)")
    p_study.add_argument("--out", default=None, help="output root directory")

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config", help="path to an INI run config")

    args = parser.parse_args(argv)

    if args.command == "validate":
        try:
            cfg = cfgmod.load(args.config)
            problems = cfgmod.validate(cfg)
        except (ConfigError, OSError) as exc:
            problems = exc.problems if isinstance(exc, ConfigError) else [str(exc)]
        if problems:
            for p in problems:
                print(f"config error: {p}", file=sys.stderr)
            return 2
        for w in cfgmod.marker_spacing_warnings(cfg):
            print(f"warning: {w}", file=sys.stderr)
        print("ok")
        return 0

    if args.command == "run":
        try:
            cfg = cfgmod.load(args.config)
        except (ConfigError, OSError) as exc:
            problems = exc.problems if isinstance(exc, ConfigError) else [str(exc)]
            for p in problems:
                print(f"config error: {p}", file=sys.stderr)
            return 2
        try:
            result = runner.run_simulation(
                cfg, out_dir=runner.output_root(args.out), reuse=not args.fresh
            )
        except ConfigError as exc:
            for p in exc.problems:
                print(f"config error: {p}", file=sys.stderr)
            return 2
        for w in result.warnings:
            print(f"warning: {w}", file=sys.stderr)
        print(f"status {result.status}: {result.steps} steps to t={result.time:.6g}")
        if result.message:
            print(result.message, file=sys.stderr)
        if result.out_dir:
            print(f"outputs in {result.out_dir}")
        return result.status

    if args.command == "study":
        base = None
        if args.base:
            try:
                base = cfgmod.load(args.base)
            except (ConfigError, OSError) as exc:
                problems = exc.problems if isinstance(exc, ConfigError) else [str(exc)]
                for p in problems:
                    print(f"config error: {p}", file=sys.stderr)
                return 2
        report = studies.run_study(args.name, runner.output_root(args.out), base=base)
        print(f"study {args.name} complete: {report['csv']}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
