"""Command-line front end.

Exit codes: 0 when every gated check passes, 1 on a gated failure or an
integrator failure, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, ErmakovLabError
from .runner import OUTPUT_ENV, parse_grid, phase_matrix_dump, run, sweep
from .scenario import load_scenario

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _print_report(rep, stream) -> None:
    for r in rep.records:
        if r.kind == "documented":
            print(f"  {'DOC':4} {r.name:24} value={r.value:.3e}", file=stream)
        else:
            op = "<=" if r.direction == "max" else ">="
            print(f"  {r.status.upper():4} {r.name:24} value={r.value:.3e} {op} {r.tol:.1e}",
                  file=stream)
    print(f"{rep.scenario}: {rep.status}", file=stream)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ermakov-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    out_help = f"output directory (default: ${OUTPUT_ENV} or ./ermakov-out)"

    r = sub.add_parser("run", help="run a scenario and write CSV and JSON artifacts")
    r.add_argument("scenario")
    r.add_argument("--out", help=out_help)

    c = sub.add_parser("check", help="run a scenario without writing artifacts")
    c.add_argument("scenario")

    s = sub.add_parser("sweep", help="run a scenario template over a parameter grid")
    s.add_argument("scenario")
    s.add_argument("--grid", action="append", required=True,
                   help="dotted.path=v1,v2,... (repeatable; the product is swept)")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", help=out_help)

    m = sub.add_parser("phase-matrix", help="dump the phase operator matrix as CSV")
    m.add_argument("--dim", type=int, required=True)
    m.add_argument("--norm", choices=("pi", "none"), default="pi")
    m.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "phase-matrix":
            try:
                path = phase_matrix_dump(args.dim, args.norm, args.out)
            except OSError as e:
                print(f"error: cannot write {args.out}: {e}", file=sys.stderr)
                return EXIT_FAIL
            print(path)
            return EXIT_OK
        sc = load_scenario(args.scenario)
        if args.command == "sweep":
            rep = sweep(sc, parse_grid(args.grid), out_dir=args.out, jobs=args.jobs)
            for child in rep.reports:
                _print_report(child, sys.stdout)
            print(f"sweep {rep.template}: {rep.status}")
            return rep.exit_code
        rep = run(sc, out_dir=getattr(args, "out", None), write=args.command == "run")
        _print_report(rep, sys.stdout)
        return rep.exit_code
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ErmakovLabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
