"""Command-line front end: ``fracsiv run | compare | oracle``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .implicit import SolverError
from .oracle import GridTooLargeError
from .scenario import SCENARIO_KEYS, ScenarioError, load_run, load_scenario, run

THREADS_ENV = "FRACSIV_THREADS"

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2

log = logging.getLogger("fracsiv")


def _key_help() -> str:
    width = max(map(len, SCENARIO_KEYS))
    lines = [f"  {k.ljust(width)}  {v}" for k, v in SCENARIO_KEYS.items()]
    return "scenario file keys (key = value, # comments):\n" + "\n".join(lines)


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracsiv",
        description="Two-sided space-fractional SIV reaction-diffusion solver (CN-ADI).",
        epilog=_key_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write snapshots",
                       epilog=_key_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("scenario", type=Path)
    p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    p.add_argument("--classical", action="store_true", help="force alpha1 = alpha2 = 2")
    p.add_argument("--threads", type=int, default=None,
                   help=f"parallel slice solves (default ${THREADS_ENV} or 1)")

    p = sub.add_parser("compare", help="tabulate a metric for two run directories")
    p.add_argument("run_a", type=Path)
    p.add_argument("run_b", type=Path)
    p.add_argument("--metric", default="front_radius",
                   choices=("front_radius", "total_mass", "max"))
    p.add_argument("--compartment", default="I", choices=("S", "I", "V"))

    p = sub.add_parser("oracle", help="run the dense unsplit CN reference next to ADI")
    p.add_argument("scenario", type=Path)
    p.add_argument("--out", type=Path, help="write both runs under this directory")
    return parser


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.classical:
        scenario = scenario.classical()
    out = args.out or scenario.output_dir
    if out is None:
        raise ScenarioError("no output directory: pass --out or set output_dir")
    threads = args.threads if args.threads is not None else _default_threads()
    records = run(scenario, output_dir=out, threads=threads)
    print("time\tcompartment\ttotal_mass\tmax\tfront_radius")
    for r in records:
        m = r.metrics
        print(f"{r.time:g}\t{r.compartment}\t{m['total_mass']:.10g}\t{m['max']:.10g}\t{m['front_radius']:.10g}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    tables = []
    for path in (args.run_a, args.run_b):
        try:
            _, records = load_run(path)
        except (OSError, KeyError, ValueError) as exc:
            raise ScenarioError(f"cannot load run {path}: {exc}") from exc
        tables.append({r.time: r.metrics[args.metric] for r in records
                       if r.compartment == args.compartment})
    print(f"time\t{args.run_a}\t{args.run_b}")
    for t in sorted(set(tables[0]) | set(tables[1])):
        cells = [f"{tab[t]:.10g}" if t in tab else "nan" for tab in tables]
        print(f"{t:g}\t" + "\t".join(cells))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    scenario = load_scenario(args.scenario)
    out = args.out
    ref = run(scenario, output_dir=out / "unsplit" if out else None, method="unsplit")
    adi = run(scenario, output_dir=out / "adi" if out else None)
    print("time\tcompartment\tmax_abs_gap")
    for a, b in zip(adi, ref):
        print(f"{a.time:g}\t{a.compartment}\t{np.max(np.abs(a.grid - b.grid)):.6e}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "compare": _cmd_compare, "oracle": _cmd_oracle}[args.command]
    try:
        return handler(args)
    except (ScenarioError, GridTooLargeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
