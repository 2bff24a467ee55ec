"""``bmlab`` command line: run scenarios, write results, self-test.

Exit codes: 0 success, 1 configuration or runtime error (one line on
stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import quadrature
from .config import SCENARIOS, read_config
from .errors import BMLError, ConfigError
from .experiments import run_scenario
from .results import write_csv, write_summary, write_svg


def _k_list(text: str):
    try:
        ks = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None
    if not ks:
        raise argparse.ArgumentTypeError("k-list is empty")
    return tuple(ks)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmlab", description="Bergman and Mabuchi geodesics on CP^1.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name in SCENARIOS + ("all",):
        p = sub.add_parser(name, help=f"run the {name} scenario" if name != "all" else "run every scenario")
        p.add_argument("--config", type=Path, help="TOML configuration file")
        p.add_argument("--out", type=Path, default=Path("bmlab-out"), help="output directory (created)")
        p.add_argument("--k-list", type=_k_list, help="comma-separated k values, e.g. 8,16,32")
        p.add_argument("--t", type=float, help="evaluation time")
        p.add_argument("--threads", type=int, help="worker threads (default: BML_THREADS, then core count)")
        p.add_argument("--no-plot", action="store_true", help="skip the SVG plot")
        p.add_argument("--strict", action="store_true", help="exit 1 when an acceptance window fails")
    st = sub.add_parser("selftest", help="run the oracle corpus")
    st.add_argument("--json", action="store_true", help="machine-readable report on stdout")
    st.add_argument("--nodes", type=int, help="override the radial quadrature size")
    return parser


def _run(args) -> int:
    run_cfg = read_config(args.config)
    names = SCENARIOS if args.command == "all" else (args.command,)
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads: must be positive")
    quadrature.set_default_nodes(run_cfg.nodes)
    tables = []
    for name in names:
        cfg = run_cfg.scenario(name).with_overrides(k_list=args.k_list, t=args.t, threads=args.threads)
        tables.append(run_scenario(cfg))
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_csv(tables, out / "results.csv")
    write_summary(tables, out / "summary.json")
    if not args.no_plot:
        for table in tables:
            svg = "plot.svg" if len(tables) == 1 else f"plot_{table.scenario}.svg"
            write_svg(table, out / svg)
    for table in tables:
        status = "pass" if table.passed else "FAIL"
        fits = ", ".join(f"{q} slope {f.slope:.4f}" for q, f in sorted(table.fits.items()))
        print(f"{table.scenario:15s} {status}  {fits}")
    if args.strict and not all(t.passed for t in tables):
        return 1
    return 0


def _selftest(args) -> int:
    from .selftest import run_selftest

    if args.nodes is not None:
        if args.nodes < 1:
            raise ConfigError("--nodes: must be positive")
        quadrature.set_default_nodes(args.nodes)
    outcomes = run_selftest()
    failures = [o for o in outcomes if not o.passed]
    if args.json:
        report = {
            "passed": not failures,
            "checks": [{"name": o.name, "passed": o.passed, "detail": o.detail, "seconds": o.seconds}
                       for o in outcomes],
        }
        print(json.dumps(report, indent=2))
    else:
        for o in outcomes:
            print(f"{'PASS' if o.passed else 'FAIL'}  {o.name:40s} {o.seconds:6.2f}s  {o.detail}")
        print(f"{len(outcomes) - len(failures)}/{len(outcomes)} checks passed")
    for o in failures[:3]:
        print(f"selftest failure: {o.name}: {o.detail}", file=sys.stderr)
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    previous = quadrature.default_rule()
    try:
        if args.command == "selftest":
            return _selftest(args)
        return _run(args)
    except (BMLError, ValueError, RuntimeError, OSError) as exc:
        print(f"bmlab: error: {exc}", file=sys.stderr)
        return 1
    finally:
        quadrature.set_default_nodes(previous.size, previous.n_theta)


if __name__ == "__main__":
    sys.exit(main())
