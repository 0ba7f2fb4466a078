"""Command-line entry point: ``zklab run|validate|list-scenarios|version``.

Exit codes: 0 all checks passed, 1 a check failed (or results could not be
written), 2 configuration error, 3 the integrator diverged.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import ConfigurationError, DivergenceError, ZKLabError
from .experiments import DEFAULT_TOLERANCES, OUTPUT_DIR_ENV, SCENARIO_KINDS, load_config, run_scenario

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zklab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config and write its CSV")
    run.add_argument("config")
    run.add_argument("-o", "--output", help=f"CSV path (relative paths honour ${OUTPUT_DIR_ENV})")
    val = sub.add_parser("validate", help="validate a config without running it")
    val.add_argument("config")
    sub.add_parser("list-scenarios", help="list scenario kinds and default tolerances")
    sub.add_parser("version", help="print the package version")
    return p


def _report(table, out) -> None:
    for i, col in table.failures():
        print(f"FAIL row {i}: {col}", file=out)
    print(f"{table.kind}: {len(table.rows)} rows, {'PASS' if table.passed else 'FAIL'}", file=out)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_PASS
    if args.command == "list-scenarios":
        for kind in SCENARIO_KINDS:
            tols = ", ".join(f"{k}={v:g}" for k, v in DEFAULT_TOLERANCES[kind].items())
            print(f"{kind}" + (f"  [{tols}]" if tols else ""))
        return EXIT_PASS
    try:
        cfg = load_config(args.config)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"{args.config}: ok ({cfg.kind}, hash {cfg.config_hash()})")
        return EXIT_PASS
    try:
        table = run_scenario(cfg, args.output)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        t = exc.last_state.t if exc.last_state is not None else float("nan")
        print(f"diverged: {exc} (last finite state at t={t:.6g})", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ZKLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _report(table, sys.stdout)
    return EXIT_PASS if table.passed else EXIT_FAIL
