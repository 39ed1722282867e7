"""Command-line entry point: ``wasmsym [options] PATH...``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional

from . import __version__
from .errors import AnalyzerError
from .report import PLATFORMS, RunConfig, UsageError, exit_code, run_corpus, to_json, to_text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wasmsym",
        description="Symbolic vulnerability analysis of EOSIO and EWasm smart-contract bytecode.",
    )
    p.add_argument("paths", nargs="+", help=".wasm files or directories to scan recursively")
    p.add_argument("--platform", choices=PLATFORMS, default="auto")
    p.add_argument("--loop-depth", type=int, default=10, help="max iterations per loop and path (default 10)")
    p.add_argument("--seed", type=int, default=0, help="seed for unrecognised host imports")
    p.add_argument("--solver-path", default=None, help="SMT solver executable (else $WANA_SOLVER, else z3 on PATH)")
    p.add_argument("--timeout", type=float, default=60.0, help="wall-clock seconds per contract")
    p.add_argument("--solver-timeout", type=float, default=5.0, help="seconds per solver query")
    p.add_argument("--max-paths", type=int, default=2000)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", default=None, help="write the report here instead of stdout")
    p.add_argument("--no-timings", action="store_true", help="omit timing fields (byte-stable output)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"wasmsym {__version__}")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = RunConfig(
            inputs=list(args.paths),
            platform=args.platform,
            loop_depth=args.loop_depth,
            seed=args.seed,
            solver_path=args.solver_path,
            solver_timeout=args.solver_timeout,
            timeout=args.timeout,
            max_paths=args.max_paths,
            format=args.format,
            jobs=max(1, args.jobs),
            output=args.output,
            timings=not args.no_timings,
        )
        report = run_corpus(config.inputs, config)
    except UsageError as exc:
        print(f"wasmsym: error: {exc}", file=sys.stderr)
        return 2
    except AnalyzerError as exc:
        print(f"wasmsym: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = to_json(report) if config.format == "json" else to_text(report)
    if config.output:
        with open(config.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
