"""Command-line entry point.

Exit codes: 0 all checks pass, 1 violations, 2 validation error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..evolve import EvolutionError
from ..transport import SimplexError
from .config import ConfigError, load_config, validate

EXIT_PASS, EXIT_VIOLATION, EXIT_INVALID, EXIT_ABORT = 0, 1, 2, 3
COMMANDS = ("simulate", "ot", "bound-check", "protocol", "oracle")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="macrotransport", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ("suite",):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML or JSON experiment file")
        p.add_argument("--seed", type=int, help="run a single seed, overriding the config")
        p.add_argument("--out", type=Path, help="directory for report.json and CSV artifacts")
        p.add_argument("--threads", type=int, default=1)
        if name == "protocol":
            p.add_argument("--name", choices=("sequential_mott", "supersonic", "lemma"))
            p.add_argument("--L", type=int)
            p.add_argument("--N", type=int)
            p.add_argument("--J", type=float)
            p.add_argument("--U", type=float)
            p.add_argument("--variant", choices=("three_stage", "stepwise"))
            p.add_argument("--samples", type=int)
        if name == "suite":
            p.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return ap


def _raw_config(args) -> dict:
    raw = load_config(args.config) if args.config else {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a table")
    if raw.get("kind", args.command) != args.command:
        raise ConfigError("kind", f"config declares {raw['kind']!r} but the subcommand is {args.command!r}")
    raw["kind"] = args.command
    if args.seed is not None:
        raw["seed"] = args.seed
        raw["seeds"] = [args.seed]
    if args.command == "protocol":
        pr = dict(raw.get("protocol", {}))
        for key in ("name", "L", "N", "J", "U", "variant", "samples"):
            v = getattr(args, key)
            if v is not None:
                pr[key] = v
        raw["protocol"] = pr
    return raw


def _suite(args) -> int:
    from .acceptance import run_suite

    results = run_suite(args.threads, args.only or None)
    for r in results:
        print(r.line())
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        rows = [{"number": r.number, "name": r.name, "passed": r.passed, "within_budget": r.within_budget,
                 "budget": r.budget, "detail": r.detail} for r in results]
        from ..bounds import _jsonable

        (args.out / "suite.json").write_text(json.dumps(_jsonable(rows), sort_keys=True, indent=2) + "\n")
    return EXIT_PASS if all(r.passed and r.within_budget for r in results) else EXIT_VIOLATION


def _fmt(v) -> str:
    return f"{v:.6g}" if isinstance(v, (int, float)) else str(v)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        if args.command == "suite":
            return _suite(args)
        cfg = validate(_raw_config(args))
    except (ConfigError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    from .run import run

    try:
        report = run(cfg, args.out, threads=args.threads)
    except (EvolutionError, SimplexError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for c in report.checks:
        print(f"{c['status']:>12}  {c['bound_name']}: measured={_fmt(c['measured'])} bound={_fmt(c['bound_value'])}")
    print(f"{len(report.checks)} checks, {report.violations} violations")
    return EXIT_PASS if report.passed else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
