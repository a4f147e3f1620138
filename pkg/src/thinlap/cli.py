"""Command-line experiment runner.

    thinlap <exponents|solve|extension-check|harnack|capacity> --config FILE [--config FILE ...] --out DIR
    thinlap report --out DIR [--no-figures]

Exit codes: 0 all checks pass, 1 configuration error, 2 a numerical
assertion failed, 3 solver breakdown.  Multiple configs run in a small
thread pool (capped by THINLAP_THREADS); artifacts are prefixed by each
config's ``name`` so parallel runs never collide.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import load_config
from .errors import ConfigError, SolverError, ThinlapError
from .experiments import run_experiment
from .report import ReportError, build_report

_COMMANDS = ("exponents", "solve", "extension-check", "harnack", "capacity", "report")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ASSERTION = 2
EXIT_NUMERIC = 3


def _pool_size(n_jobs: int) -> int:
    cap = os.environ.get("THINLAP_THREADS")
    try:
        cap = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        cap = 1
    return max(1, min(n_jobs, cap))


def _run_one(command: str, path: str, out_dir: Path) -> tuple[str, int, str]:
    try:
        cfg = load_config(path)
        if cfg.kind != command:
            raise ConfigError(
                f"config kind '{cfg.kind}' does not match subcommand '{command}'"
            )
        verdict = run_experiment(cfg, out_dir)
    except ConfigError as exc:
        return path, EXIT_CONFIG, f"config error: {exc}"
    except SolverError as exc:
        return path, EXIT_NUMERIC, f"solver error: {exc}"
    except ThinlapError as exc:
        return path, EXIT_CONFIG, f"error: {exc}"
    if not verdict.passed:
        failed = [c.name for c in verdict.checks if not c.passed]
        return path, EXIT_ASSERTION, "failed checks: " + ", ".join(failed)
    return path, EXIT_OK, f"all {len(verdict.checks)} checks passed"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="thinlap",
        description="experiment runner for weighted equations degenerating on a thin manifold",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        if name != "report":
            p.add_argument(
                "--config",
                action="append",
                required=True,
                metavar="FILE",
                help="experiment config file (repeatable)",
            )
        p.add_argument("--out", required=True, metavar="DIR", help="output directory")
        if name == "report":
            p.add_argument(
                "--no-figures",
                action="store_true",
                help="skip PNG rendering, aggregate verdicts only",
            )
    args = parser.parse_args(argv)

    out_dir = Path(args.out)
    if args.command == "report":
        try:
            report = build_report(out_dir, render_figures=not args.no_figures)
        except ReportError as exc:
            print(f"thinlap report: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(
            f"thinlap report: {report['experiments']} experiments, "
            f"{report['failed']} failed; wrote report.json / report.txt"
        )
        return EXIT_OK if report["failed"] == 0 else EXIT_ASSERTION

    out_dir.mkdir(parents=True, exist_ok=True)
    configs = list(args.config)
    worst = EXIT_OK
    with ThreadPoolExecutor(max_workers=_pool_size(len(configs))) as pool:
        results = list(
            pool.map(lambda path: _run_one(args.command, path, out_dir), configs)
        )
    for path, code, message in results:
        stream = sys.stdout if code == EXIT_OK else sys.stderr
        print(f"thinlap {args.command} [{Path(path).name}]: {message}", file=stream)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
