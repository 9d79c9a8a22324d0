"""Command line front end.

Exit codes: 0 success, 2 parse error, 3 exact solve incomplete, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import signal
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, TextIO

from . import budget as budget_mod
from .budget import Budget
from .crossings import CrossingsBudget, build_crossing_matrix, subset_dp_optimum
from .heuristic import HeuristicParams, local_search
from .instance import ParseError, parse_instance, parse_solution, verify_solution, write_solution
from .reductions import reduce_pipeline
from .solve import (
    IncompleteSolve,
    RunStats,
    SolverConfig,
    _components,
    exact_solve,
    heuristic_solve,
    parameterized_solve,
)

log = logging.getLogger("ocm")

EXIT_OK, EXIT_PARSE, EXIT_INCOMPLETE, EXIT_IO = 0, 2, 3, 4
STATS_VERSION = "# ocm-stats v1"
DEFAULT_BUDGET = {"heuristic": 300.0, "exact": 1800.0, "parameterized": 1800.0}
SOLVERS = {"heuristic": heuristic_solve, "exact": exact_solve, "parameterized": parameterized_solve}


@dataclass
class RunConfig:
    mode: str
    time_budget: Optional[float] = None
    iterations: Optional[int] = None
    seed: int = 0
    large_threshold: int = 10_000
    params: dict = field(default_factory=dict)
    input: Optional[str] = None
    output: Optional[str] = None
    solution: Optional[str] = None
    stats: Optional[str] = None
    no_reduce: bool = False
    no_split: bool = False
    backend: str = "bnb"
    check: bool = False
    bench_mode: str = "heuristic"

    def __post_init__(self):
        if self.mode not in ("heuristic", "exact", "parameterized", "verify", "reduce", "bench"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time budget must be positive")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            params=HeuristicParams(seed=self.seed, **self.params),
            large_threshold=self.large_threshold,
            use_interval_split=not self.no_split,
            use_scc_split=not self.no_split,
            use_reductions=not self.no_reduce,
            backend=self.backend,
        )

    def budget(self, solve_mode: str) -> Budget:
        seconds = self.time_budget
        if seconds is None and self.iterations is None:
            seconds = DEFAULT_BUDGET[solve_mode]
        return Budget(seconds, self.iterations)


def emit_stats(rows: Iterable[RunStats], sink: TextIO) -> None:
    """Versioned CSV: a comment line, a header, then one row per instance."""
    sink.write(STATS_VERSION + "\n")
    writer = csv.DictWriter(sink, fieldnames=RunStats.columns(), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        row = r.row()
        for k, v in row.items():
            if isinstance(v, float):
                row[k] = f"{v:.6f}"
        writer.writerow(row)


def _read_text(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text)


def solve_text(text: str, config: RunConfig, mode: str, name: str = "") -> tuple:
    inst = parse_instance(text)
    stats = RunStats(instance=name)
    sol = SOLVERS[mode](inst, config.budget(mode), config.solver_config(), stats)
    return inst, sol, stats


def reduction_report(text: str, config: RunConfig) -> str:
    inst = parse_instance(text)
    cfg = config.solver_config()
    stats = RunStats()
    parts, isolated = _components(inst, cfg, stats)
    removed = len(isolated)
    fits = CrossingsBudget(cfg.large_threshold)
    for part in parts:
        sub = part.instance
        if sub.n_free == 1 or not fits.fits(sub):
            continue
        matrix = build_crossing_matrix(sub, fits)
        seed = local_search(sub, matrix, cfg.params, (), Budget(iterations=0))
        removed += reduce_pipeline(sub, seed, matrix).removed
    singles = sum(1 for p in parts if p.instance.n_free == 1)
    removed += singles
    n = inst.n_free
    pct = 100.0 * removed / n if n else 100.0
    return (
        f"free vertices: {n}\n"
        f"components: {len(parts)}\n"
        f"removed: {removed} of {n} ({pct:.1f}%)\n"
        f"remaining: {n - removed}\n"
    )


def _bench(config: RunConfig, mode: str) -> list:
    rows = []
    files = sorted(p for p in Path(config.input).iterdir() if p.suffix in (".gr", ".txt"))
    for path in files:
        try:
            inst, sol, stats = solve_text(path.read_text(), config, mode, path.name)
        except IncompleteSolve:
            rows.append(RunStats(instance=path.name, mode=mode, status="incomplete"))
            continue
        except ParseError as exc:
            log.error("%s: %s", path.name, exc)
            rows.append(RunStats(instance=path.name, mode=mode, status="parse-error"))
            continue
        if config.check and inst.n_free <= 10:
            opt = subset_dp_optimum(build_crossing_matrix(inst))
            if mode != "heuristic" and sol.crossings != opt:
                stats.status = "wrong"
            elif sol.crossings == opt:
                stats.status = "optimal"
        rows.append(stats)
    return rows


def _install_signal_handlers() -> None:
    def handler(signum, frame):
        budget_mod.request_stop()

    for sig in (signal.SIGTERM, signal.SIGINT):
        try:
            signal.signal(sig, handler)
        except (ValueError, OSError):  # not in the main thread
            pass


def run(config: RunConfig) -> int:
    budget_mod.clear_stop()
    try:
        if config.mode == "verify":
            inst = parse_instance(_read_text(config.input))
            sol = parse_solution(Path(config.solution).read_text())
            try:
                count = verify_solution(inst, sol)
            except ValueError as exc:
                print(f"invalid solution: {exc}", file=sys.stderr)
                return EXIT_PARSE
            _write_text(config.output, f"{count}\n")
            return EXIT_OK
        if config.mode == "reduce":
            _write_text(config.output, reduction_report(_read_text(config.input), config))
            return EXIT_OK
        if config.mode == "bench":
            rows = _bench(config, config.bench_mode)
            buf = io.StringIO()
            emit_stats(rows, buf)
            _write_text(config.stats or config.output, buf.getvalue())
            return EXIT_OK

        _install_signal_handlers()
        try:
            _, sol, stats = solve_text(_read_text(config.input), config, config.mode)
        except IncompleteSolve as exc:
            print(f"incomplete: {exc}", file=sys.stderr)
            return EXIT_INCOMPLETE
        _write_text(config.output, write_solution(sol))
        if config.stats:
            with open(config.stats, "w") as fh:
                emit_stats([stats], fh)
        return EXIT_OK
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time", type=float, dest="time_budget", help="wall-clock budget in seconds")
    p.add_argument("--iterations", type=int, help="restart quota (deterministic budget)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--large-threshold", type=int, default=10_000)
    p.add_argument("--no-reduce", action="store_true", help="skip data reduction rules")
    p.add_argument("--no-split", action="store_true", help="skip interval and SCC splitting")
    p.add_argument("--backend", choices=("bnb", "highs"), default="bnb")
    p.add_argument("--stall-limit", type=int, dest="restart_stall_limit")
    p.add_argument("--swap-step", type=int)
    p.add_argument("--swap-max-distance", type=int)
    p.add_argument("--large-sift-crossing-cap", type=int)
    p.add_argument("--large-sift-distance-cap", type=int)


_PARAM_FLAGS = (
    "restart_stall_limit",
    "swap_step",
    "swap_max_distance",
    "large_sift_crossing_cap",
    "large_sift_distance_cap",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocm", description="One-sided crossing minimization")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance (stdin or path)")
    p.add_argument("input", nargs="?")
    p.add_argument("--mode", choices=("heuristic", "exact", "parameterized"), default="heuristic")
    p.add_argument("-o", "--output")
    p.add_argument("--stats", help="write a CSV stats row here")
    _add_common(p)

    p = sub.add_parser("verify", help="count crossings of a solution")
    p.add_argument("input")
    p.add_argument("solution")
    p.add_argument("-o", "--output")

    p = sub.add_parser("reduce", help="report how much the reductions remove")
    p.add_argument("input", nargs="?")
    p.add_argument("-o", "--output")
    _add_common(p)

    p = sub.add_parser("bench", help="solve every .gr file in a directory, CSV to --stats")
    p.add_argument("input", metavar="DIR")
    p.add_argument("--mode", choices=("heuristic", "exact", "parameterized"), default="heuristic")
    p.add_argument("--stats", help="CSV destination (default stdout)")
    p.add_argument("--check", action="store_true", help="check optimality when n_free <= 10")
    _add_common(p)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    mode = args.command if args.command != "solve" else args.mode
    params = {k: getattr(args, k) for k in _PARAM_FLAGS if getattr(args, k, None) is not None}
    return RunConfig(
        mode=mode,
        time_budget=getattr(args, "time_budget", None),
        iterations=getattr(args, "iterations", None),
        seed=getattr(args, "seed", 0),
        large_threshold=getattr(args, "large_threshold", 10_000),
        params=params,
        input=args.input,
        output=getattr(args, "output", None),
        solution=getattr(args, "solution", None),
        stats=getattr(args, "stats", None),
        no_reduce=getattr(args, "no_reduce", False),
        no_split=getattr(args, "no_split", False),
        backend=getattr(args, "backend", "bnb"),
        check=getattr(args, "check", False),
        bench_mode=args.mode if args.command == "bench" else "heuristic",
    )


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return EXIT_PARSE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
