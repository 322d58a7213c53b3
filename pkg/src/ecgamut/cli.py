"""Command-line interface: ``ecgamut <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from typing import Sequence

from ecgamut.bbwise import BbmConfig, run_bbm
from ecgamut.ecga import EcgaConfig, run_ecga
from ecgamut.errors import ConfigurationError
from ecgamut.genome import make_rng
from ecgamut.harness import (
    ALGORITHMS,
    BisectionConfig,
    Cell,
    FitRow,
    Runner,
    bisect_population,
    fit_csv,
    fit_linear,
    fit_report,
    plot_script,
    read_sweep_csv,
    speedup_csv,
    speedup_table,
    sweep,
    sweep_csv,
)
from ecgamut.mpm import dump_model, partition_match
from ecgamut.problems import make_problem
from ecgamut.selection import SelectionConfig
from ecgamut.selftest import run_selftest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIZING = 3

SEEDING_NOTE = """\
seeding:
  run-ecga / run-bbm use --seed directly as the generator seed.
  bisect / sweep derive one generator per run from
  (--seed, algorithm code [ecga=0, bbm=1], m, k, purpose [bisection=0,
  measurement=1], run index), so every run is reproducible on its own and
  --jobs never changes the output.
"""


class _Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _add_problem(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--problem", choices=("trap", "onemax"), default="trap", help="benchmark function")
    g.add_argument("--m", type=int, default=10, help="number of building blocks (onemax: string length)")
    g.add_argument("--k", type=int, default=4, help="building-block size (ignored for onemax)")
    g.add_argument("--coding", choices=("tight", "loose"), default="loose", help="linkage coding of the blocks")


def _add_algorithm(p: argparse.ArgumentParser, with_n: bool = True) -> None:
    g = p.add_argument_group("algorithm")
    if with_n:
        g.add_argument("--n", type=int, default=1600, help="population size")
    g.add_argument("--tournament-size", type=int, default=8, help="tournament size s")
    g.add_argument(
        "--tournament-replacement", action="store_true", help="draw tournaments with replacement"
    )
    g.add_argument("--max-generations", type=int, default=0, help="eCGA generation cap; 0 means 10 * length")
    g.add_argument("--k-max", type=int, default=0, help="largest linkage group allowed; 0 means unlimited")


def _add_io(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("output")
    g.add_argument("--seed", type=int, default=0, help="master random seed")
    g.add_argument("--output", default="-", help="CSV output path; '-' for standard output")


def _add_harness(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("population sizing")
    g.add_argument("--runs", type=int, default=10, help="runs per bisection step")
    g.add_argument("--n-start", type=int, default=16, help="first population size tried")
    g.add_argument("--tolerance", type=float, default=0.1, help="stop when (hi - lo) / hi is at most this")
    g.add_argument("--n-cap", type=int, default=1 << 17, help="largest population size tried")
    g.add_argument(
        "--success-rule",
        choices=("mean", "quantile"),
        default="mean",
        help="mean: average correct blocks >= m-1; quantile: that fraction of runs reach m-1",
    )
    g.add_argument("--quantile", type=float, default=0.9, help="fraction used by --success-rule quantile")
    g.add_argument("--jobs", type=int, default=0, help="worker processes; 0 means all available cores")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecgamut",
        description="eCGA and model-building BB-wise mutation on deceptive trap functions.",
        epilog=SEEDING_NOTE,
        formatter_class=_Formatter,
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, description=help, epilog=SEEDING_NOTE, formatter_class=_Formatter, allow_abbrev=False)

    for name, text in (("run-ecga", "one eCGA run"), ("run-bbm", "one BB-wise mutation run")):
        p = add(name, text)
        _add_problem(p)
        _add_algorithm(p)
        _add_io(p)
        p.add_argument("--dump-model", metavar="PATH", default=None, help="write the final model to PATH")

    p = add("bisect", "minimal population size by bisection")
    p.add_argument("--algo", choices=ALGORITHMS, default="bbm", help="algorithm to size")
    _add_problem(p)
    _add_algorithm(p, with_n=False)
    _add_harness(p)
    _add_io(p)

    p = add("sweep", "size and measure an algorithm over several m")
    p.add_argument("--algo", choices=ALGORITHMS, default="bbm", help="algorithm to sweep")
    p.add_argument("--m-list", type=_int_list, default=[5, 10, 15, 20, 25, 30], help="comma-separated m values")
    p.add_argument("--seeds", type=int, default=30, help="measurement runs per cell")
    _add_problem(p)
    _add_algorithm(p, with_n=False)
    _add_harness(p)
    _add_io(p)
    p.add_argument("--fit-output", metavar="PATH", default=None, help="write scaling fits as CSV to PATH")
    p.add_argument("--plot", action="store_true", help="write a plotting script next to --output")

    p = add("speedup", "evaluation-count ratio eCGA / BB-wise mutation from sweep CSVs")
    p.add_argument("--ecga", nargs="+", required=True, metavar="CSV", help="eCGA sweep CSV file(s)")
    p.add_argument("--bbm", nargs="+", required=True, metavar="CSV", help="BB-wise mutation sweep CSV file(s)")
    p.add_argument("--output", default="-", help="CSV output path; '-' for standard output")
    p.add_argument("--fit-output", metavar="PATH", default=None, help="write the fit of eta on sqrt(k) ln m to PATH")

    add("selftest", "run the built-in exact-value checks")
    return parser


def _selection(args) -> SelectionConfig:
    return SelectionConfig(s=args.tournament_size, replacement=args.tournament_replacement)


def _emit(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _row(header: Sequence[str], values: Sequence) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerow(values)
    return buf.getvalue()


def _bisection_cfg(args) -> BisectionConfig:
    return BisectionConfig(
        runs=args.runs,
        n_start=args.n_start,
        tolerance=args.tolerance,
        n_cap=args.n_cap,
        rule=args.success_rule,
        quantile=args.quantile,
    )


def _cmd_run(args) -> int:
    problem = make_problem(args.problem, args.m, args.k, args.coding)
    rng = make_rng(args.seed)
    k_max = args.k_max or None
    if args.command == "run-ecga":
        cfg = EcgaConfig(n=args.n, selection=_selection(args), max_generations=args.max_generations or None, k_max=k_max)
        rep = run_ecga(problem, cfg, rng)
        header = ("algorithm", "m", "k", "n", "seed", "evaluations", "generations", "best_fitness", "correct_bbs", "converged")
        values = ("ecga", problem.m, problem.k, args.n, args.seed, rep.evaluations, rep.generations,
                  rep.best.fitness, rep.correct_bbs, int(rep.converged))
    else:
        rep = run_bbm(problem, BbmConfig(n=args.n, selection=_selection(args), k_max=k_max), rng)
        header = ("algorithm", "m", "k", "n", "seed", "evaluations_model", "evaluations_mutation", "evaluations",
                  "best_fitness", "correct_bbs", "groups", "partition_match")
        values = ("bbm", problem.m, problem.k, args.n, args.seed, rep.evaluations_model, rep.evaluations_mutation,
                  rep.evaluations, rep.best.fitness, rep.correct_bbs, len(rep.learned_partition),
                  partition_match(rep.learned_partition, problem.linkage))
    if args.dump_model:
        # eCGA with an already uniform initial population never builds a model
        _emit(dump_model(rep.model) if rep.model is not None else "", args.dump_model)
    _emit(_row(header, values), args.output)
    return EXIT_OK


def _cmd_bisect(args) -> int:
    cell = Cell(args.algo, args.m, args.k if args.problem == "trap" else 1, args.problem, args.coding,
                _selection(args), args.k_max or None, args.max_generations or None)
    with Runner(args.jobs) as runner:
        res = bisect_population(cell, _bisection_cfg(args), args.seed, runner)
    trials = " ".join(f"{n}:{int(ok)}" for n, ok in res.trials)
    _emit(_row(("algorithm", "m", "k", "n_star", "trials"), (args.algo, cell.m, cell.k, res.n_star or "", trials)), args.output)
    if res.failed:
        print(f"ecgamut: no population size up to {args.n_cap} met the success rule", file=sys.stderr)
        return EXIT_SIZING
    return EXIT_OK


def _cmd_sweep(args) -> int:
    k = args.k if args.problem == "trap" else 1
    with Runner(args.jobs) as runner:
        records = sweep(
            args.algo, args.m_list, k, args.seeds, args.seed, _bisection_cfg(args),
            kind=args.problem, coding=args.coding, selection=_selection(args),
            k_max=args.k_max or None, max_generations=args.max_generations or None, runner=runner,
        )
    _emit(sweep_csv(records), args.output)
    if args.fit_output:
        _emit(fit_csv(fit_report(records)), args.fit_output)
    if args.plot:
        if args.output == "-":
            raise ConfigurationError("--plot needs --output to be a file")
        script = os.path.splitext(args.output)[0] + "_plot.py"
        _emit(plot_script(args.output), script)
    if any(r.sizing_failed for r in records):
        print("ecgamut: population sizing failed for some cells (n_star left empty)", file=sys.stderr)
        return EXIT_SIZING
    return EXIT_OK


def _read_many(paths: Sequence[str]):
    out = []
    for path in paths:
        with open(path, newline="") as fh:
            out.extend(read_sweep_csv(fh.read()))
    return out


def _cmd_speedup(args) -> int:
    table = speedup_table(_read_many(args.ecga), _read_many(args.bbm))
    _emit(speedup_csv(table), args.output)
    if args.fit_output:
        fit = fit_linear([(math.sqrt(k) * math.log(m), eta) for m, k, eta in table])
        _emit(fit_csv([FitRow("eta", "sqrt_k_ln_m", fit.slope, fit.intercept, fit.r_squared)]), args.fit_output)
    return EXIT_OK


def parse_and_dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("run-ecga", "run-bbm"):
            return _cmd_run(args)
        if args.command == "bisect":
            return _cmd_bisect(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "speedup":
            return _cmd_speedup(args)
        return EXIT_OK if run_selftest(sys.stdout) else 1
    except ConfigurationError as exc:
        parser.print_usage(sys.stderr)
        print(f"ecgamut: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
