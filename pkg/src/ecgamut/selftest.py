"""Exact-value checks runnable from an installed package (``ecgamut selftest``)."""

from __future__ import annotations

from typing import Callable, TextIO

import numpy as np

from ecgamut.bbwise import bbwise_hillclimb
from ecgamut.genome import EvalCounter, EvaluatedGenome, Genome
from ecgamut.harness import BisectionConfig, bisect
from ecgamut.mpm import Partition, fit_tables, greedy_search, model_complexity
from ecgamut.problems import evaluate, make_trap


def _cm_example() -> bool:
    # [1,3][2][4] on four genes, zero-based
    return model_complexity(Partition.of([[0, 2], [1], [3]]), 16) == 20.0


def _cp_half_half() -> bool:
    bits = np.array([[0]] * 10 + [[1]] * 10, dtype=np.uint8)
    return abs(fit_tables(Partition.singletons(1), bits).score().c_p - 20.0) <= 1e-9


def _merge_accepted() -> bool:
    bits = np.array([[1, 1]] * 4 + [[0, 0]] * 4, dtype=np.uint8)
    single = fit_tables(Partition.singletons(2), bits).score().combined
    found = greedy_search(bits)
    return single == 22.0 and found.partition.groups == ((0, 1),) and found.score().combined == 17.0


def _merge_rejected() -> bool:
    bits = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 2, dtype=np.uint8)
    merged = fit_tables(Partition.of([[0, 1]]), bits).score().combined
    found = greedy_search(bits)
    return merged == 25.0 and found.partition == Partition.singletons(2) and found.score().combined == 22.0


def _hillclimb_trace() -> bool:
    problem = make_trap(2, 2, "tight")
    start = Genome.from_bits("0000")
    counter = EvalCounter()
    out = bbwise_hillclimb(
        EvaluatedGenome(start, evaluate(problem, start)), Partition.of([[0, 1], [2, 3]]), problem, counter
    )
    return str(out.genome) == "1111" and out.fitness == 4.0 and counter.count == 6


def _bisection_oracle() -> bool:
    res = bisect(lambda n: n >= 104, BisectionConfig(n_start=16, multiple=8))
    return res.n_star == 104 and [n for n, _ in res.trials] == [16, 32, 64, 128, 96, 112, 104]


CHECKS: list[tuple[str, Callable[[], bool]]] = [
    ("model complexity [1,3][2][4], n=16 -> 20 bits", _cm_example),
    ("population complexity p=(.5,.5), n=20 -> 20 bits", _cp_half_half),
    ("greedy merge accepted 17 < 22", _merge_accepted),
    ("greedy merge rejected 25 > 22", _merge_rejected),
    ("2x2 trap hillclimb 0000 -> 1111 in 6 evaluations", _hillclimb_trace),
    ("bisection on n >= 104 returns 104", _bisection_oracle),
]


def run_selftest(out: TextIO) -> bool:
    ok_all = True
    for name, check in CHECKS:
        try:
            ok = bool(check())
        except Exception as exc:  # report, don't abort the remaining checks
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}", file=out)
    return ok_all

