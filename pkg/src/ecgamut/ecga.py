"""Extended compact GA: select, build an MPM, sample, replace."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ecgamut.errors import ConfigurationError
from ecgamut.genome import EvalCounter, EvaluatedGenome, RandomSource, evaluate_bits, random_population
from ecgamut.mpm import MarginalProductModel, decode, greedy_search
from ecgamut.problems import ProblemInstance, SignalStats, correct_bbs
from ecgamut.selection import SelectionConfig, tournament_select

ModelBuilder = Callable[[np.ndarray], MarginalProductModel]


@dataclass(frozen=True)
class EcgaConfig:
    n: int
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    max_generations: int | None = None  # None -> 10 * length
    k_max: int | None = None

    def __post_init__(self) -> None:
        if self.n < 2 * self.selection.s:
            raise ConfigurationError(f"eCGA needs n >= 2*s (n={self.n}, s={self.selection.s})")
        if self.max_generations is not None and self.max_generations < 1:
            raise ConfigurationError("max_generations must be >= 1")
        self.selection.check(self.n)


@dataclass(frozen=True)
class RunReport:
    evaluations: int
    generations: int
    best: EvaluatedGenome
    correct_bbs: int
    converged: bool
    model: MarginalProductModel | None = field(default=None, repr=False, compare=False)


def sample_offspring(model: MarginalProductModel, n_out: int, rng: RandomSource) -> np.ndarray:
    """Draw ``n_out`` genomes group by group from the model's frequency tables."""
    out = np.empty((n_out, model.partition.length), dtype=np.uint8)
    for loci, counts in zip(model.partition.groups, model.counts):
        cum = np.cumsum(counts)
        # uniform ticket in [0, n) lands in sequence j with probability N_j / n
        tickets = rng.integers(0, model.n, size=n_out)
        seq = np.searchsorted(cum, tickets, side="right")
        out[:, list(loci)] = decode(seq, len(loci))
    return out


def run_ecga(
    problem: ProblemInstance,
    cfg: EcgaConfig,
    rng: RandomSource,
    counter: EvalCounter | None = None,
    model_builder: ModelBuilder | None = None,
) -> RunReport:
    """One eCGA run until the population has a single fitness value.

    ``model_builder`` replaces greedy MDL search (used to inject a known model
    in tests); it receives the selected bit matrix.
    """
    counter = counter if counter is not None else EvalCounter()
    if model_builder is None:
        def model_builder(bits: np.ndarray) -> MarginalProductModel:
            return greedy_search(bits, k_max=cfg.k_max)

    max_gen = cfg.max_generations if cfg.max_generations is not None else 10 * problem.length
    pop = random_population(cfg.n, problem.length, rng, problem, counter)
    generation = 0
    model = None
    while not pop.is_converged() and generation < max_gen:
        selected = tournament_select(pop, cfg.selection, rng)
        model = model_builder(selected.bits)
        pop = evaluate_bits(sample_offspring(model, cfg.n, rng), problem, counter)
        generation += 1

    best = pop.best()
    return RunReport(
        evaluations=counter.count,
        generations=generation,
        best=best,
        correct_bbs=correct_bbs(problem, best.genome),
        converged=pop.is_converged(),
        model=model,
    )


def predict_ecga_scaling(m: int, k: int, stats: SignalStats, const: float = 1.0) -> tuple[float, float]:
    """Closed-form population size and evaluation count up to ``const``.

    n ~ 2^k (sigma/d) m ln m and nfe ~ (sigma/d) sqrt(k) 2^k m^1.5 ln m.
    """
    if m < 2:
        raise ConfigurationError(f"scaling law needs m >= 2, got {m}")
    ratio = stats.sigma_bb / stats.d
    n_pred = const * 2.0**k * ratio * m * math.log(m)
    nfe_pred = const * ratio * math.sqrt(k) * 2.0**k * m**1.5 * math.log(m)
    return n_pred, nfe_pred
