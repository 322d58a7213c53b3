"""Selectomutative GA: learn linkage once, then hillclimb block by block.

The linkage groups come from a single greedy MDL search on the selected
initial population. The best initial individual is then improved one group
at a time (ascending smallest locus) by trying every other bit-sequence of
that group while the rest of the genome stays fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ecgamut.errors import ConfigurationError, ContractViolation
from ecgamut.genome import EvalCounter, EvaluatedGenome, Genome, RandomSource, random_population
from ecgamut.mpm import MarginalProductModel, Partition, decode, greedy_search
from ecgamut.problems import ProblemInstance, correct_bbs
from ecgamut.selection import SelectionConfig, tournament_select


@dataclass(frozen=True)
class BbmConfig:
    n: int
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    bb_order: str = "left_to_right"
    k_max: int | None = None

    def __post_init__(self) -> None:
        if self.n < self.selection.s:
            raise ConfigurationError(f"need n >= s (n={self.n}, s={self.selection.s})")
        if self.bb_order != "left_to_right":
            raise ConfigurationError(f"unsupported block order {self.bb_order!r}")
        self.selection.check(self.n)


@dataclass(frozen=True)
class BbmReport:
    evaluations_model: int
    evaluations_mutation: int
    best: EvaluatedGenome
    correct_bbs: int
    learned_partition: Partition
    model: MarginalProductModel | None = field(default=None, repr=False, compare=False)

    @property
    def evaluations(self) -> int:
        return self.evaluations_model + self.evaluations_mutation


def bbwise_hillclimb(
    start: EvaluatedGenome,
    partition: Partition,
    problem: ProblemInstance,
    counter: EvalCounter,
    order: Sequence[int] | None = None,
) -> EvaluatedGenome:
    """Enumerate each group's other 2^k - 1 settings and keep the fittest.

    Groups are visited left to right (by smallest locus) unless ``order``
    gives a permutation of group positions in ``partition.groups``.
    """
    if partition.length != start.genome.length:
        raise ContractViolation("partition does not cover the genome")
    if order is None:
        visit = sorted(partition.groups, key=min)
    else:
        if sorted(order) != list(range(len(partition))):
            raise ContractViolation("order must be a permutation of the group positions")
        visit = [partition.groups[i] for i in order]
    current = np.array(start.genome.bits, dtype=np.uint8)
    fitness = start.fitness
    for loci in visit:
        k = len(loci)
        own = int(current[list(loci)] @ (1 << np.arange(k - 1, -1, -1)))
        seqs = np.arange(1 << k)
        seqs = seqs[seqs != own]
        variants = np.repeat(current[None, :], len(seqs), axis=0)
        variants[:, list(loci)] = decode(seqs, k)
        f = counter.evaluate(problem, variants)
        j = int(np.argmax(f))
        # incumbent keeps its block on ties
        if f[j] > fitness:
            current, fitness = variants[j], float(f[j])
    return EvaluatedGenome(Genome.from_bits(current), fitness)


def run_bbm(
    problem: ProblemInstance, cfg: BbmConfig, rng: RandomSource, counter: EvalCounter | None = None
) -> BbmReport:
    counter = counter if counter is not None else EvalCounter()
    start_count = counter.count
    pop = random_population(cfg.n, problem.length, rng, problem, counter)
    evaluations_model = counter.count - start_count

    selected = tournament_select(pop, cfg.selection, rng)
    model = greedy_search(selected.bits, k_max=cfg.k_max)
    best = bbwise_hillclimb(pop.best(), model.partition, problem, counter)
    return BbmReport(
        evaluations_model=evaluations_model,
        evaluations_mutation=counter.count - start_count - evaluations_model,
        best=best,
        correct_bbs=correct_bbs(problem, best.genome),
        learned_partition=model.partition,
        model=model,
    )


def mutation_cost(partition: Partition) -> int:
    """Evaluations spent by one hillclimbing sweep over ``partition``."""
    return sum((1 << k) - 1 for k in partition.sizes)


def predict_bbm_scaling(m: int, k: int) -> tuple[float, float]:
    """Lower and upper evaluation bounds, 2^k m^1.05 and 2^k m^2.1."""
    if m < 1:
        raise ConfigurationError(f"need m >= 1, got {m}")
    return 2.0**k * m**1.05, 2.0**k * m**2.1


def predict_bbm_central(m: int, k: int) -> float:
    """Central estimate 2^k m^1.5 between the two bounds."""
    if m < 1:
        raise ConfigurationError(f"need m >= 1, got {m}")
    return 2.0**k * m**1.5


def speedup(nfe_ecga: float, nfe_bbm: float) -> float:
    if nfe_bbm <= 0:
        raise ContractViolation("mutation evaluation count must be positive")
    return nfe_ecga / nfe_bbm
