"""Genomes, populations, evaluation counting and seeded randomness.

A :class:`Genome` is an immutable packed bit string (index 0 is the leftmost
gene). A :class:`Population` keeps its members unpacked as a read-only
``(n, length)`` uint8 matrix next to a fitness vector, because every consumer
(selection, model building, sampling) works column-wise over the whole
population.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Iterator, Sequence

import numpy as np

from ecgamut.errors import ConfigurationError, ContractViolation

if TYPE_CHECKING:
    from ecgamut.problems import ProblemInstance

RandomSource = np.random.Generator


def make_rng(seed: int) -> RandomSource:
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))


def derive_rng(master_seed: int, *key: int) -> RandomSource:
    """Child generator for ``key`` under ``master_seed``.

    The stream depends only on ``(master_seed, key)``, never on how many other
    children were derived before, so serial and parallel sweeps agree.
    """
    ss = np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class Genome:
    packed: bytes
    length: int

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray | str) -> Genome:
        if isinstance(bits, str):
            bits = [int(c) for c in bits]
        arr = np.asarray(bits)
        if arr.ndim != 1:
            raise ConfigurationError("genome bits must be one-dimensional")
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise ConfigurationError("alleles must be 0 or 1")
        arr = arr.astype(np.uint8)
        return cls(np.packbits(arr).tobytes(), int(arr.size))

    @property
    def bits(self) -> np.ndarray:
        raw = np.frombuffer(self.packed, dtype=np.uint8)
        out = np.unpackbits(raw, count=self.length)
        out.flags.writeable = False
        return out

    def complement(self) -> Genome:
        return Genome.from_bits(1 - self.bits)

    def __len__(self) -> int:
        return self.length

    def __str__(self) -> str:
        return "".join(map(str, self.bits.tolist()))


@dataclass(frozen=True)
class EvaluatedGenome:
    genome: Genome
    fitness: float


class EvalCounter:
    """Counts fitness-function invocations; one per genome evaluated."""

    def __init__(self) -> None:
        self.count = 0

    def evaluate(self, problem: ProblemInstance, bits: np.ndarray) -> np.ndarray:
        bits = np.atleast_2d(bits)
        fitness = problem.evaluate_batch(bits)
        self.count += bits.shape[0]
        return fitness

    def __repr__(self) -> str:
        return f"EvalCounter(count={self.count})"


@dataclass(frozen=True)
class Population:
    bits: np.ndarray
    fitness: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        fitness = np.ascontiguousarray(self.fitness, dtype=np.float64)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ConfigurationError(f"population needs shape (n>=1, length>=1), got {bits.shape}")
        if fitness.shape != (bits.shape[0],):
            raise ConfigurationError("one fitness value per member required")
        bits.flags.writeable = False
        fitness.flags.writeable = False
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "fitness", fitness)

    @property
    def size(self) -> int:
        return self.bits.shape[0]

    @property
    def length(self) -> int:
        return self.bits.shape[1]

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, i: int) -> EvaluatedGenome:
        return EvaluatedGenome(Genome.from_bits(self.bits[i]), float(self.fitness[i]))

    def __iter__(self) -> Iterator[EvaluatedGenome]:
        return (self[i] for i in range(self.size))

    def take(self, idx: np.ndarray) -> Population:
        return Population(self.bits[idx], self.fitness[idx])

    def best_index(self) -> int:
        """Index of the fittest member (first one on ties)."""
        return int(np.argmax(self.fitness))

    def best(self) -> EvaluatedGenome:
        return self[self.best_index()]

    def is_converged(self) -> bool:
        return bool(np.all(self.fitness == self.fitness[0]))


def evaluate_bits(bits: np.ndarray, problem: ProblemInstance, counter: EvalCounter) -> Population:
    return Population(bits, counter.evaluate(problem, bits))


def random_population(
    n: int, length: int, rng: RandomSource, problem: ProblemInstance, counter: EvalCounter
) -> Population:
    if n < 1 or length < 1:
        raise ConfigurationError(f"population size and length must be >= 1 (n={n}, length={length})")
    bits = rng.integers(0, 2, size=(n, length), dtype=np.uint8)
    return evaluate_bits(bits, problem, counter)


def unitation(genome: Genome | np.ndarray | Sequence[int], loci: Iterable[int]) -> int:
    bits = genome.bits if isinstance(genome, Genome) else np.asarray(genome)
    loci = list(loci)
    if len(set(loci)) != len(loci):
        raise ContractViolation("loci must be distinct")
    for i in loci:
        if not 0 <= i < bits.shape[-1]:
            raise ContractViolation(f"locus {i} out of range for length {bits.shape[-1]}")
    return int(bits[loci].sum())
