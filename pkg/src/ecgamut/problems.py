"""Additively separable benchmark problems with known linkage.

The m k-trap uses the integer trap ``f(u) = k if u == k else k - 1 - u`` on
each building block, where ``u`` is the block's unitation. Loose coding
interleaves blocks with stride ``m`` so that block ``i`` owns loci
``i, i + m, ..., i + (k - 1) m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from ecgamut.errors import ConfigurationError
from ecgamut.genome import Genome


class Coding(str, Enum):
    TIGHT = "tight"
    LOOSE = "loose"


@dataclass(frozen=True)
class LinkageMap:
    partitions: tuple[tuple[int, ...], ...]
    coding: Coding

    @classmethod
    def build(cls, m: int, k: int, coding: Coding | str) -> LinkageMap:
        coding = Coding(coding)
        if coding is Coding.TIGHT:
            parts = tuple(tuple(range(i * k, i * k + k)) for i in range(m))
        else:
            parts = tuple(tuple(i + j * m for j in range(k)) for i in range(m))
        return cls(parts, coding)

    @property
    def m(self) -> int:
        return len(self.partitions)

    @property
    def k(self) -> int:
        return len(self.partitions[0])

    @property
    def length(self) -> int:
        return self.m * self.k

    @cached_property
    def loci(self) -> np.ndarray:
        """``(m, k)`` index matrix, one row per building block."""
        return np.array(self.partitions, dtype=np.intp)


@dataclass(frozen=True)
class SignalStats:
    sigma_bb: float
    d: float


@dataclass(frozen=True)
class ProblemInstance:
    linkage: LinkageMap
    kind: str
    table: tuple[float, ...]

    @property
    def m(self) -> int:
        return self.linkage.m

    @property
    def k(self) -> int:
        return self.linkage.k

    @property
    def length(self) -> int:
        return self.linkage.length

    @property
    def optimum(self) -> float:
        return self.m * max(self.table)

    @cached_property
    def _table(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.float64)

    def _check(self, bits: np.ndarray) -> None:
        if bits.shape[-1] != self.length:
            raise ConfigurationError(f"genome length {bits.shape[-1]} != problem length {self.length}")

    def block_unitation(self, bits: np.ndarray) -> np.ndarray:
        """Unitation of every block for every row; shape ``(n, m)``."""
        bits = np.atleast_2d(bits)
        self._check(bits)
        return bits[:, self.linkage.loci].sum(axis=2, dtype=np.intp)

    def evaluate_batch(self, bits: np.ndarray) -> np.ndarray:
        return self._table[self.block_unitation(bits)].sum(axis=1)


def make_trap(m: int, k: int, coding: Coding | str = Coding.LOOSE) -> ProblemInstance:
    if m < 1:
        raise ConfigurationError(f"need m >= 1, got {m}")
    if k < 2:
        raise ConfigurationError(f"trap needs k >= 2 for deception, got {k}")
    table = tuple(float(k if u == k else k - 1 - u) for u in range(k + 1))
    return ProblemInstance(LinkageMap.build(m, k, coding), "trap", table)


def make_onemax(length: int) -> ProblemInstance:
    """OneMax as ``length`` single-bit blocks, so correct blocks = ones."""
    if length < 1:
        raise ConfigurationError(f"need length >= 1, got {length}")
    return ProblemInstance(LinkageMap.build(length, 1, Coding.TIGHT), "onemax", (0.0, 1.0))


def make_problem(kind: str, m: int, k: int, coding: Coding | str = Coding.LOOSE) -> ProblemInstance:
    if kind == "trap":
        return make_trap(m, k, coding)
    if kind == "onemax":
        return make_onemax(m)
    raise ConfigurationError(f"unknown problem kind {kind!r}")


def _bits_of(genome: Genome | np.ndarray) -> np.ndarray:
    return genome.bits if isinstance(genome, Genome) else np.asarray(genome, dtype=np.uint8)


def evaluate(problem: ProblemInstance, genome: Genome | np.ndarray) -> float:
    """Uncounted fitness of one genome; algorithms go through ``EvalCounter``."""
    return float(problem.evaluate_batch(_bits_of(genome))[0])


def correct_bbs(problem: ProblemInstance, genome: Genome | np.ndarray) -> int:
    return int((problem.block_unitation(_bits_of(genome))[0] == problem.k).sum())


def signal_stats(problem: ProblemInstance) -> SignalStats:
    k = problem.k
    f = np.asarray(problem.table)
    w = np.array([math.comb(k, u) for u in range(k + 1)], dtype=np.float64) / 2.0**k
    mean = float(w @ f)
    var = float(w @ (f - mean) ** 2)
    return SignalStats(sigma_bb=math.sqrt(var), d=float(f[k] - f[0]))
