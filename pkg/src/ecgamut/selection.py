"""s-wise tournament selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ecgamut.errors import ConfigurationError
from ecgamut.genome import Population, RandomSource


@dataclass(frozen=True)
class SelectionConfig:
    s: int = 8
    replacement: bool = False

    def __post_init__(self) -> None:
        if self.s < 2:
            raise ConfigurationError(f"tournament size must be >= 2, got {self.s}")

    def check(self, n: int) -> None:
        if n < self.s:
            raise ConfigurationError(f"population size {n} smaller than tournament size {self.s}")
        if not self.replacement and n % self.s:
            raise ConfigurationError(
                f"tournament without replacement needs n to be a multiple of s (n={n}, s={self.s})"
            )


def _winners(fitness: np.ndarray, contestants: np.ndarray, rng: RandomSource) -> np.ndarray:
    # random key among tied maxima -> uniform tie-breaking
    f = fitness[contestants]
    is_max = f == f.max(axis=1, keepdims=True)
    keys = np.where(is_max, rng.random(contestants.shape), -1.0)
    return contestants[np.arange(len(contestants)), keys.argmax(axis=1)]


def tournament_indices(fitness: np.ndarray, cfg: SelectionConfig, rng: RandomSource) -> np.ndarray:
    n = len(fitness)
    cfg.check(n)
    if cfg.replacement:
        contestants = rng.integers(0, n, size=(n, cfg.s))
        return _winners(fitness, contestants, rng)
    out = []
    for _ in range(cfg.s):
        contestants = rng.permutation(n).reshape(-1, cfg.s)
        out.append(_winners(fitness, contestants, rng))
    return np.concatenate(out)


def tournament_select(pop: Population, cfg: SelectionConfig, rng: RandomSource) -> Population:
    """Selected population of the same size as ``pop``.

    Without replacement, ``s`` shuffled passes each split the population into
    ``n / s`` disjoint tournaments, so every member competes exactly ``s``
    times. With replacement, each of the ``n`` tournaments draws ``s``
    contestants independently.
    """
    return pop.take(tournament_indices(pop.fitness, cfg, rng))
