"""Marginal product models, MDL scoring and greedy linkage search.

Bit-sequences inside a group are indexed with the group's smallest locus as
the most significant bit, so table index 0 is ``00..0`` and the last index is
``11..1`` (lexicographic order).

Combined MDL complexity of a model over ``n`` selected individuals::

    C_m = log2(n) * sum_i (2**k_i - 1)
    C_p = n * sum_i H(p_i) = sum_i (n log2 n - sum_j N_ij log2 N_ij)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from ecgamut.errors import ConfigurationError
from ecgamut.genome import Population
from ecgamut.problems import LinkageMap

# codes are int64; a group wider than this cannot be indexed
MAX_GROUP_BITS = 62
# widest joint table counted with a dense scratch array
_DENSE_BITS = 22
# float slack when comparing complexities (bits)
_TOL = 1e-9


@dataclass(frozen=True)
class Partition:
    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        groups = tuple(sorted((tuple(sorted(int(i) for i in g)) for g in self.groups), key=lambda g: g[0] if g else -1))
        if any(len(g) == 0 for g in groups):
            raise ConfigurationError("partition groups must be non-empty")
        flat = [i for g in groups for i in g]
        if sorted(flat) != list(range(len(flat))):
            raise ConfigurationError("partition must be a disjoint cover of 0..length-1")
        object.__setattr__(self, "groups", groups)

    @classmethod
    def singletons(cls, length: int) -> Partition:
        return cls(tuple((i,) for i in range(length)))

    @classmethod
    def of(cls, groups: Iterable[Iterable[int]]) -> Partition:
        return cls(tuple(tuple(g) for g in groups))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    @property
    def length(self) -> int:
        return sum(self.sizes)

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    def __str__(self) -> str:
        return "".join("[" + ",".join(map(str, g)) + "]" for g in self.groups)


@dataclass(frozen=True)
class MdlScore:
    c_m: float
    c_p: float
    combined: float


@dataclass(frozen=True)
class MarginalProductModel:
    partition: Partition
    counts: tuple[np.ndarray, ...]
    n: int

    @property
    def tables(self) -> tuple[np.ndarray, ...]:
        """Frequency vectors ``N_ij / n``, one per group."""
        return tuple(c / self.n for c in self.counts)

    def score(self) -> MdlScore:
        c_m = model_complexity(self.partition, self.n)
        c_p = population_complexity(self)
        return MdlScore(c_m, c_p, c_m + c_p)


def _bits(pop: Population | np.ndarray) -> np.ndarray:
    bits = pop.bits if isinstance(pop, Population) else np.asarray(pop, dtype=np.uint8)
    if bits.ndim != 2 or bits.shape[0] == 0:
        raise ConfigurationError("need a non-empty (n, length) population")
    return bits


def group_codes(bits: np.ndarray, loci: Sequence[int]) -> np.ndarray:
    """Table index of each row's bit-sequence over ``loci`` (first locus = MSB)."""
    k = len(loci)
    if k > MAX_GROUP_BITS:
        raise ConfigurationError(f"group of {k} bits is too wide to index")
    weights = np.left_shift(np.int64(1), np.arange(k - 1, -1, -1, dtype=np.int64))
    return bits[:, list(loci)].astype(np.int64) @ weights


def decode(codes: np.ndarray, k: int) -> np.ndarray:
    """Inverse of :func:`group_codes`: ``(len(codes), k)`` bit matrix."""
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(codes, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.uint8)


def _xlogx(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return c * np.log2(np.maximum(c, 1.0))


def fit_tables(partition: Partition, pop: Population | np.ndarray) -> MarginalProductModel:
    bits = _bits(pop)
    if bits.shape[1] != partition.length:
        raise ConfigurationError(f"partition covers {partition.length} loci, genomes have {bits.shape[1]}")
    counts = tuple(
        np.bincount(group_codes(bits, g), minlength=1 << len(g)).astype(np.int64) for g in partition.groups
    )
    return MarginalProductModel(partition, counts, bits.shape[0])


def model_complexity(partition: Partition | Sequence[int], n: int) -> float:
    if n < 2:
        raise ConfigurationError(f"model complexity needs n >= 2, got {n}")
    sizes = partition.sizes if isinstance(partition, Partition) else tuple(partition)
    return math.log2(n) * sum((1 << k) - 1 for k in sizes)


def population_complexity(model: MarginalProductModel) -> float:
    n = model.n
    nlogn = n * math.log2(n)
    return float(sum(nlogn - _xlogx(c).sum() for c in model.counts))


def _pair_xlogx_singletons(bits: np.ndarray) -> np.ndarray:
    """``sum N log2 N`` of the joint 2x2 table for every pair of loci."""
    n = bits.shape[0]
    xf = bits.astype(np.float64)
    n11 = xf.T @ xf
    n1 = np.diag(n11).copy()
    n10 = n1[:, None] - n11
    n01 = n1[None, :] - n11
    n00 = n - n1[:, None] - n1[None, :] + n11
    return _xlogx(n11) + _xlogx(n10) + _xlogx(n01) + _xlogx(n00)


@njit(cache=True)
def _joint_xlogx(ca, ka, codes, others, sizes, out):
    """Joint ``sum N log2 N`` of group ``a`` with each group in ``others``.

    ``codes`` is slot-major, one row of per-individual table indices per slot.
    """
    n = ca.shape[0]
    scratch = np.zeros(1 << (ka + sizes[others].max()), dtype=np.int64)
    for t in range(others.shape[0]):
        c = others[t]
        kb = sizes[c]
        cb = codes[c]
        for r in range(n):
            scratch[(ca[r] << kb) | cb[r]] += 1
        acc = 0.0
        for r in range(n):
            idx = (ca[r] << kb) | cb[r]
            v = scratch[idx]
            if v > 0:
                if v > 1:
                    acc += v * np.log2(v)
                scratch[idx] = 0
        out[t] = acc


def _pair_terms(codes, size, a, others, n, log_n, cap) -> np.ndarray:
    """Pair terms between slot ``a`` and ``others``; ``-inf`` marks hopeless merges.

    A merge lowers C_p by at most ``n * min(k_a, k_c)`` bits, so a pair whose
    C_m growth already exceeds that can never be adopted and is not counted.
    """
    ka = int(size[a])
    kc = size[others]
    growth = log_n * (np.exp2(ka + kc) - 2.0**ka - np.exp2(kc) + 1.0)
    feasible = (ka + kc <= cap) & (growth <= n * np.minimum(ka, kc))
    out = np.full(others.size, -np.inf)
    dense = feasible & (ka + kc <= _DENSE_BITS)
    if dense.any():
        fresh = np.empty(int(dense.sum()))
        _joint_xlogx(codes[a], ka, codes, others[dense], size, fresh)
        out[dense] = fresh
    for t in np.flatnonzero(feasible & ~dense):
        c = others[t]
        _, counts = np.unique((codes[a] << size[c]) | codes[c], return_counts=True)
        out[t] = _xlogx(counts).sum()
    return out


def greedy_search(pop: Population | np.ndarray, k_max: int | None = None) -> MarginalProductModel:
    """Greedy MDL search for the marginal product model of ``pop``.

    Starts from all-singleton groups. Each step scores every pairwise merge of
    the current groups and adopts the cheapest one if it lowers the combined
    complexity strictly; otherwise the search stops. Equal-scoring merges are
    resolved towards the pair with the smallest (min locus, min locus).

    Only the pair terms touching the newly merged group are recomputed after a
    merge, so a full search costs one ``length x length`` product plus one
    linear counting pass per (merged group, other group) pair.
    """
    bits = _bits(pop)
    n, length = bits.shape
    cap = MAX_GROUP_BITS if k_max is None else min(int(k_max), MAX_GROUP_BITS)
    if n < 2 or length == 1:
        return fit_tables(Partition.singletons(length), bits)

    log_n = math.log2(n)
    nlogn = n * log_n
    # state is indexed by slot = smallest locus of the group
    groups: list[list[int]] = [[i] for i in range(length)]
    size = np.ones(length, dtype=np.int64)
    active = np.ones(length, dtype=bool)
    codes = np.ascontiguousarray(bits.T, dtype=np.int64)
    ones = codes.sum(axis=1)
    self_xl = _xlogx(ones) + _xlogx(n - ones)
    pair_xl = _pair_xlogx_singletons(bits)
    upper = np.triu(np.ones((length, length), dtype=bool), k=1)

    while True:
        width = np.exp2(size.astype(np.float64))
        d_cm = log_n * (np.outer(width, width) - width[:, None] - width[None, :] + 1.0)
        d_cp = self_xl[:, None] + self_xl[None, :] - pair_xl - nlogn
        delta = d_cm + d_cp
        valid = upper & np.outer(active, active) & ((size[:, None] + size[None, :]) <= cap)
        delta[~valid] = np.inf
        best = delta.min()
        if not best < -_TOL:
            break
        # first row-major hit = smallest (min locus, min locus) among near-ties
        a, b = divmod(int(np.argmax(delta <= best + _TOL)), length)

        groups[a] = sorted(groups[a] + groups[b])
        groups[b] = []
        size[a] += size[b]
        active[b] = False
        self_xl[a] = pair_xl[a, b]
        codes[a] = group_codes(bits, groups[a])

        others = np.flatnonzero(active)
        others = others[others != a]
        if others.size:
            pair_xl[a, others] = pair_xl[others, a] = _pair_terms(codes, size, a, others, n, log_n, cap)

    partition = Partition(tuple(tuple(g) for g in groups if g))
    return fit_tables(partition, bits)


def partition_match(found: Partition, truth: LinkageMap | Partition) -> float:
    truth_groups = truth.partitions if isinstance(truth, LinkageMap) else truth.groups
    have = {tuple(sorted(g)) for g in found.groups}
    hits = sum(tuple(sorted(g)) in have for g in truth_groups)
    return hits / len(truth_groups)


def dump_model(model: MarginalProductModel) -> str:
    """One line per group: ``i,j,...<TAB>p_0 p_1 ... p_{2^k-1}``."""
    lines = []
    for g, table in zip(model.partition.groups, model.tables):
        lines.append(",".join(map(str, g)) + "\t" + " ".join(format(p, ".12g") for p in table))
    return "\n".join(lines) + "\n"
