import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecgamut.bbwise import (
    BbmConfig,
    bbwise_hillclimb,
    mutation_cost,
    predict_bbm_central,
    predict_bbm_scaling,
    run_bbm,
    speedup,
)
from ecgamut.errors import ContractViolation
from ecgamut.genome import EvalCounter, EvaluatedGenome, Genome, make_rng
from ecgamut.mpm import Partition
from ecgamut.problems import evaluate, make_onemax, make_trap


def _start(problem, bits):
    g = Genome.from_bits(bits)
    return EvaluatedGenome(g, evaluate(problem, g))


def _single_bit_climb(problem, bits):
    # reference: fixed-order first-improvement single-bit flips, one pass
    bits = np.array(bits, dtype=np.uint8)
    f = evaluate(problem, bits)
    for i in range(len(bits)):
        trial = bits.copy()
        trial[i] ^= 1
        ft = evaluate(problem, trial)
        if ft > f:
            bits, f = trial, ft
    return bits, f


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(2, 4), st.data())
def test_singleton_partition_is_single_bit_climb(m, k, data):
    problem = make_trap(m, k, data.draw(st.sampled_from(["tight", "loose"])))
    bits = data.draw(st.lists(st.integers(0, 1), min_size=problem.length, max_size=problem.length))
    counter = EvalCounter()
    out = bbwise_hillclimb(_start(problem, bits), Partition.singletons(problem.length), problem, counter)
    ref_bits, ref_f = _single_bit_climb(problem, bits)
    assert counter.count == problem.length
    assert out.genome.bits.tolist() == ref_bits.tolist() and out.fitness == ref_f


def test_two_by_two_trace():
    problem = make_trap(2, 2, "tight")
    counter = EvalCounter()
    out = bbwise_hillclimb(_start(problem, "0000"), Partition.of([[0, 1], [2, 3]]), problem, counter)
    assert str(out.genome) == "1111" and out.fitness == 4 and counter.count == 6


def test_incumbent_wins_ties():
    problem = make_onemax(2)
    counter = EvalCounter()
    # constant-fitness view: pretend every variant ties by using an already optimal start
    out = bbwise_hillclimb(_start(problem, "11"), Partition.of([[0, 1]]), problem, counter)
    assert str(out.genome) == "11" and counter.count == 3


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(2, 3), st.data())
def test_true_partition_finds_optimum_in_any_order(m, k, data):
    problem = make_trap(m, k, data.draw(st.sampled_from(["tight", "loose"])))
    bits = data.draw(st.lists(st.integers(0, 1), min_size=problem.length, max_size=problem.length))
    order = data.draw(st.permutations(range(m)))
    truth = Partition.of(problem.linkage.partitions)
    out = bbwise_hillclimb(_start(problem, bits), truth, problem, EvalCounter(), order=order)
    assert out.fitness == problem.optimum
    assert str(out.genome) == "1" * problem.length


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(2, 4), st.data())
def test_never_worse_than_start(m, k, data):
    problem = make_trap(m, k, "loose")
    bits = data.draw(st.lists(st.integers(0, 1), min_size=problem.length, max_size=problem.length))
    # arbitrary partition: shuffle loci, then cut into random chunks
    loci = data.draw(st.permutations(range(problem.length)))
    cuts = sorted(data.draw(st.sets(st.integers(1, problem.length - 1), max_size=problem.length - 1)))
    groups = [loci[a:b] for a, b in zip([0] + cuts, cuts + [problem.length])]
    partition = Partition.of(groups)
    counter = EvalCounter()
    start = _start(problem, bits)
    out = bbwise_hillclimb(start, partition, problem, counter)
    assert out.fitness >= start.fitness
    assert counter.count == mutation_cost(partition)
    assert out.fitness == evaluate(problem, out.genome)


def test_singletons_from_zeros_stay_deceived():
    problem = make_trap(3, 4, "loose")
    out = bbwise_hillclimb(_start(problem, "0" * 12), Partition.singletons(12), problem, EvalCounter())
    assert str(out.genome) == "0" * 12
    assert out.fitness == 9


def test_order_must_be_permutation():
    problem = make_trap(2, 2)
    with pytest.raises(ContractViolation):
        bbwise_hillclimb(_start(problem, "0000"), Partition.singletons(4), problem, EvalCounter(), order=[0, 0, 1, 2])


@pytest.mark.parametrize("seed", range(6))
def test_run_bbm_accounting(seed, counting):
    problem = counting(make_trap(10, 4, "loose"))
    rep = run_bbm(problem, BbmConfig(n=1600), make_rng(seed))
    assert rep.evaluations_model == 1600
    assert rep.evaluations_mutation == mutation_cost(rep.learned_partition)
    assert problem.calls == rep.evaluations
    if rep.learned_partition == Partition.of(problem.linkage.partitions):
        assert rep.evaluations_mutation == 150
        assert rep.correct_bbs == 10


def test_run_bbm_deterministic():
    problem = make_trap(6, 4, "loose")
    a = run_bbm(problem, BbmConfig(n=800), make_rng(4))
    b = run_bbm(problem, BbmConfig(n=800), make_rng(4))
    assert a == b


def test_scaling_predictors():
    lo, hi = predict_bbm_scaling(7, 4)
    assert hi / lo == pytest.approx(7**1.05)
    assert predict_bbm_scaling(1, 5) == (32.0, 32.0)
    assert predict_bbm_central(20, 4) / predict_bbm_central(10, 4) == pytest.approx(2**1.5)
    assert lo <= predict_bbm_central(7, 4) <= hi


def test_speedup():
    assert speedup(300, 150) == 2.0
    assert speedup(77, 77) == 1.0
    with pytest.raises(ContractViolation):
        speedup(10, 0)
