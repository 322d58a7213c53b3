"""eCGA and probabilistic-model-building BB-wise mutation on deceptive traps."""

from ecgamut.bbwise import (
    BbmConfig,
    BbmReport,
    bbwise_hillclimb,
    predict_bbm_central,
    predict_bbm_scaling,
    run_bbm,
    speedup,
)
from ecgamut.ecga import EcgaConfig, RunReport, predict_ecga_scaling, run_ecga, sample_offspring
from ecgamut.errors import ConfigurationError, ContractViolation
from ecgamut.genome import (
    EvalCounter,
    EvaluatedGenome,
    Genome,
    Population,
    derive_rng,
    make_rng,
    random_population,
    unitation,
)
from ecgamut.mpm import (
    MarginalProductModel,
    MdlScore,
    Partition,
    dump_model,
    fit_tables,
    greedy_search,
    model_complexity,
    partition_match,
    population_complexity,
)
from ecgamut.problems import (
    LinkageMap,
    ProblemInstance,
    SignalStats,
    correct_bbs,
    evaluate,
    make_onemax,
    make_trap,
    signal_stats,
)
from ecgamut.selection import SelectionConfig, tournament_select

__version__ = "0.1.0"
