"""Population sizing by bisection, multi-seed sweeps and scaling-law fits.

Every run draws its generator from ``derive_rng(master_seed, *key)`` with
``key = (algorithm code, m, k, purpose, run index)``; purpose 0 is a sizing
trial and 1 a measurement run. The run index does not depend on the
population size, so all bisection steps of a cell reuse the same seed set,
and worker count never changes any output.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ecgamut.bbwise import BbmConfig, run_bbm, speedup
from ecgamut.ecga import EcgaConfig, run_ecga
from ecgamut.errors import ConfigurationError
from ecgamut.genome import derive_rng
from ecgamut.problems import make_problem
from ecgamut.selection import SelectionConfig

ALGORITHMS = ("ecga", "bbm")
_ALGO_CODE = {"ecga": 0, "bbm": 1}
_BISECT, _MEASURE = 0, 1

SWEEP_FIELDS = ("algorithm", "m", "k", "n_star", "nfe_mean", "nfe_sd", "success_rate", "seeds")
FIT_FIELDS = ("quantity", "x_variable", "slope", "intercept", "r_squared")


@dataclass(frozen=True)
class Cell:
    """One (algorithm, problem) combination of a sweep."""

    algorithm: str
    m: int
    k: int
    kind: str = "trap"
    coding: str = "loose"
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    k_max: int | None = None
    max_generations: int | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        make_problem(self.kind, self.m, self.k, self.coding)

    @property
    def bb_count(self) -> int:
        return self.m

    @property
    def min_n(self) -> int:
        s = self.selection.s
        return 2 * s if self.algorithm == "ecga" else s


@dataclass(frozen=True)
class TrialResult:
    evaluations: int
    correct_bbs: int


def run_trial(cell: Cell, n: int, master_seed: int, purpose: int, index: int) -> TrialResult:
    problem = make_problem(cell.kind, cell.m, cell.k, cell.coding)
    rng = derive_rng(master_seed, _ALGO_CODE[cell.algorithm], cell.m, cell.k, purpose, index)
    if cell.algorithm == "ecga":
        cfg = EcgaConfig(n=n, selection=cell.selection, max_generations=cell.max_generations, k_max=cell.k_max)
        rep = run_ecga(problem, cfg, rng)
        return TrialResult(rep.evaluations, rep.correct_bbs)
    rep = run_bbm(problem, BbmConfig(n=n, selection=cell.selection, k_max=cell.k_max), rng)
    return TrialResult(rep.evaluations, rep.correct_bbs)


def _run_trial_args(args: tuple) -> TrialResult:
    return run_trial(*args)


class Runner:
    """Maps trials over a process pool; ``jobs=1`` runs in-process.

    Results come back in submission order either way.
    """

    def __init__(self, jobs: int | None = 1) -> None:
        self.jobs = jobs if jobs else (os.cpu_count() or 1)
        self._pool: ProcessPoolExecutor | None = None

    def map(self, fn: Callable, items: Sequence) -> list:
        if self.jobs <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        if self._pool is None:
            self._pool = ProcessPoolExecutor(max_workers=self.jobs)
        return list(self._pool.map(fn, items))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self) -> Runner:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# ---------------------------------------------------------------------------
# bisection


@dataclass(frozen=True)
class BisectionConfig:
    runs: int = 10
    n_start: int = 16
    tolerance: float = 0.1
    n_cap: int = 1 << 17
    multiple: int = 8
    rule: str = "mean"
    quantile: float = 0.9

    def __post_init__(self) -> None:
        if self.runs < 1 or self.n_start < 1 or self.multiple < 1:
            raise ConfigurationError("runs, n_start and multiple must be positive")
        if not 0 < self.tolerance < 1:
            raise ConfigurationError("tolerance must lie in (0, 1)")
        if self.rule not in ("mean", "quantile"):
            raise ConfigurationError(f"unknown success rule {self.rule!r}")

    def round_up(self, n: int) -> int:
        return -(-n // self.multiple) * self.multiple


@dataclass
class BisectionResult:
    n_star: int | None
    trials: list[tuple[int, bool]]

    @property
    def failed(self) -> bool:
        return self.n_star is None

    @property
    def largest_failure(self) -> int | None:
        bad = [n for n, ok in self.trials if not ok]
        return max(bad) if bad else None


def bisect(success: Callable[[int], bool], cfg: BisectionConfig) -> BisectionResult:
    """Smallest population size (on the ``cfg.multiple`` grid) passing ``success``.

    Doubles from ``n_start`` until the rule passes, then bisects between the
    last failure and the first success until ``(hi - lo) / hi <= tolerance``.
    Returns the upper end, which is always an observed success.
    """
    trials: list[tuple[int, bool]] = []

    def check(n: int) -> bool:
        ok = bool(success(n))
        trials.append((n, ok))
        return ok

    lo, hi = None, cfg.round_up(cfg.n_start)
    while not check(hi):
        lo = hi
        hi = cfg.round_up(2 * hi)
        if hi > cfg.n_cap:
            return BisectionResult(None, trials)
    if lo is None:
        return BisectionResult(hi, trials)

    while (hi - lo) / hi > cfg.tolerance:
        mid = (lo + hi) // (2 * cfg.multiple) * cfg.multiple
        if mid <= lo or mid >= hi:
            break
        if check(mid):
            hi = mid
        else:
            lo = mid
    return BisectionResult(hi, trials)


def success_rule(correct: Sequence[int], m: int, cfg: BisectionConfig) -> bool:
    """Mean correct blocks >= m - 1 (or the chosen quantile of runs reaching it)."""
    correct = np.asarray(correct, dtype=np.float64)
    if cfg.rule == "mean":
        return bool(correct.mean() >= m - 1)
    return bool(np.mean(correct >= m - 1) >= cfg.quantile)


def bisect_population(
    cell: Cell, cfg: BisectionConfig, master_seed: int, runner: Runner | None = None
) -> BisectionResult:
    runner = runner or Runner(1)
    cfg = _fit_to_cell(cfg, cell)

    def success(n: int) -> bool:
        items = [(cell, n, master_seed, _BISECT, i) for i in range(cfg.runs)]
        results = runner.map(_run_trial_args, items)
        return success_rule([r.correct_bbs for r in results], cell.bb_count, cfg)

    return bisect(success, cfg)


def _fit_to_cell(cfg: BisectionConfig, cell: Cell) -> BisectionConfig:
    s = cell.selection.s
    multiple = cfg.multiple if cell.selection.replacement else math.lcm(cfg.multiple, s)
    n_start = max(cfg.n_start, cell.min_n)
    if multiple == cfg.multiple and n_start == cfg.n_start:
        return cfg
    return BisectionConfig(**{**asdict(cfg), "multiple": multiple, "n_start": n_start})


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRecord:
    algorithm: str
    m: int
    k: int
    n_star: int | None
    nfe_mean: float
    nfe_sd: float
    success_rate: float
    seeds: int

    @property
    def sizing_failed(self) -> bool:
        return self.n_star is None


def measure(cell: Cell, n: int, seeds: int, master_seed: int, runner: Runner | None = None) -> list[TrialResult]:
    runner = runner or Runner(1)
    return runner.map(_run_trial_args, [(cell, n, master_seed, _MEASURE, i) for i in range(seeds)])


def sweep_cell(
    cell: Cell, seeds: int, master_seed: int, cfg: BisectionConfig, runner: Runner | None = None
) -> SweepRecord:
    runner = runner or Runner(1)
    sized = bisect_population(cell, cfg, master_seed, runner)
    if sized.failed:
        return SweepRecord(cell.algorithm, cell.m, cell.k, None, math.nan, math.nan, 0.0, seeds)
    results = measure(cell, sized.n_star, seeds, master_seed, runner)
    nfe = np.array([r.evaluations for r in results], dtype=np.float64)
    ok = np.array([r.correct_bbs >= cell.bb_count - 1 for r in results])
    sd = float(nfe.std(ddof=1)) if len(nfe) > 1 else 0.0
    return SweepRecord(cell.algorithm, cell.m, cell.k, sized.n_star, float(nfe.mean()), sd, float(ok.mean()), seeds)


def sweep(
    algorithm: str,
    m_list: Iterable[int],
    k: int,
    seeds: int,
    master_seed: int,
    cfg: BisectionConfig | None = None,
    *,
    kind: str = "trap",
    coding: str = "loose",
    selection: SelectionConfig | None = None,
    k_max: int | None = None,
    max_generations: int | None = None,
    runner: Runner | None = None,
) -> list[SweepRecord]:
    m_list = list(m_list)
    if not m_list:
        raise ConfigurationError("m_list must not be empty")
    cfg = cfg or BisectionConfig()
    selection = selection or SelectionConfig()
    records = []
    for m in m_list:
        cell = Cell(algorithm, m, k, kind, coding, selection, k_max, max_generations)
        records.append(sweep_cell(cell, seeds, master_seed, cfg, runner))
    return records


# ---------------------------------------------------------------------------
# fits and speedup


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float


def fit_linear(points: Sequence[tuple[float, float]]) -> FitResult:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ConfigurationError("need at least 3 points")
    x, y = pts[:, 0], pts[:, 1]
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(((y - (slope * x + intercept)) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    # constant y is fitted exactly by a flat line
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    if ss_tot == 0:
        slope, intercept = 0.0, float(y.mean())
    return FitResult(float(slope), float(intercept), min(r2, 1.0))


def fit_power_law(points: Sequence[tuple[float, float]]) -> FitResult:
    """Least-squares line through ``(ln x, ln y)``."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ConfigurationError("need at least 3 points")
    if np.any(pts <= 0):
        raise ConfigurationError("power-law fit needs strictly positive x and y")
    return fit_linear(np.log(pts))


X_VARIABLES: dict[str, Callable[[float], float]] = {
    "m": lambda m: m,
    "m_ln_m": lambda m: m * math.log(m),
    "m1.5_ln_m": lambda m: m**1.5 * math.log(m),
}


@dataclass(frozen=True)
class FitRow:
    quantity: str
    x_variable: str
    slope: float
    intercept: float
    r_squared: float


def fit_report(records: Sequence[SweepRecord]) -> list[FitRow]:
    """Log-log fits of n* and mean evaluations per (algorithm, k).

    eCGA n* is fitted against ``m ln m`` and nfe against ``m^1.5 ln m`` as well
    as raw ``m``; the mutation GA against raw ``m`` only.
    """
    plan = {
        "ecga": {"n_star": ("m_ln_m", "m"), "nfe": ("m1.5_ln_m", "m")},
        "bbm": {"n_star": ("m",), "nfe": ("m",)},
    }
    rows = []
    keys = sorted({(r.algorithm, r.k) for r in records}, key=lambda t: (ALGORITHMS.index(t[0]), t[1]))
    for algo, k in keys:
        cell = sorted((r for r in records if r.algorithm == algo and r.k == k and not r.sizing_failed), key=lambda r: r.m)
        if len(cell) < 3 or min(r.m for r in cell) < 2:
            continue
        for quantity, xs in plan[algo].items():
            ys = [r.n_star if quantity == "n_star" else r.nfe_mean for r in cell]
            for xv in xs:
                fit = fit_power_law([(X_VARIABLES[xv](r.m), y) for r, y in zip(cell, ys)])
                rows.append(FitRow(f"{algo}_{quantity}_k{k}", xv, fit.slope, fit.intercept, fit.r_squared))
    return rows


def speedup_table(ecga: Sequence[SweepRecord], bbm: Sequence[SweepRecord]) -> list[tuple[int, int, float]]:
    lookup = {(r.m, r.k): r for r in bbm}
    if sorted(lookup) != sorted((r.m, r.k) for r in ecga) or len(lookup) != len(bbm):
        raise ConfigurationError("eCGA and mutation sweeps must cover the same (m, k) cells")
    return [(r.m, r.k, speedup(r.nfe_mean, lookup[(r.m, r.k)].nfe_mean)) for r in ecga]


# ---------------------------------------------------------------------------
# CSV I/O


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(rows: Iterable[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def sweep_csv(records: Iterable[SweepRecord]) -> str:
    return _write(([getattr(r, f) for f in SWEEP_FIELDS] for r in records), SWEEP_FIELDS)


def fit_csv(rows: Iterable[FitRow]) -> str:
    return _write(([getattr(r, f) for f in FIT_FIELDS] for r in rows), FIT_FIELDS)


def speedup_csv(table: Iterable[tuple[int, int, float]]) -> str:
    return _write(table, ("m", "k", "eta"))


def read_sweep_csv(text: str) -> list[SweepRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SWEEP_FIELDS:
        raise ConfigurationError(f"sweep CSV header must be {','.join(SWEEP_FIELDS)}")
    out = []
    for row in reader:
        out.append(
            SweepRecord(
                algorithm=row["algorithm"],
                m=int(row["m"]),
                k=int(row["k"]),
                n_star=int(row["n_star"]) if row["n_star"] else None,
                nfe_mean=float(row["nfe_mean"]),
                nfe_sd=float(row["nfe_sd"]),
                success_rate=float(row["success_rate"]),
                seeds=int(row["seeds"]),
            )
        )
    return out


PLOT_TEMPLATE = '''\
"""Plot sweep results written by `ecgamut sweep`."""
import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv({sweep!r})
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for (algo, k), g in df.dropna(subset=["n_star"]).groupby(["algorithm", "k"]):
    g = g.sort_values("m")
    axes[0].loglog(g["m"], g["n_star"], "o-", label=f"{{algo}} k={{k}}")
    axes[1].errorbar(g["m"], g["nfe_mean"], yerr=g["nfe_sd"], fmt="o-", label=f"{{algo}} k={{k}}")
axes[1].set_xscale("log")
axes[1].set_yscale("log")
axes[0].set_xlabel("m")
axes[0].set_ylabel("population size n*")
axes[1].set_xlabel("m")
axes[1].set_ylabel("function evaluations")
for ax in axes:
    ax.legend()
fig.tight_layout()
fig.savefig({png!r})
'''


def plot_script(sweep_path: str) -> str:
    stem = os.path.splitext(sweep_path)[0]
    return PLOT_TEMPLATE.format(sweep=os.path.basename(sweep_path), png=os.path.basename(stem) + ".png")
