import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecgamut.errors import ConfigurationError
from ecgamut.harness import (
    BisectionConfig,
    Cell,
    FitRow,
    Runner,
    SweepRecord,
    bisect,
    bisect_population,
    fit_csv,
    fit_linear,
    fit_power_law,
    fit_report,
    plot_script,
    read_sweep_csv,
    run_trial,
    speedup_csv,
    speedup_table,
    success_rule,
    sweep,
    sweep_csv,
)


# -- bisection ---------------------------------------------------------------


def test_always_pass_returns_rounded_start():
    res = bisect(lambda n: True, BisectionConfig(n_start=13, multiple=8))
    assert res.n_star == 16 and res.trials == [(16, True)]


def test_threshold_oracle_trace():
    res = bisect(lambda n: n >= 104, BisectionConfig(n_start=16, multiple=8))
    assert [n for n, _ in res.trials] == [16, 32, 64, 128, 96, 112, 104]
    assert res.n_star == 104 and res.largest_failure == 96


def test_cap_reports_failure():
    res = bisect(lambda n: False, BisectionConfig(n_start=16, n_cap=100))
    assert res.failed and res.n_star is None
    assert [n for n, _ in res.trials] == [16, 32, 64]


@settings(max_examples=200, deadline=None)
@given(
    threshold=st.integers(1, 5000),
    n_start=st.integers(1, 200),
    multiple=st.sampled_from([1, 4, 8, 16]),
    tol=st.sampled_from([0.05, 0.1, 0.25]),
)
def test_bisection_invariants(threshold, n_start, multiple, tol):
    cfg = BisectionConfig(n_start=n_start, multiple=multiple, tolerance=tol, n_cap=1 << 20)
    res = bisect(lambda n: n >= threshold, cfg)
    outcome = dict(res.trials)
    assert res.n_star >= threshold and outcome[res.n_star]
    assert res.n_star % multiple == 0
    assert all(n % multiple == 0 for n, _ in res.trials)
    fails = [n for n, ok in res.trials if not ok]
    if fails:
        assert res.n_star > max(fails)
        assert (res.n_star - max(fails)) / res.n_star <= tol or res.n_star - max(fails) <= multiple


def test_bisection_with_noisy_rule_keeps_bracket():
    rng = np.random.default_rng(0)
    res = bisect(lambda n: rng.random() < min(1.0, n / 300), BisectionConfig(n_start=16))
    assert res.n_star > (res.largest_failure or 0)
    assert dict(res.trials)[res.n_star]


def test_success_rules():
    cfg = BisectionConfig()
    assert success_rule([9, 8, 10, 8], 10, cfg) is False
    assert success_rule([9, 9, 10, 8, 9, 10], 10, cfg) is True
    q = BisectionConfig(rule="quantile", quantile=0.75)
    assert success_rule([9, 9, 10, 8], 10, q) is True
    assert success_rule([9, 8, 10, 8], 10, q) is False


def test_bisection_config_validation():
    with pytest.raises(ConfigurationError):
        BisectionConfig(tolerance=0)
    with pytest.raises(ConfigurationError):
        BisectionConfig(rule="median")
    with pytest.raises(ConfigurationError):
        BisectionConfig(runs=0)


def test_population_bisection_respects_selection_grid():
    cell = Cell("bbm", 4, 3)
    res = bisect_population(cell, BisectionConfig(n_start=5, multiple=3), master_seed=1)
    assert all(n % 24 == 0 for n, _ in res.trials)


def test_sizing_runs_reproduce_rule_at_n_star():
    cell = Cell("bbm", 5, 4)
    cfg = BisectionConfig()
    res = bisect_population(cell, cfg, master_seed=3)
    correct = [run_trial(cell, res.n_star, 3, 0, i).correct_bbs for i in range(cfg.runs)]
    assert np.mean(correct) >= 4


# -- sweeps ------------------------------------------------------------------


def test_onemax_sweep_sanity():
    (rec,) = sweep("ecga", [5], 1, 20, master_seed=11, kind="onemax")
    assert rec.success_rate >= 0.9
    assert rec.n_star is not None and rec.nfe_mean >= rec.n_star


@pytest.fixture(scope="module")
def bbm_sweep():
    return sweep("bbm", [6, 3, 9], 4, 12, master_seed=5)


def test_sweep_records_structure(bbm_sweep):
    assert [r.m for r in bbm_sweep] == [6, 3, 9]
    for r in bbm_sweep:
        assert r.algorithm == "bbm" and r.k == 4 and r.seeds == 12
        assert r.n_star % 8 == 0
        assert 0.0 <= r.success_rate <= 1.0 and r.nfe_sd >= 0
        # every learned partition costs at least one evaluation per locus
        assert r.nfe_mean >= r.n_star + r.m * r.k


def test_sweep_deterministic_and_parallel_equivalent(bbm_sweep):
    again = sweep("bbm", [6, 3, 9], 4, 12, master_seed=5)
    with Runner(2) as runner:
        parallel = sweep("bbm", [6, 3, 9], 4, 12, master_seed=5, runner=runner)
    assert sweep_csv(again) == sweep_csv(bbm_sweep) == sweep_csv(parallel)


def test_sweep_rejects_empty_list():
    with pytest.raises(ConfigurationError):
        sweep("bbm", [], 4, 3, master_seed=0)


def test_sizing_failure_is_flagged():
    (rec,) = sweep("bbm", [8], 5, 4, master_seed=0, cfg=BisectionConfig(n_cap=64))
    assert rec.sizing_failed and rec.success_rate == 0.0 and math.isnan(rec.nfe_mean)
    assert read_sweep_csv(sweep_csv([rec]))[0].n_star is None


def test_csv_round_trip(bbm_sweep):
    text = sweep_csv(bbm_sweep)
    assert text.splitlines()[0] == "algorithm,m,k,n_star,nfe_mean,nfe_sd,success_rate,seeds"
    assert read_sweep_csv(text) == bbm_sweep
    with pytest.raises(ConfigurationError):
        read_sweep_csv("m,k\n1,2\n")


# -- fits --------------------------------------------------------------------


def test_exact_power_law():
    fit = fit_power_law([(x, x**1.5) for x in (2, 4, 8, 16)])
    assert fit.slope == pytest.approx(1.5, abs=1e-9) and fit.r_squared == pytest.approx(1.0)


def test_constant_power_law():
    fit = fit_power_law([(x, 7.0) for x in (2, 4, 8, 16)])
    assert fit.slope == 0.0 and fit.r_squared == 1.0


def test_noisy_power_law():
    rng = np.random.default_rng(2024)
    xs = np.array([5, 10, 15, 20, 25, 30], dtype=float)
    ys = 3 * xs**2.1 * (1 + 0.01 * rng.standard_normal(xs.size))
    fit = fit_power_law(list(zip(xs, ys)))
    assert 2.0 <= fit.slope <= 2.2 and fit.r_squared > 0.99


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0.1, 1e4), min_size=3, max_size=8, unique=True),
    st.lists(st.floats(0.1, 1e4), min_size=8, max_size=8),
    st.floats(1e-3, 1e3),
)
def test_power_law_scale_equivariance(xs, ys, c):
    pts = list(zip(xs, ys))
    a = fit_power_law(pts)
    b = fit_power_law([(x, c * y) for x, y in pts])
    assert b.slope == pytest.approx(a.slope, abs=1e-6)
    assert b.intercept == pytest.approx(a.intercept + math.log(c), abs=1e-6)
    assert 0.0 <= a.r_squared <= 1.0


def test_fit_errors():
    with pytest.raises(ConfigurationError):
        fit_power_law([(1, 1), (2, 2)])
    with pytest.raises(ConfigurationError):
        fit_power_law([(1, 1), (2, 0), (3, 3)])
    with pytest.raises(ConfigurationError):
        fit_linear([(1, 1)])


def _rec(algo, m, k, nfe, n_star=100):
    return SweepRecord(algo, m, k, n_star, float(nfe), 1.0, 1.0, 30)


def test_fit_report_rows():
    recs = [_rec("ecga", m, 4, 10 * m**1.5 * math.log(m), n_star=int(20 * m * math.log(m))) for m in (5, 10, 20)]
    recs += [_rec("bbm", m, 4, 4 * m**1.5) for m in (5, 10, 20)]
    rows = {(r.quantity, r.x_variable): r for r in fit_report(recs)}
    assert set(rows) == {
        ("ecga_n_star_k4", "m_ln_m"), ("ecga_n_star_k4", "m"),
        ("ecga_nfe_k4", "m1.5_ln_m"), ("ecga_nfe_k4", "m"),
        ("bbm_n_star_k4", "m"), ("bbm_nfe_k4", "m"),
    }
    assert rows[("ecga_nfe_k4", "m1.5_ln_m")].slope == pytest.approx(1.0, abs=1e-9)
    assert rows[("bbm_nfe_k4", "m")].slope == pytest.approx(1.5, abs=1e-9)
    assert fit_csv(rows.values()).splitlines()[0] == "quantity,x_variable,slope,intercept,r_squared"


def test_fit_report_skips_short_cells():
    assert fit_report([_rec("bbm", m, 4, m) for m in (5, 10)]) == []


# -- speedup -----------------------------------------------------------------


def test_speedup_identity_and_linearity():
    bbm = [_rec("bbm", m, 4, 50 * m) for m in (5, 10)]
    ecga = [_rec("ecga", m, 4, 50 * m) for m in (5, 10)]
    assert [eta for *_, eta in speedup_table(ecga, bbm)] == [1.0, 1.0]
    doubled = [_rec("ecga", m, 4, 100 * m) for m in (5, 10)]
    assert [eta for *_, eta in speedup_table(doubled, bbm)] == [2.0, 2.0]
    assert speedup_csv(speedup_table(doubled, bbm)) == "m,k,eta\n5,4,2.0\n10,4,2.0\n"


def test_speedup_rejects_mismatch():
    with pytest.raises(ConfigurationError):
        speedup_table([_rec("ecga", 5, 4, 10)], [_rec("bbm", 10, 4, 10)])


def test_plot_script_names_inputs():
    text = plot_script("out/sweep.csv")
    assert "'sweep.csv'" in text and "'sweep.png'" in text
    compile(text, "plot.py", "exec")
