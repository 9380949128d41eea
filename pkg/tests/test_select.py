import math
from dataclasses import replace

import numpy as np
import pytest

import tvreg
from tvreg import (
    BandwidthPlan,
    CvPlan,
    Dataset,
    Design,
    FoldTooSmall,
    GeneratorSpec,
    ModelKind,
    Region,
    ZeroIQR,
    cross_validation_curve,
    default_bandwidths,
    gic,
    model_df,
    select_tau_cv,
    simulate,
    tau_schedule,
)
from tvreg.select import LOG_RSS_FLOOR, _choose

REGION = Region([[-2.0, 2.0]], (0.2, 0.8))


def linspace_dataset(n, iqr, seed=0):
    """Predictors on a uniform grid so the interquartile range is exact."""
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 2.0 * iqr, n)
    y = 0.5 * x + 0.1 * rng.standard_normal(n)
    return Dataset(y, x)


def test_rule_of_thumb_treasury_sized():
    data = linspace_dataset(5256, 3.419)
    plan = default_bandwidths(data)
    assert plan.c_b_time_varying == 0.5
    assert plan.c_h_time_varying == pytest.approx(3.419, abs=1e-12)
    assert plan.b_time_varying == pytest.approx(0.120, abs=5e-4)
    assert plan.h_time_varying == pytest.approx(0.820, abs=5e-4)
    assert plan.h_time_constant == pytest.approx(0.616, abs=5e-4)
    assert plan.b_coefficient == pytest.approx(0.090, abs=5e-4)
    # the rates are exact functions of (constants, n, d)
    assert plan.b_time_varying == 0.5 * 5256 ** (-1.0 / 6.0)
    assert plan.h_time_constant == plan.c_h_time_constant * 5256 ** (-1.0 / 5.0)


def test_rule_of_thumb_simple_rate():
    data = linspace_dataset(1024, 1.0)
    plan = default_bandwidths(data)
    assert plan.h_time_constant == pytest.approx(0.25, abs=1e-12)


def test_bandwidths_preconditions():
    with pytest.raises(ValueError):
        default_bandwidths(linspace_dataset(19, 1.0))
    rng = np.random.default_rng(0)
    constant = Dataset(rng.standard_normal(50), np.ones(50))
    with pytest.raises(ZeroIQR) as info:
        default_bandwidths(constant)
    assert info.value.coordinate == 0


def test_model_df_treasury_table_values():
    plan = BandwidthPlan(
        n=5256, d=1, iqr=[3.419], c_b_time_varying=0.5,
        c_h_time_varying=3.419, c_h_time_constant=3.419, c_b_coefficient=0.5,
    )
    expected = {
        ModelKind.TIME_VARYING: 69.54,
        ModelKind.TIME_CONSTANT: 11.10,
        ModelKind.VARYING_COEFFICIENT: 22.19,
        ModelKind.LINEAR: 2.00,
    }
    for kind, value in expected.items():
        assert model_df(kind, plan, d_eff=2) == pytest.approx(value, rel=5e-3)


def test_model_df_limits_and_unit_case():
    plan = BandwidthPlan(n=1000, d=1, iqr=[1.0], c_b_coefficient=1e12)
    assert model_df(ModelKind.VARYING_COEFFICIENT, plan, 2) < 1e-9
    # h_II = 2 * 32^{-1/5} = 1 and 2*iqr = 1 give a unit effective count
    plan2 = BandwidthPlan(n=32, d=1, iqr=[0.5], c_h_time_constant=2.0)
    assert model_df(ModelKind.TIME_CONSTANT, plan2, 1) == pytest.approx(1.0, abs=1e-12)


def test_df_ordering_for_rule_of_thumb_plans():
    rng = np.random.default_rng(11)
    for n in (30, 100, 1000, 10**6):
        for _ in range(5):
            iqr = float(rng.uniform(0.05, 20.0))
            c_h = iqr
            plan = BandwidthPlan(
                n=n, d=1, iqr=[iqr], c_h_time_varying=c_h, c_h_time_constant=c_h
            )
            for d_eff in (1, 2):
                dfs = {kind: model_df(kind, plan, d_eff) for kind in ModelKind}
                low = dfs[ModelKind.LINEAR]
                mid_min = min(dfs[ModelKind.TIME_CONSTANT], dfs[ModelKind.VARYING_COEFFICIENT])
                mid_max = max(dfs[ModelKind.TIME_CONSTANT], dfs[ModelKind.VARYING_COEFFICIENT])
                assert low < mid_min <= mid_max < dfs[ModelKind.TIME_VARYING]


def test_tau_schedule_values():
    n = math.e**2
    assert tau_schedule(n, 1, 1.0) == pytest.approx(2.0 * math.exp(-1.6), abs=1e-12)
    with pytest.raises(ValueError):
        tau_schedule(100, 1, 0.0)
    with pytest.raises(ValueError):
        tau_schedule(1, 1, 1.0)
    # the reported tuned penalty 0.00090 at n = 5256 corresponds to c near 0.1
    tau_unit = tau_schedule(5256, 1, 1.0)
    assert tau_unit == pytest.approx(0.00904, abs=2e-4)
    assert 0.09 < 0.00090 / tau_unit < 0.11


def test_gic_report_arithmetic(epan_kernel):
    data, _ = simulate(GeneratorSpec(design=Design.C, n=300, phi=1.0, seed=2))
    plan = default_bandwidths(data)
    tau = tau_schedule(data.n, data.d, 0.1)
    report = gic(data, REGION, plan, tau, epan_kernel)
    for kind, row in report.rows.items():
        assert row.gic - row.log_rss_over_n == pytest.approx(tau * row.df, rel=1e-12, abs=1e-15)
    assert report.chosen is _choose({k: r.gic for k, r in report.rows.items()})


def test_gic_affine_in_tau_limits(epan_kernel):
    data, _ = simulate(GeneratorSpec(design=Design.A, n=400, phi=1.0, seed=5))
    plan = default_bandwidths(data)
    tiny = gic(data, REGION, plan, 1e-12, epan_kernel)
    min_rss = min(tiny.rows, key=lambda k: (tiny.rows[k].log_rss_over_n, k.penalty_rank))
    assert tiny.chosen is min_rss
    huge = gic(data, REGION, plan, 1e6, epan_kernel)
    assert huge.chosen is ModelKind.LINEAR


def test_log_floor_and_tie_break(epan_kernel):
    rng = np.random.default_rng(6)
    data = Dataset(np.zeros(100), rng.standard_normal(100))
    plan = default_bandwidths(data)
    report = gic(data, REGION, plan, 0.0, epan_kernel)
    for row in report.rows.values():
        assert row.log_rss_over_n == LOG_RSS_FLOOR
        assert row.gic == LOG_RSS_FLOOR
    # exact four-way tie resolves to the simplest model
    assert report.chosen is ModelKind.LINEAR


def test_choose_tie_order():
    scores = {
        ModelKind.TIME_VARYING: 1.0,
        ModelKind.TIME_CONSTANT: 1.0,
        ModelKind.VARYING_COEFFICIENT: 1.0,
        ModelKind.LINEAR: 1.0,
    }
    assert _choose(scores) is ModelKind.LINEAR
    scores[ModelKind.LINEAR] = 2.0
    assert _choose(scores) is ModelKind.VARYING_COEFFICIENT


def test_noise_free_linear_selects_linear(epan_kernel):
    rng = np.random.default_rng(7)
    x = rng.standard_normal(240)
    data = Dataset(2.0 + 3.0 * x, x)
    plan = default_bandwidths(data)
    _, report = select_tau_cv(data, REGION, plan, CvPlan(), epan_kernel)
    assert report.chosen is ModelKind.LINEAR


def test_cv_single_point_grid(epan_kernel):
    data, _ = simulate(GeneratorSpec(design=Design.D, n=200, phi=1.0, seed=9))
    plan = default_bandwidths(data)
    c_hat, report = select_tau_cv(data, REGION, plan, CvPlan(c_grid=(0.3,)), epan_kernel)
    assert c_hat == 0.3
    assert report.tau == tau_schedule(data.n, data.d, 0.3)
    assert report.c == 0.3


def test_cv_piecewise_constant_in_c(epan_kernel):
    data, _ = simulate(GeneratorSpec(design=Design.D, n=200, phi=1.0, seed=10))
    plan = default_bandwidths(data)
    cv = CvPlan(c_grid=(0.1, 0.1000001, 1.6))
    totals, choices, _ = cross_validation_curve(data, REGION, plan, cv, epan_kernel)
    same = all(fold[0.1] is fold[0.1000001] for fold in choices)
    assert same
    assert totals[0] == totals[1]


def test_cv_fold_too_small(epan_kernel):
    rng = np.random.default_rng(12)
    data = Dataset(rng.standard_normal(21), rng.standard_normal(21))
    plan = BandwidthPlan(n=21, d=1, iqr=[1.0])
    with pytest.raises(FoldTooSmall):
        select_tau_cv(data, REGION, plan, CvPlan(k_folds=10), epan_kernel)


def test_cv_records_fallbacks(epan_kernel):
    # end blocks sit outside the training time range, so a selected
    # time-varying model must fall back there
    data, _ = simulate(GeneratorSpec(design=Design.A, n=250, phi=1.0, seed=3))
    plan = default_bandwidths(data)
    c_hat, report = select_tau_cv(data, REGION, plan, CvPlan(), epan_kernel)
    assert report.chosen is ModelKind.TIME_VARYING
    assert report.cv_fallbacks > 0


def test_selection_smoke_design_a_and_d(epan_kernel):
    for design, expected in ((Design.A, ModelKind.TIME_VARYING), (Design.D, ModelKind.LINEAR)):
        hits = 0
        for seed in range(10):
            data, _ = simulate(GeneratorSpec(design=design, n=250, phi=1.0, seed=100 + seed))
            plan = default_bandwidths(data)
            _, report = select_tau_cv(data, REGION, plan, CvPlan(), epan_kernel)
            hits += report.chosen is expected
        assert hits >= 8


def test_plan_with_sample_size_keeps_constants():
    plan = BandwidthPlan(n=1000, d=1, iqr=[2.0], c_h_time_varying=2.0, c_h_time_constant=2.0)
    smaller = plan.with_sample_size(900)
    assert smaller.n == 900
    assert smaller.c_h_time_varying == plan.c_h_time_varying
    assert smaller.b_time_varying == 0.5 * 900 ** (-1.0 / 6.0)


def test_cvplan_validation():
    with pytest.raises(ValueError):
        CvPlan(k_folds=1)
    with pytest.raises(ValueError):
        CvPlan(c_grid=())
    with pytest.raises(ValueError):
        CvPlan(c_grid=(0.1, -0.2))
    with pytest.raises(ValueError):
        CvPlan(fold_style="shuffled")
