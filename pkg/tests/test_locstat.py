import numpy as np
import pytest

import tvreg
from tvreg import (
    Dataset,
    Design,
    DivergentRecursion,
    GeneratorSpec,
    ModelKind,
    TvregError,
    difference_rates,
    gen_regressors_ma,
    ma_truncation_length,
    make_design,
    simulate,
    simulate_ar,
    simulate_diffusion,
)


def test_truncation_length_example():
    assert ma_truncation_length(1e-8) == 14


def test_truncation_length_is_smallest():
    for eps in (1e-7, 1e-8, 3.3e-10, 1e-12):
        length = ma_truncation_length(eps)
        assert 0.25**length < eps <= 0.25 ** (length - 1)


def test_regressor_slice_variances():
    # at t = 1 the MA coefficients are (1/4)^l, so the variance is the
    # geometric sum 16/15; at t = 1/2 every lagged term vanishes
    reps = 20000
    last = np.empty(reps)
    mid = np.empty(reps)
    for r in range(reps):
        x = gen_regressors_ma(10, seed=r)
        last[r] = x[-1]
        mid[r] = x[4]  # i = 5 of 10, t exactly 1/2
    assert np.var(last) == pytest.approx(16.0 / 15.0, rel=0.02)
    assert np.var(mid) == pytest.approx(1.0, rel=0.02)


def test_design_formula_values():
    a = make_design(Design.A)
    assert float(a.m(0.0, 0.25)) == pytest.approx(2.5, abs=1e-12)
    assert a.kind is ModelKind.TIME_VARYING
    d = make_design(Design.D)
    for t in (0.0, 0.3, 1.0):
        assert float(d.m(1.0, t)) == pytest.approx(5.0, abs=1e-12)
    assert d.kind is ModelKind.LINEAR
    b = make_design(Design.B, phi=3.7)
    assert float(b.sigma(0.0, 0.0)) == 0.0
    c = make_design(Design.C)
    assert c.kind is ModelKind.VARYING_COEFFICIENT


def test_simulate_deterministic():
    spec = GeneratorSpec(design=Design.B, n=300, phi=2.0, seed=123)
    d1, _ = simulate(spec)
    d2, _ = simulate(spec)
    assert np.array_equal(d1.y, d2.y) and np.array_equal(d1.x, d2.x)
    d3, _ = simulate(GeneratorSpec(design=Design.B, n=300, phi=2.0, seed=124))
    assert not np.array_equal(d1.y, d3.y)


def test_noise_stream_does_not_touch_regressors():
    a = simulate(GeneratorSpec(design=Design.A, n=200, phi=1.0, seed=5))[0]
    b = simulate(GeneratorSpec(design=Design.A, n=200, phi=2.0, seed=5))[0]
    assert np.array_equal(a.x, b.x)
    assert not np.array_equal(a.y, b.y)


def test_noise_free_linear_design_recovers_coefficients():
    data, _ = simulate(GeneratorSpec(design=Design.D, n=400, phi=1e-12, seed=3))
    design = np.column_stack([np.ones(data.n), data.x[:, 0]])
    theta, *_ = np.linalg.lstsq(design, data.y, rcond=None)
    assert np.allclose(theta, [2.0, 3.0], atol=1e-6)


def test_truncation_tail_bound():
    base = gen_regressors_ma(500, seed=11, eps=1e-8)
    fine = gen_regressors_ma(500, seed=11, eps=1e-12)
    assert np.max(np.abs(base - fine)) < 1e-4


def test_simulate_rejects_small_n_and_bad_eps():
    with pytest.raises(ValueError):
        GeneratorSpec(design=Design.A, n=5, phi=1.0, seed=0)
    with pytest.raises(ValueError):
        GeneratorSpec(design=Design.A, n=100, phi=1.0, seed=0, ma_truncation_eps=1e-3)
    with pytest.raises(ValueError):
        simulate(GeneratorSpec(design=Design.AR, n=100, phi=1.0, seed=0))


def test_snr_median_design_a_matches_reported_value():
    ratios = []
    for rep in range(200):
        data, truth = simulate(GeneratorSpec(design=Design.A, n=1000, phi=1.0, seed=7000 + rep))
        ratios.append(tvreg.snr(data, truth))
    assert np.median(ratios) == pytest.approx(4.29, abs=0.15)


def test_ar_degenerate_recursion_is_white_noise():
    n = 4000
    data = simulate_ar(n, lambda x, t: 0.0, lambda x, t: 1.0, d=1, seed=2)
    assert abs(np.mean(data.y)) < 4.0 / np.sqrt(n)


def _acf1(z):
    z = z - z.mean()
    return float(np.sum(z[1:] * z[:-1]) / np.sum(z * z))


def test_ar_stationary_lag_one_autocorrelation():
    data = simulate_ar(10000, lambda x, t: 0.5 * x, lambda x, t: 1.0, d=1, seed=8)
    assert _acf1(data.y) == pytest.approx(0.5, abs=0.05)


def test_ar_time_varying_coefficient_shows_in_local_autocorrelation():
    diffs = []
    for seed in range(5):
        data = simulate_ar(20000, lambda x, t: (0.2 + 0.3 * t) * x, lambda x, t: 1.0, d=1, seed=seed)
        quarter = data.n // 4
        diffs.append(_acf1(data.y[-quarter:]) - _acf1(data.y[:quarter]))
    assert 0.15 < np.mean(diffs) < 0.35


def test_ar_divergence_aborts():
    with pytest.raises(DivergentRecursion):
        simulate_ar(200, lambda x, t: 2.0 * x + 1.0, lambda x, t: 1.0, d=1, seed=0)


def test_ar_lagged_regressors_shape():
    data = simulate_ar(50, lambda x, t: 0.3 * x[0] + 0.1 * x[1], lambda x, t: 1.0, d=2, seed=4)
    assert data.x.shape == (50, 2)
    assert np.array_equal(data.x[1:, 0], data.y[:-1])


def test_difference_rates_constant_and_ramp():
    const = difference_rates(np.ones(12))
    assert np.all(const.y == 0.0) and np.all(const.x[:, 0] == 1.0)
    ramp = difference_rates(np.arange(12.0))
    assert np.all(ramp.y == 1.0)
    assert ramp.n == 11


def test_difference_rates_treasury_sized_series():
    rng = np.random.default_rng(0)
    levels = 5.0 + np.cumsum(0.01 * rng.standard_normal(5257))
    data = difference_rates(levels)
    assert data.n == 5256
    assert data.d == 1


def test_difference_rates_rejects_bad_input():
    with pytest.raises(TvregError, match="index 3"):
        difference_rates([1.0, 2.0, 3.0, np.nan, 5.0, 6, 7, 8, 9, 10, 11, 12])
    with pytest.raises(TvregError):
        difference_rates(np.ones(5))


def test_diffusion_generator_shapes_and_determinism():
    levels, data, truth = simulate_diffusion(300, phi=1.0, seed=21)
    assert levels.shape == (301,)
    assert data.n == 300
    assert truth.kind is ModelKind.VARYING_COEFFICIENT
    levels2, data2, _ = simulate_diffusion(300, phi=1.0, seed=21)
    assert np.array_equal(levels, levels2)
    assert np.array_equal(difference_rates(levels).y, data.y)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([1.0, np.inf]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        Dataset(np.ones(3), np.ones((4, 1)))
    ds = Dataset(np.ones(4), np.arange(4.0))
    assert ds.x.shape == (4, 1)
    assert np.allclose(ds.times, [0.25, 0.5, 0.75, 1.0])
