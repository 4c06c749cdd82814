import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import driftwatch as dw
from driftwatch.estimator import DegenerateWeightsError

G = dw.gaussian_kernel()


def make_series(values, times=None):
    values = np.asarray(values, dtype=float)
    times = np.arange(1.0, len(values) + 1.0) if times is None else np.asarray(times, float)
    return dw.TimeSeries(times=times, values=values)


def test_all_zero_series():
    cfg = dw.SmootherConfig(kernel=G, h=5.0)
    s = make_series(np.zeros(10))
    assert dw.nw_estimate(s, cfg, 10) == 0.0
    assert np.allclose(dw.nw_process(s, cfg), 0.0)


def test_constant_series():
    cfg = dw.SmootherConfig(kernel=G, h=3.0)
    s = make_series(np.full(8, 2.5))
    for n in (1, 4, 8):
        assert dw.nw_estimate(s, cfg, n) == pytest.approx(2.5)


def test_hand_case_epanechnikov():
    # weights K_2(-1) = K(-0.5)/2 and K_2(0) = K(0)/2; ratio = 11/7
    cfg = dw.SmootherConfig(kernel=dw.epanechnikov_kernel(), h=2.0)
    s = make_series([1.0, 2.0])
    k_half = 0.75 * (1 - 0.25)
    oracle = (k_half * 1.0 + 0.75 * 2.0) / (k_half + 0.75)
    assert dw.nw_estimate(s, cfg, 2) == pytest.approx(oracle)
    assert oracle == pytest.approx(11 / 7)


def test_process_matches_double_loop_oracle():
    rng = np.random.default_rng(5)
    y = rng.standard_normal(6)
    t = np.arange(1.0, 7.0)
    cfg = dw.SmootherConfig(kernel=G, h=2.5)
    got = dw.nw_process(make_series(y, t), cfg)
    for n in range(1, 7):
        num = sum(dw.eval_rescaled(G, 2.5, t[i] - t[n - 1]) * y[i] for i in range(n))
        den = sum(dw.eval_rescaled(G, 2.5, t[i] - t[n - 1]) for i in range(n))
        assert got[n - 1] == pytest.approx(num / den, rel=1e-12)


def test_process_end_matches_estimate():
    s = dw.generate(dw.SeriesSpec(N=30), 1)
    cfg = dw.SmootherConfig(kernel=G, h=10.0)
    assert dw.nw_process(s, cfg)[-1] == pytest.approx(dw.nw_estimate(s, cfg, 30), rel=1e-12)


def test_scaling_factors():
    k = G
    assert dw.scaled_statistic(3.14, dw.SmootherConfig(kernel=k, h=7, scaling="raw"), 100) == 3.14
    assert dw.scaled_statistic(
        1.0, dw.SmootherConfig(kernel=k, h=50, scaling="null_scale"), 100
    ) == pytest.approx(0.05)
    assert dw.scaled_statistic(
        1.0, dw.SmootherConfig(kernel=k, h=100, scaling="slow_alt_scale"), 100
    ) == pytest.approx(0.01)
    assert dw.scaled_statistic(
        1.0, dw.SmootherConfig(kernel=k, h=10, scaling="stationary_scale"), 100
    ) == pytest.approx(1.0)


def test_bad_scaling_rejected():
    with pytest.raises(ValueError):
        dw.SmootherConfig(kernel=G, h=1.0, scaling="bogus")


@settings(max_examples=25, deadline=None)
@given(
    delta=st.floats(min_value=-100, max_value=100),
    lam=st.floats(min_value=0.01, max_value=50),
)
def test_shift_and_scale_equivariance(delta, lam):
    rng = np.random.default_rng(11)
    y = rng.standard_normal(12)
    cfg = dw.SmootherConfig(kernel=G, h=4.0)
    base = dw.nw_estimate(make_series(y), cfg, 12)
    shifted = dw.nw_estimate(make_series(y + delta), cfg, 12)
    scaled = dw.nw_estimate(make_series(y * lam), cfg, 12)
    assert shifted == pytest.approx(base + delta, rel=1e-9, abs=1e-9)
    assert scaled == pytest.approx(base * lam, rel=1e-9, abs=1e-9)


def test_causality():
    rng = np.random.default_rng(3)
    y = rng.standard_normal(20)
    cfg = dw.SmootherConfig(kernel=G, h=6.0)
    at_8 = dw.nw_estimate(make_series(y), cfg, 8)
    y2 = y.copy()
    y2[8:] = 1e9
    assert dw.nw_estimate(make_series(y2), cfg, 8) == at_8


def test_degenerate_weights():
    # tabulated kernel vanishing at every needed argument
    k = dw.tabulated_kernel([-1.0, -0.5, 0.0, 0.5, 1.0], [0.0, 1.0, 0.0, 1.0, 0.0])
    cfg = dw.SmootherConfig(kernel=k, h=1.0)
    s = make_series([1.0, 2.0])
    with pytest.raises(DegenerateWeightsError):
        dw.nw_estimate(s, cfg, 2)


def test_rolling_uniform_design_matches_plain():
    cfg0 = dw.SmootherConfig(kernel=G, h=5.0)
    cfg1 = dw.SmootherConfig(kernel=G, h=5.0, design=dw.TimeDesign(gamma=1.0, mode="rolling"))
    s = dw.generate(dw.SeriesSpec(N=25), 17)
    assert np.allclose(dw.nw_process(s, cfg0), dw.nw_process(s, cfg1))


def test_fixed_uniform_design_matches_plain():
    td = dw.TimeDesign(gamma=1.0, mode="fixed")
    cfg0 = dw.SmootherConfig(kernel=G, h=5.0)
    cfg1 = dw.SmootherConfig(kernel=G, h=5.0, design=td)
    s = dw.generate(dw.SeriesSpec(N=25, design=td), 17)
    assert np.allclose(dw.nw_process(s, cfg0), dw.nw_process(s, cfg1))


def test_null_scaled_variance_matches_limit():
    # scaled statistic at s=1 (N=500, zeta=2) vs the limit variance
    N, h, reps = 500, 250, 2000
    cfg = dw.SmootherConfig(kernel=G, h=float(h), scaling="null_scale")
    i = np.arange(1, N + 1)
    w = G.evaluate((i - N) / h)
    den = w.sum()
    out = np.empty(reps)
    for r in range(reps):
        rng = np.random.default_rng(dw.substream(909, r))
        y = np.cumsum(rng.standard_normal(N))
        out[r] = (y @ w) / den
    out *= dw.scaling_factor(cfg, N)
    target = dw.sigma_k_sq(dw.LimitConfig(zeta=2.0, kernel=G), 1.0)
    assert abs(out.mean()) < 3 * out.std() / np.sqrt(reps)
    assert out.var() == pytest.approx(target, rel=0.10)
