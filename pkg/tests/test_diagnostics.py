import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mwpt.diagnostics import (
    autocorr,
    cumulant_decay_profile,
    cumulants,
    estimate_spectrum,
    filter_convergence_profile,
    gaussianity_score,
    lagged_cumulants,
    map_realizations,
    node_report,
    pooled_autocorr,
    whiteness_score,
)
from mwpt.errors import MWPTError
from mwpt.filter_bank import builtin_bank
from mwpt.path_algebra import NodeIndex, PathSpec, band, gray_permute
from mwpt.synth import SpectrumSpec, band_average, gaussian_realization
from mwpt.wpt import decompose, decompose_shannon

RC = SpectrumSpec.preset("raised-cosine")
WHITE = SpectrumSpec.preset("white")
ONES = PathSpec(2, (), (1,))


def rng(seed):
    return np.random.default_rng(seed)


# --- autocorrelation --------------------------------------------------------


def test_alternating_and_constant():
    a = autocorr(np.tile([1.0, -1.0], 32), 4)
    assert a.values[1] == pytest.approx(-a.values[0])
    c = autocorr(np.full(64, 3.0), 4)
    assert np.allclose(c.values, 9.0)


def test_white_gaussian_calibration():
    K = 2**16
    a = autocorr(rng(0).standard_normal(K), 32)
    assert 0.98 <= a.values[0] <= 1.02
    assert np.max(np.abs(a.values[1:])) < 4 / math.sqrt(K)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(16, 80), elements=st.floats(-10, 10)))
def test_autocorr_matches_direct_sum(x):
    L = x.size // 8
    a = autocorr(x, L)
    direct = [np.mean(x * np.roll(x, -k)) for k in range(L + 1)]
    assert np.allclose(a.values, direct, atol=1e-9)
    assert np.allclose(autocorr(-x, L).values, a.values, atol=1e-9)
    assert np.all(np.abs(a.values) <= a.values[0] + 1e-9)


def test_lag_window_too_long():
    with pytest.raises(MWPTError):
        autocorr(np.ones(63), 8)


def test_pooled_standard_error():
    seqs = [rng(i).standard_normal(1024) for i in range(16)]
    pool = pooled_autocorr(seqs, 4)
    rows = np.array([autocorr(s, 4).values for s in seqs])
    assert np.allclose(pool.mean, rows.mean(axis=0))
    assert np.allclose(pool.stderr, rows.std(axis=0, ddof=1) / 4)


# --- cumulants --------------------------------------------------------------


def test_gaussian_cumulants_vanish():
    K = 2**16
    est = cumulants(rng(1).standard_normal(K))
    assert abs(est.skewness) < 4 * math.sqrt(6 / K)
    assert abs(est.excess_kurtosis) < 4 * math.sqrt(24 / K)


@pytest.mark.parametrize("kind,kurt", [("uniform", -1.2), ("two-point", -2.0)])
def test_known_kurtosis(kind, kurt):
    g = rng(2)
    x = g.uniform(-1, 1, 2**16) if kind == "uniform" else g.choice([-1.0, 1.0], 2**16)
    assert cumulants(x).excess_kurtosis == pytest.approx(kurt, abs=0.03)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 100.0))
def test_cumulant_symmetries(seed, scale):
    x = rng(seed).exponential(size=2048)
    a, b = cumulants(x), cumulants(-scale * x)
    assert b.k3 == pytest.approx(-(scale**3) * a.k3, rel=1e-9)
    assert b.k2 == pytest.approx(scale**2 * a.k2, rel=1e-9)
    assert b.k4 == pytest.approx(scale**4 * a.k4, rel=1e-9)
    assert b.excess_kurtosis == pytest.approx(a.excess_kurtosis, rel=1e-9)


def test_lagged_cumulants_at_zero_lag():
    x = rng(3).exponential(size=4096)
    est, lag = cumulants(x), lagged_cumulants(x, 2)
    assert lag["c3"][(0, 0)] == pytest.approx(est.k3, rel=1e-12)
    assert lag["c4"][(0, 0, 0)] == pytest.approx(est.k4, rel=1e-12)
    assert len(lag["c3"]) == 6 and len(lag["c4"]) == 10


@pytest.mark.parametrize("x", [np.ones(2048), np.zeros(4096), np.arange(100.0)])
def test_degenerate_or_short_input(x):
    with pytest.raises(MWPTError):
        cumulants(x)


# --- scores -----------------------------------------------------------------


def test_whiteness_scores():
    K = 2**14
    assert whiteness_score(autocorr(rng(4).standard_normal(K), 32)).passed
    alt = whiteness_score(autocorr(np.tile([1.0, -1.0], 512), 32))
    assert alt.max_normalized_lag == pytest.approx(1.0) and not alt.passed
    colored = gaussian_realization(RC, K, seed=5).samples
    assert not whiteness_score(autocorr(colored, 32)).passed


def test_portmanteau_statistic():
    a = autocorr(rng(6).standard_normal(4096), 8)
    rho = a.values[1:] / a.values[0]
    assert whiteness_score(a).portmanteau == pytest.approx(4096 * np.sum(rho**2))


def test_gaussianity_scores():
    K = 2**14
    assert gaussianity_score(rng(7).standard_normal(K)).passed
    u = gaussianity_score(rng(8).uniform(-1, 1, K))
    assert not u.passed and u.kurt_z == pytest.approx(-1.2 / math.sqrt(24 / K), rel=0.05)
    assert not gaussianity_score(rng(9).choice([-1.0, 1.0], K)).passed


# --- node reports -----------------------------------------------------------


def test_node_report_band_and_white_input():
    x = rng(10).standard_normal(2**14)
    tree = decompose(x, builtin_bank("db4"), 3)
    for n in range(8):
        rep = node_report(tree, 3, n)
        p = gray_permute(NodeIndex.from_int(2, 3, n)).n
        assert rep.band == band(3, p, 2)
        assert rep.variance == pytest.approx(1.0, abs=4 * math.sqrt(2 / 2048))
        assert rep.whiteness.passed


def test_node_report_against_band_average():
    x = gaussian_realization(RC, 2**18, seed=11).samples
    tree = decompose_shannon(x, 2, 6, "single-path", ONES)
    rep = node_report(tree, 6, 63, spec=RC)
    exact = band_average(RC, 6, rep.p)
    assert rep.theory["band_average"] == exact
    assert abs(rep.variance - exact) <= 3 * exact * math.sqrt(2 / 4096)
    row = rep.to_row()
    assert row["G(n)"] == rep.p and row["theoretical_variance"] == exact


def test_node_report_absent_node():
    tree = decompose(np.zeros(64), builtin_bank("haar"), 1)
    with pytest.raises(MWPTError):
        node_report(tree, 2, 0)


# --- spectrum estimator -----------------------------------------------------


def test_white_spectrum_is_flat():
    trees = [decompose_shannon(gaussian_realization(WHITE, 2**14, 12, i).samples, 2, 4)
             for i in range(8)]
    est = estimate_spectrum(trees, 4)
    assert np.all(np.abs(est.values - 1) < 5 * est.stderr + 1e-12)


@pytest.mark.parametrize("M,j", [(2, 3), (3, 2)])
def test_tone_gives_single_hot_band(M, j):
    K = 8 * M**j
    for p in range(M**j):
        x = np.cos(band(j, p, M).midpoint * np.arange(K))
        est = estimate_spectrum(decompose_shannon(x, M, j), j)
        assert int(np.argmax(est.values)) == p
        assert est.values[p] / est.values.sum() > 0.999


def test_total_power_identity():
    x = gaussian_realization(RC, 2**12, seed=13).samples
    est = estimate_spectrum(decompose_shannon(x, 2, 5), 5)
    assert est.total_power() == pytest.approx(math.pi * np.mean(x**2), rel=1e-10)
    assert est(0.0) == est.values[0] and est(-math.pi) == est.values[-1]


def test_spectrum_needs_full_level():
    tree = decompose_shannon(np.ones(64), 2, 3, "single-path", ONES)
    with pytest.raises(MWPTError):
        estimate_spectrum(tree, 3)


# --- Monte Carlo drivers ----------------------------------------------------


def test_map_realizations_order_is_fixed():
    assert map_realizations(lambda i: i * i, 20, threads=4) == [i * i for i in range(20)]


def test_profile_independent_of_threads():
    args = (ONES, RC, "uniform", [2, 3], 4, 2**13, 14)
    a = cumulant_decay_profile(*args, threads=1)
    b = cumulant_decay_profile(*args, threads=3)
    assert np.array_equal(a.excess_kurtosis, b.excess_kurtosis)


def test_gaussian_profile_is_near_zero():
    prof = cumulant_decay_profile(ONES, RC, "gaussian", [1, 2, 3], 8, 2**14, 15)
    for row in prof.rows():
        assert abs(row["pooled_excess_kurtosis"]) < 4 * math.sqrt(24 / (2**14 / 2 ** row["j"]) / 8)


def test_two_point_starts_further_from_gaussian():
    kw = dict(j_range=[1], R=4, K=2**14, seed=16)
    uni = cumulant_decay_profile(ONES, RC, "uniform", **kw).rows()[0]
    two = cumulant_decay_profile(ONES, RC, "two-point", **kw).rows()[0]
    assert abs(two["pooled_excess_kurtosis"]) > abs(uni["pooled_excess_kurtosis"])


def test_white_input_has_no_filter_dependence():
    out = filter_convergence_profile(WHITE, ONES, 3, [1, 4], R=8, K=2**12, seed=17)
    for row in out["rows"]:
        assert row["sup_distance"] < 5 * row["max_stderr"]
