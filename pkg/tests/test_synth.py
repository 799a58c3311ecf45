import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mwpt.diagnostics import cumulants
from mwpt.errors import MWPTError
from mwpt.synth import (
    SpectrumSpec,
    band_average,
    gaussian_realization,
    linear_process,
    realization_rng,
    shannon_autocorr,
    spectrum_on_bins,
)

RC = SpectrumSpec.preset("raised-cosine")


def circular_autocov(x, L):
    F = np.fft.rfft(x)
    return np.fft.irfft(F * np.conj(F), n=x.size)[: L + 1] / x.size


# --- spectra ----------------------------------------------------------------


def test_preset_values():
    assert RC(math.pi / 2) == pytest.approx(1.1)
    assert RC(0.0) == pytest.approx(0.1)
    assert RC(-math.pi / 2) == RC(math.pi / 2)
    assert RC(math.pi / 2 + 2 * math.pi) == pytest.approx(1.1)
    bp = SpectrumSpec.preset("bandpass", lo=1.0, hi=2.0, level=3.0, floor=0.5)
    assert bp(1.5) == 3.0 and bp(0.5) == 0.5 and bp(-1.5) == 3.0
    assert SpectrumSpec.preset("poly", coeffs=[1, 0, 2])(2.0) == pytest.approx(9.0)


def test_json_roundtrip():
    for spec in (RC, SpectrumSpec.tabulated([0, 1, math.pi], [1, 2, 0.5])):
        back = SpectrumSpec.from_json(json.dumps(spec.to_dict()))
        w = np.linspace(0, math.pi, 33)
        assert np.array_equal(back(w), spec(w))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "preset", "name": "pink"},
        {"kind": "preset", "name": "white", "params": {"level": -1}},
        {"kind": "preset", "name": "white", "params": {"slope": 1}},
        {"kind": "preset", "name": "bandpass", "params": {"lo": 2, "hi": 1}},
        {"kind": "preset", "name": "poly", "params": {"coeffs": [1, -1]}},
        {"kind": "tabulated", "grid": [0, 1], "values": [1, 1]},
        {"kind": "tabulated", "grid": [0, 2, 1, math.pi], "values": [1, 1, 1, 1]},
        {"kind": "tabulated", "grid": [0, math.pi], "values": [1, -1]},
    ],
)
def test_invalid_spectra(kwargs):
    with pytest.raises(MWPTError):
        SpectrumSpec.from_dict(kwargs)


# --- exact Shannon statistics ---------------------------------------------------


def test_poly_band_average_closed_form():
    spec = SpectrumSpec.preset("poly", coeffs=[0, 0, 1])
    assert band_average(spec, 1, 1) == pytest.approx(7 * math.pi**2 / 12, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 5), st.floats(0.1, 5.0), st.data())
def test_constant_spectrum_band_average(M, j, level, data):
    p = data.draw(st.integers(0, M**j - 1))
    spec = SpectrumSpec.preset("white", level=level)
    assert band_average(spec, j, p, M) == pytest.approx(level, rel=1e-12)
    assert shannon_autocorr(spec, j, p, 3, M) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("spec", [
    RC,
    SpectrumSpec.preset("bandpass"),
    SpectrumSpec.preset("poly", coeffs=[1, 0.5, -0.1]),
    SpectrumSpec.tabulated([0, 0.3, 2.0, math.pi], [2.0, 0.1, 1.5, 0.0]),
])
@pytest.mark.parametrize("M,j", [(2, 3), (3, 2)])
def test_band_averages_add_up_to_total_power(spec, M, j):
    total = sum(band_average(spec, j, p, M) for p in range(M**j)) * math.pi / M**j
    exact = band_average(spec, 0, 0, M) * math.pi
    assert total == pytest.approx(exact, rel=1e-9)


def test_shannon_autocorr_against_brute_force():
    # (M^j / pi) int_band gamma(w) cos(M^j k w) dw on a fine midpoint grid
    M, j, p = 2, 3, 5
    lo, hi = p * math.pi / M**j, (p + 1) * math.pi / M**j
    w = lo + (np.arange(200000) + 0.5) * (hi - lo) / 200000
    for k in range(5):
        brute = np.mean(RC(w) * np.cos(M**j * k * w))
        assert shannon_autocorr(RC, j, p, k, M) == pytest.approx(brute, abs=1e-9)


def test_autocorr_along_ones_path_whitens():
    # deep along the all-ones path the lag-0 value tends to gamma(2 pi / 3)
    p, j = 0, 0
    for j in range(1, 21):
        p = 2 * p + (1 if p % 2 == 0 else 0)
    v0 = shannon_autocorr(RC, j, p, 0)
    v1 = shannon_autocorr(RC, j, p, 1)
    assert v0 == pytest.approx(RC(2 * math.pi / 3), rel=1e-5)
    assert abs(v1) < 1e-5


def test_quadrature_is_warning_free():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for j in range(0, 8):
            for k in (0, 1, 7, 31):
                shannon_autocorr(RC, j, (2**j) // 3, k)


# --- realizations -----------------------------------------------------------


def test_white_variance():
    K = 2**14
    x = gaussian_realization(SpectrumSpec.preset("white"), K, seed=1).samples
    assert abs(np.var(x) - 1) < 4 * math.sqrt(2 / K)
    x2 = gaussian_realization(SpectrumSpec.preset("white", level=2.0), K, seed=1).samples
    assert np.allclose(x2, math.sqrt(2) * x)


def test_gaussian_autocov_matches_sampled_spectrum():
    K, R, L = 2**12, 64, 8
    target = np.fft.ifft(spectrum_on_bins(RC, K)).real[: L + 1]
    est = np.array([circular_autocov(gaussian_realization(RC, K, 3, i).samples, L)
                    for i in range(R)])
    se = est.std(axis=0, ddof=1) / math.sqrt(R)
    assert np.all(np.abs(est.mean(axis=0) - target) <= 4 * se)


@pytest.mark.parametrize("kind,kurt", [("uniform", -1.2), ("two-point", -2.0), ("laplace", 3.0)])
def test_noise_kurtosis_with_identity_gain(kind, kurt):
    x = linear_process(SpectrumSpec.preset("white"), kind, 2**16, seed=4).samples
    est = cumulants(x)
    assert est.excess_kurtosis == pytest.approx(kurt, abs=0.15)
    assert est.k2 == pytest.approx(1.0, abs=0.05)


def test_linear_process_periodogram_tracks_spectrum():
    K, R = 2**12, 64
    P = np.mean([np.abs(np.fft.fft(linear_process(RC, "uniform", K, 5, i).samples)) ** 2 / K
                 for i in range(R)], axis=0)
    g = spectrum_on_bins(RC, K)
    # 32-bin blocks: a single bin carries a 1/sqrt(R) relative error on its own
    P, g = P.reshape(-1, 32).mean(axis=1), g.reshape(-1, 32).mean(axis=1)
    assert np.linalg.norm(P - g) / np.linalg.norm(g) <= 0.05


def test_streams_are_reproducible_and_distinct():
    a = gaussian_realization(RC, 256, seed=9, index=0)
    b = gaussian_realization(RC, 256, seed=9, index=0)
    c = gaussian_realization(RC, 256, seed=9, index=1)
    assert np.array_equal(a.samples, b.samples)
    assert not np.allclose(a.samples, c.samples)
    assert a.provenance == {"spec": RC.label, "generator": "gaussian", "noise": "gaussian",
                            "K": 256, "seed": 9, "index": 0}
    assert realization_rng(9, 3).random() == realization_rng(9, 3).random()


def test_bad_lengths_and_noise():
    with pytest.raises(MWPTError):
        gaussian_realization(RC, 255, seed=0)
    with pytest.raises(MWPTError):
        linear_process(RC, "cauchy", 256, seed=0)
    with pytest.raises(MWPTError):
        band_average(RC, 2, 4)
