import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vsgcc import analysis, params
from vsgcc.errors import InsufficientOscillation

T = np.arange(0, 1.0, 1e-4)


@settings(max_examples=30, deadline=None)
@given(st.floats(-20, 20), st.floats(20, 120))
def test_envelope_rate_recovers_exponent(sigma, f):
    y = 0.3 + np.exp(sigma * T) * np.sin(2 * np.pi * f * T)
    assert analysis.envelope_rate(T, y, baseline=0.3) == pytest.approx(sigma, abs=0.3)


def test_envelope_rate_needs_oscillation():
    with pytest.raises(InsufficientOscillation):
        analysis.envelope_rate(T, np.exp(-T))


def test_second_order_fit_recovers_pair():
    s, w = -16.7, 15.5
    y = 0.67 - np.exp(s * T) * (0.4 * np.cos(w * T) + 0.1 * np.sin(w * T))
    fit = analysis.fit_second_order(T, y, 0.0, 1.0)
    assert fit.poles[0] == pytest.approx(complex(s, w), rel=1e-6)
    assert fit.final == pytest.approx(0.67, rel=1e-8)


def test_second_order_fit_with_nearby_real_mode():
    s, w, r = -16.7, 15.5, -45.0
    y = 0.67 - np.exp(s * T) * 0.4 * np.cos(w * T) + 0.3 * np.exp(r * T)
    plain = analysis.fit_second_order(T, y, 0.0, 1.0)
    fit = analysis.fit_second_order(T, y, 0.0, 1.0, extra_real=1)
    assert fit.poles[0] == pytest.approx(complex(s, w), rel=1e-5)
    assert fit.real_poles[0] == pytest.approx(r, rel=1e-4)
    assert fit.rms_residual < plain.rms_residual


def test_step_metrics_of_known_second_order():
    zeta, wn = 0.5, 100.0
    wd = wn * np.sqrt(1 - zeta ** 2)
    t = np.arange(0, 0.3, 1e-5)
    y = 1 - np.exp(-zeta * wn * t) * (np.cos(wd * t) + zeta / np.sqrt(1 - zeta ** 2) * np.sin(wd * t))
    m = analysis.step_metrics(t, y, 0.0, initial=0.0, final=1.0)
    assert m.overshoot_pct == pytest.approx(100 * np.exp(-np.pi * zeta / np.sqrt(1 - zeta ** 2)), rel=1e-4)
    assert m.rise_10_90 < m.transition_10_95
    assert m.settle_2pct == pytest.approx(0.0783, abs=0.003)


def test_step_metrics_flat_trace_rejected():
    with pytest.raises(ValueError):
        analysis.step_metrics(T, np.ones_like(T), 0.5)


def test_mode_identify_frequency_and_damping():
    zeta, fd = 0.1, 30.0
    wd = 2 * np.pi * fd
    sigma = zeta * wd / np.sqrt(1 - zeta ** 2)
    y = np.exp(-sigma * T) * np.cos(wd * T)
    m = analysis.mode_identify(T, y, baseline=0.0)
    assert m.freq_hz == pytest.approx(fd, rel=1e-3)
    assert m.zeta == pytest.approx(zeta, rel=1e-2)


def test_frf_curve_peak_and_bandwidth():
    f = np.linspace(1, 200, 2000)
    wn, zeta = 2 * np.pi * 50, 0.2
    s = 2j * np.pi * f
    curve = analysis.FrfCurve(2 * np.pi * f, wn ** 2 / (s ** 2 + 2 * zeta * wn * s + wn ** 2))
    fp, db = curve.peak()
    assert fp == pytest.approx(50 * np.sqrt(1 - 2 * zeta ** 2), rel=1e-3)
    assert db == pytest.approx(-20 * np.log10(2 * zeta * np.sqrt(1 - zeta ** 2)), abs=1e-3)
    assert curve.bandwidth() > fp
    lo, hi = curve.positive_region()
    assert lo == pytest.approx(1.0) and hi < curve.bandwidth()


def test_frf_curve_requires_monotonic_frequencies():
    with pytest.raises(ValueError):
        analysis.FrfCurve([1.0, 3.0, 2.0], [1, 1, 1])


def test_nyquist_margins_are_asymmetric():
    rep = analysis.nyquist_margins(params.base())
    pos, neg = rep.min_margin("positive"), rep.min_margin("negative")
    assert pos is not None and neg is not None
    assert neg < pos


def test_root_locus_shapes():
    pts = analysis.root_locus(params.base(), "kvi", 100, 2000, count=5, full_model=True)
    assert [len(pt.poles) for pt in pts] == [2] * 5
    assert all(pt.full_poles for pt in pts)
    with pytest.raises(ValueError):
        analysis.root_locus(params.base(), "nonsense", 1, 2)


def test_clfr_dc_gain_of_voltage_channel():
    c = analysis.clfr(params.placed(), "v_d", [0.01])
    assert abs(c.value[0]) == pytest.approx(1.0, abs=1e-3)
