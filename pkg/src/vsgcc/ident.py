"""Multi-tone injection and DFT identification of closed-loop responses."""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from . import dynamics as dyn
from . import model
from .analysis import CHANNELS, FrfCurve
from .errors import ConfigError, NonCommensurateWindow, UnstableScenario
from .sim import Scenario, Tone, run

MAX_TOTAL_AMPLITUDE = 0.02
COHERENCE_MIN = 0.99
DEFAULT_FREQS = (1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.5, 40.0, 50.0, 60.0)


@dataclass(frozen=True)
class ToneSet:
    """Simultaneous sinusoids added to the d-axis voltage reference."""

    tones: tuple

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))
        freqs = [t.freq_hz for t in self.tones]
        if not freqs:
            raise ConfigError("a tone set needs at least one tone")
        if any(f <= 0 for f in freqs):
            raise ConfigError("tone frequencies must be positive")
        if len(set(freqs)) != len(freqs):
            raise ConfigError("tone frequencies must be distinct")
        if any(t.amplitude <= 0 for t in self.tones):
            raise ConfigError("tone amplitudes must be positive")
        total = sum(t.amplitude for t in self.tones)
        if total > MAX_TOTAL_AMPLITUDE + 1e-12:
            raise ConfigError(f"total tone amplitude {total:g} exceeds {MAX_TOTAL_AMPLITUDE} p.u.")

    @classmethod
    def uniform(cls, freqs_hz: Sequence[float] = DEFAULT_FREQS, amplitude: float = 0.002) -> "ToneSet":
        """Equal amplitudes; phases spread quadratically to limit the crest factor."""
        n = len(freqs_hz)
        return cls(tuple(Tone(float(f), amplitude, float(np.pi * k * k / n))
                         for k, f in enumerate(freqs_hz)))

    @property
    def freqs(self) -> np.ndarray:
        return np.array([t.freq_hz for t in self.tones])

    def scaled(self, factor: float) -> "ToneSet":
        return ToneSet(tuple(replace(t, amplitude=t.amplitude * factor) for t in self.tones))

    def fundamental_period(self, max_den: int = 10_000) -> float:
        """Shortest window holding an integer number of cycles of every tone."""
        fr = [Fraction(f).limit_denominator(max_den) for f in self.freqs]
        den = 1
        for q in fr:
            den = lcm(den, q.denominator)
        nums = [int(q * den) for q in fr]
        g = 0
        for v in nums:
            g = np.gcd(g, v)
        return float(Fraction(den, int(g)))

    def check_window(self, window: float, tol: float = 1e-9) -> None:
        cycles = self.freqs * window
        if np.any(np.abs(cycles - np.round(cycles)) > tol * np.maximum(1.0, cycles)):
            base = self.fundamental_period()
            suggested = base * np.ceil(window / base - 1e-12)
            raise NonCommensurateWindow(
                f"window {window:g} s does not hold whole cycles of every tone; "
                f"use a multiple of {base:g} s, e.g. {suggested:g} s",
                suggested_window=float(suggested))


@dataclass(frozen=True)
class Identified:
    """Identified points for one channel; ``flagged`` marks low coherence."""

    curve: FrfCurve
    coherence: np.ndarray
    flagged: np.ndarray


def _tone_bins(x: np.ndarray, freqs: np.ndarray, window: float, n_seg: int) -> np.ndarray:
    """DFT coefficients at the tone bins for each segment, shape ``(n_seg, n_tones)``."""
    seg = x.size // n_seg
    x = x[: seg * n_seg].reshape(n_seg, seg)
    x = x - x.mean(axis=1, keepdims=True)
    spec = np.fft.rfft(x, axis=1)
    bins = np.round(freqs * window).astype(int)
    return spec[:, bins]


def discard_time(sc: Scenario, n_tau: float = 5.0) -> float:
    """Transient prefix of ``n_tau`` dominant time constants of the linearized model."""
    op = model.steady_state(sc.params, P_ref=sc.P_ref, V_ref=sc.V_ref, Q_ref=sc.Q_ref, Vg=sc.V_grid)
    lam = model.dominant_eigenvalue(model.full_ssm(sc.params, op))
    if lam.real >= 0:
        raise UnstableScenario(f"linearized model has an unstable eigenvalue {lam:.4g}")
    return n_tau / -lam.real


def inject_and_identify(sc: Scenario, tones: ToneSet, channels: Sequence[str] = ("v_d",),
                        window: float = 2.0, n_seg: int = 4,
                        discard: float | None = None) -> dict[str, Identified]:
    """Simulate the scenario with injected tones and identify the responses.

    Tones start at ``t = 0`` from the scenario equilibrium.  After ``discard``
    seconds (default five dominant time constants) ``n_seg`` windows of
    length ``window`` are transformed; each point is the averaged cross
    spectrum over the input auto spectrum at the tone bin, and the
    magnitude-squared coherence across segments is reported alongside.
    Voltage and current channels are rotated into the steady inverter
    frame so they compare directly with the linearized model.
    """
    unknown = [c for c in channels if c not in CHANNELS]
    if unknown:
        raise ConfigError(f"unknown channels {unknown}; choose from {sorted(CHANNELS)}")
    tones.check_window(window)
    if sc.events:
        raise ConfigError("identification scenarios must not schedule events")
    if discard is None:
        discard = discard_time(sc)
    # align the analysis start on the sample grid
    k0 = int(np.ceil(discard / sc.sample_dt - 1e-9))
    n_win = int(round(window / sc.sample_dt))
    if abs(n_win * sc.sample_dt - window) > 1e-9 * window:
        raise ConfigError("window must be a multiple of sample_dt")
    if tones.freqs.max() >= 0.5 / sc.sample_dt:
        raise ConfigError("highest tone is above the Nyquist rate of the record")
    duration = (k0 + n_seg * n_win) * sc.sample_dt
    run_sc = replace(sc, duration=duration + 0.5 * sc.sample_dt, tones=tones.tones, tone_start=0.0)
    ts = run(run_sc)
    if ts.unstable:
        raise UnstableScenario("simulation diverged during identification")
    sl = slice(k0, k0 + n_seg * n_win)
    u = ts.inputs[sl, dyn.E_REF]
    U = _tone_bins(u, tones.freqs, window, n_seg)

    op = model.steady_state(sc.params, P_ref=sc.P_ref, V_ref=sc.V_ref, Q_ref=sc.Q_ref, Vg=sc.V_grid)
    rotated = ts.steady_frame(op.delta0)
    signals = {ch: rotated[col][sl] for ch, col in CHANNELS.items()}

    out = {}
    om = 2 * np.pi * tones.freqs
    for ch in channels:
        Y = _tone_bins(signals[ch], tones.freqs, window, n_seg)
        suy = np.sum(np.conj(U) * Y, axis=0)
        suu = np.sum(np.abs(U) ** 2, axis=0)
        syy = np.sum(np.abs(Y) ** 2, axis=0)
        h = suy / suu
        coh = np.abs(suy) ** 2 / np.where(suu * syy > 0, suu * syy, np.inf)
        out[ch] = Identified(FrfCurve(om, h, ch), coh, coh < COHERENCE_MIN)
    return out


def linearity_deviation(sc: Scenario, tones: ToneSet, channel: str = "v_d", window: float = 2.0,
                        factor: float = 2.0) -> float:
    """Largest relative change of identified points when amplitudes are scaled."""
    a = inject_and_identify(sc, tones, (channel,), window)[channel].curve.value
    b = inject_and_identify(sc, tones.scaled(factor), (channel,), window)[channel].curve.value
    return float(np.max(np.abs(b - a) / np.abs(a)))


def identify_first_order(tau: float, tones: ToneSet, window: float = 2.0, dt: float = 1e-4,
                         discard: float | None = None) -> FrfCurve:
    """Self-test: identify ``1 / (1 + s tau)`` driven by the tone set.

    The plant is integrated exactly (zero-order hold on a fine grid) so the
    result isolates the DFT procedure.
    """
    tones.check_window(window)
    discard = 10 * tau if discard is None else discard
    k0 = int(np.ceil(discard / dt))
    n_win = int(round(window / dt))
    n = k0 + n_win + 1
    sub = 20
    h = dt / sub
    t = np.arange(n * sub) * h
    u = np.zeros_like(t)
    for tn in tones.tones:
        u += tn.amplitude * np.sin(2 * np.pi * tn.freq_hz * t + tn.phase)
    a = np.exp(-h / tau)
    # trapezoidal-hold recursion, exact for piecewise-linear input
    c0 = 1 - tau / h * (1 - a)
    c1 = tau / h * (1 - a) - a
    y = lfilter([c0, c1], [1.0, -a], u)
    u, y = u[::sub][k0:k0 + n_win], y[::sub][k0:k0 + n_win]
    U = _tone_bins(u, tones.freqs, window, 1)[0]
    Y = _tone_bins(y, tones.freqs, window, 1)[0]
    return FrfCurve(2 * np.pi * tones.freqs, Y / U, "first_order")
