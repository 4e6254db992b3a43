"""Root loci, Nyquist margins, closed-loop frequency responses and trace metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq, least_squares

from . import model
from .errors import InsufficientOscillation
from .lti import RealStateSpace, order_poles
from .params import VsgParams


# --------------------------------------------------------------------------
# root loci
# --------------------------------------------------------------------------

SWEEPABLE = ("kvi", "Xg", "Xs", "kc_real", "kc_imag")


def sweep_values(param: str, lo: float, hi: float, count: int) -> np.ndarray:
    """Log spacing for ``kvi``, linear for impedances and gains."""
    if param not in SWEEPABLE:
        raise ValueError(f"cannot sweep {param!r}; choose from {SWEEPABLE}")
    if param == "kvi":
        return np.logspace(np.log10(lo), np.log10(hi), count)
    return np.linspace(lo, hi, count)


def with_value(p: VsgParams, param: str, value: float) -> VsgParams:
    if param == "kc_real":
        return p.with_kc(complex(value, p.kc.imag))
    if param == "kc_imag":
        return p.with_kc(complex(p.kc.real, value))
    return p.replace(**{param: float(value)})


class LocusPoint(NamedTuple):
    value: float
    poles: list
    full_poles: list | None


def root_locus(p: VsgParams, param: str, lo: float, hi: float, count: int = 200,
               full_model: bool = False) -> list[LocusPoint]:
    """Closed voltage-loop poles along a parameter sweep.

    With ``full_model`` the eigenvalues of the linearized full model at the
    quiescent operating point are attached for overlay.
    """
    out = []
    for v in sweep_values(param, lo, hi, count):
        q = with_value(p, param, v)
        _, geo = model.voltage_closed_loop(q)
        full = None
        if full_model:
            full = list(order_poles(model.full_ssm(q).eigenvalues()))
        out.append(LocusPoint(float(v), [geo.lambda1, geo.lambda2], full))
    return out


# --------------------------------------------------------------------------
# Nyquist margins
# --------------------------------------------------------------------------

class Crossing(NamedTuple):
    omega: float
    margin_deg: float
    branch: str


@dataclass
class PhaseMarginReport:
    crossings: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def branch(self, name: str) -> list[Crossing]:
        return [c for c in self.crossings if c.branch == name]

    def min_margin(self, name: str) -> float | None:
        vals = [c.margin_deg for c in self.branch(name)]
        return min(vals) if vals else None


def nyquist_curve(p: VsgParams, points: int = 2000, f_lo: float = 0.01, f_hi: float = 500.0):
    """Minor-loop gain on both frequency branches, ``(omega, value, branch)`` arrays."""
    gml = model.minor_loop_gain(p)
    mags = np.logspace(np.log10(2 * np.pi * f_lo), np.log10(2 * np.pi * f_hi), points)
    om = np.concatenate([-mags[::-1], mags])
    vals = gml(1j * om)
    branch = np.where(om < 0, "negative", "positive")
    return om, vals, branch


def nyquist_margins(p: VsgParams, points: int = 2000, f_lo: float = 0.01,
                    f_hi: float = 500.0) -> PhaseMarginReport:
    """Phase margins of the minor-loop gain ``(L_P + 1)/(Ci Cv)`` on both branches.

    The margin is the angular distance from the unit-circle crossing to the
    negative real axis, ``180 - |arg G|`` in degrees, evaluated on each
    branch separately since complex-coefficient loops are not symmetric.
    """
    gml = model.minor_loop_gain(p)
    mags = np.logspace(np.log10(2 * np.pi * f_lo), np.log10(2 * np.pi * f_hi), points)
    report = PhaseMarginReport()
    for name, sign in (("positive", 1.0), ("negative", -1.0)):
        om = sign * mags
        m = np.abs(gml(1j * om)) - 1.0
        idx = np.flatnonzero(np.sign(m[:-1]) * np.sign(m[1:]) < 0)
        if idx.size == 0:
            report.notes.append(f"no unit-gain crossing on the {name} branch")
        for k in idx:
            f = lambda w: abs(gml(1j * w)) - 1.0
            w = brentq(f, om[k], om[k + 1], xtol=1e-12, rtol=1e-14)
            g = complex(gml(1j * w))
            margin = 180.0 - abs(np.degrees(np.angle(g)))
            report.crossings.append(Crossing(float(w), float(margin), name))
    return report


# --------------------------------------------------------------------------
# frequency responses
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FrfCurve:
    """Frequency response samples; ``omega`` in signed rad/s."""

    omega: np.ndarray
    value: np.ndarray
    label: str = ""

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        val = np.asarray(self.value, dtype=complex)
        if om.shape != val.shape:
            raise ValueError("omega and value must have the same length")
        if om.size > 1 and not (np.all(np.diff(om) > 0) or np.all(np.diff(om) < 0)):
            raise ValueError("omega must be strictly monotonic")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "value", val)

    @property
    def f_hz(self) -> np.ndarray:
        return self.omega / (2 * np.pi)

    @property
    def mag_db(self) -> np.ndarray:
        return 20 * np.log10(np.abs(self.value))

    @property
    def phase_deg(self) -> np.ndarray:
        return np.degrees(np.angle(self.value))

    @property
    def points(self) -> list[tuple[float, complex]]:
        return list(zip(self.omega.tolist(), self.value.tolist()))

    def peak(self) -> tuple[float, float]:
        """``(f_hz, dB)`` of the largest magnitude, refined by a parabola in dB."""
        db = self.mag_db
        k = int(np.argmax(db))
        f = self.f_hz
        if 0 < k < db.size - 1:
            y0, y1, y2 = db[k - 1], db[k], db[k + 1]
            den = y0 - 2 * y1 + y2
            if den < 0 and np.isclose(f[k + 1] - f[k], f[k] - f[k - 1], rtol=1e-6):
                off = 0.5 * (y0 - y2) / den
                h = f[k + 1] - f[k]
                return float(f[k] + off * h), float(y1 - 0.25 * (y0 - y2) * off)
        return float(f[k]), float(db[k])

    def bandwidth(self, level_db: float = -3.0) -> float | None:
        """First frequency where the magnitude falls below ``level_db``."""
        db = self.mag_db
        f = self.f_hz
        below = np.flatnonzero(db < level_db)
        if below.size == 0:
            return None
        k = below[0]
        if k == 0:
            return float(f[0])
        return float(np.interp(level_db, [db[k], db[k - 1]], [f[k], f[k - 1]]))

    def positive_region(self) -> tuple[float, float] | None:
        """Span of frequencies with gain above 0 dB."""
        pos = np.flatnonzero(self.mag_db > 0)
        if pos.size == 0:
            return None
        return float(self.f_hz[pos[0]]), float(self.f_hz[pos[-1]])


CHANNELS = {"v_d": "v_cd", "v_q": "v_cq", "P_e": "P_e", "Q_e": "Q_e", "i_gd": "i_gd", "i_gq": "i_gq"}


def clfr(p: VsgParams, channel: str, freqs_hz: Sequence[float], P0: float = 0.0,
         op: model.OperatingPoint | None = None, sys: RealStateSpace | None = None) -> FrfCurve:
    """Response of the linearized full model from ``v_dr`` to ``channel``."""
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}; choose from {sorted(CHANNELS)}")
    if sys is None:
        op = model.steady_state(p, P_ref=P0) if op is None else op
        sys = model.full_ssm(p, op)
    om = 2 * np.pi * np.asarray(freqs_hz, dtype=float)
    vals = sys.freq_response(om, "v_dr", CHANNELS[channel])
    return FrfCurve(om, vals, channel)


def closed_loop_branches(p: VsgParams, freqs_hz: Sequence[float]) -> tuple[FrfCurve, FrfCurve]:
    """Positive- and negative-frequency responses of the complex voltage loop."""
    tf, _ = model.voltage_closed_loop(p)
    om = 2 * np.pi * np.asarray(freqs_hz, dtype=float)
    return FrfCurve(om, tf(1j * om), "positive"), FrfCurve(-om, tf(-1j * om), "negative")


# --------------------------------------------------------------------------
# trace metrics
# --------------------------------------------------------------------------

class StepMetrics(NamedTuple):
    rise_10_90: float | None
    transition_10_95: float | None
    overshoot_pct: float
    settle_2pct: float | None
    osc_freq_hz: float | None
    initial: float
    final: float
    peak: float


def _first_crossing(t, z, level):
    """First time ``z`` reaches ``level`` (z normalized, rising)."""
    idx = np.flatnonzero(z >= level)
    if idx.size == 0:
        return None
    k = idx[0]
    if k == 0:
        return float(t[0])
    return float(np.interp(level, [z[k - 1], z[k]], [t[k - 1], t[k]]))


def step_metrics(t, y, t_step: float = 0.0, initial: float | None = None,
                 final: float | None = None, pre_window: float = 0.05,
                 final_window: float | None = None) -> StepMetrics:
    """Rise, transition, overshoot, settling and ringing of a step trace.

    ``initial`` defaults to the mean over ``pre_window`` before the step
    (or the first sample), ``final`` to the mean over the last tenth of the
    post-step record.  Times are measured from ``t_step``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    post = t >= t_step
    if initial is None:
        pre = (t < t_step) & (t >= t_step - pre_window)
        initial = float(np.mean(y[pre])) if np.any(pre) else float(y[post][0])
    tp, yp = t[post] - t_step, y[post]
    if final is None:
        width = 0.1 * tp[-1] if final_window is None else final_window
        final = float(np.mean(yp[tp >= tp[-1] - width]))
    amp = final - initial
    if amp == 0:
        raise ValueError("trace has no net step")
    z = (yp - initial) / amp
    t10 = _first_crossing(tp, z, 0.1)
    t90 = _first_crossing(tp, z, 0.9)
    t95 = _first_crossing(tp, z, 0.95)
    rise = None if t10 is None or t90 is None else t90 - t10
    trans = None if t10 is None or t95 is None else t95 - t10
    zpk = float(np.max(z))
    overshoot = max(0.0, 100.0 * (zpk - 1.0))
    peak = initial + zpk * amp

    out = np.flatnonzero(np.abs(z - 1.0) > 0.02)
    if out.size == 0:
        settle = 0.0
    elif out[-1] >= z.size - max(2, z.size // 20):
        settle = None
    else:
        settle = float(tp[out[-1] + 1])

    osc = _fft_peak_hz(tp, yp - final)
    return StepMetrics(rise, trans, overshoot, settle, osc, initial, final, peak)


def _fft_peak_hz(t, r, min_periods: float = 5.0) -> float | None:
    """Dominant frequency of a residual; ``None`` if not resolvable over ``min_periods``."""
    if t.size < 16:
        return None
    dt = float(np.median(np.diff(t)))
    r = r - np.mean(r)
    n = int(2 ** np.ceil(np.log2(r.size)) * 8)
    spec = np.abs(np.fft.rfft(r * np.hanning(r.size), n))
    freqs = np.fft.rfftfreq(n, dt)
    spec[0] = 0.0
    k = int(np.argmax(spec))
    f = float(freqs[k])
    duration = t[-1] - t[0]
    if f <= 0 or duration * f < min_periods:
        return None
    return f


class Mode(NamedTuple):
    freq_hz: float
    zeta: float
    fft_freq_hz: float | None


def mode_identify(t, y, window: tuple[float, float] | None = None, baseline: float | None = None) -> Mode:
    """Damped frequency and damping ratio of a decaying oscillation.

    Frequency comes from the mean spacing of successive same-sign extrema,
    damping from the logarithmic decrement between them.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    base = float(np.mean(y[-max(1, y.size // 10):])) if baseline is None else baseline
    r = y - base
    d = np.diff(r)
    ext = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0) | (d[:-1] < 0) & (d[1:] >= 0)) + 1
    # keep extrema that clearly stand out of numerical noise
    if ext.size:
        ext = ext[np.abs(r[ext]) > 1e-6 * np.max(np.abs(r))]
    if ext.size < 3:
        raise InsufficientOscillation(f"only {ext.size} extrema found; need at least 3")
    # parabolic refinement of extremum times and values
    te, ye = [], []
    for k in ext:
        if 0 < k < r.size - 1:
            y0, y1, y2 = r[k - 1], r[k], r[k + 1]
            den = y0 - 2 * y1 + y2
            off = 0.5 * (y0 - y2) / den if den != 0 else 0.0
            off = float(np.clip(off, -0.5, 0.5))
            te.append(t[k] + off * (t[k + 1] - t[k]))
            ye.append(y1 - 0.25 * (y0 - y2) * off)
        else:
            te.append(t[k])
            ye.append(r[k])
    te, ye = np.array(te), np.array(ye)
    # successive extrema alternate sign and are half a period apart
    half = np.diff(te)
    period = 2.0 * float(np.mean(half))
    fd = 1.0 / period
    mags = np.abs(ye)
    # log decrement between extrema one full period apart
    if mags.size >= 3:
        ratios = mags[:-2] / mags[2:]
        ratios = ratios[ratios > 0]
        dec = float(np.mean(np.log(ratios))) if ratios.size else 0.0
    else:
        dec = 0.0
    zeta = dec / np.sqrt(4 * np.pi ** 2 + dec ** 2)
    fft_f = _fft_peak_hz(t - t[0], r, min_periods=2.0)
    return Mode(fd, float(zeta), fft_f)


def power_overshoot_pct(t, p_e, t_step: float, step_size: float, pre_window: float = 0.05) -> float:
    """Largest power excursion after a voltage step, in percent of the step size."""
    t = np.asarray(t)
    p_e = np.asarray(p_e)
    pre = (t < t_step) & (t >= t_step - pre_window)
    p0 = float(np.mean(p_e[pre])) if np.any(pre) else float(p_e[0])
    post = t >= t_step
    return 100.0 * float(np.max(np.abs(p_e[post] - p0))) / abs(step_size)


def envelope_rate(t, y, window: tuple[float, float] | None = None, baseline: float | None = None) -> float:
    """Exponential growth rate (1/s) of the oscillation envelope.

    Peaks of ``|y - baseline|`` between successive zero crossings are fitted
    by a straight line in log scale; positive means growing.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    base = float(np.mean(y)) if baseline is None else baseline
    r = y - base
    cross = np.flatnonzero(np.signbit(r[:-1]) != np.signbit(r[1:]))
    if cross.size < 4:
        raise InsufficientOscillation(f"only {cross.size} zero crossings in window")
    tp, ap = [], []
    for a, b in zip(cross[:-1], cross[1:]):
        k = a + 1 + int(np.argmax(np.abs(r[a + 1:b + 1])))
        tp.append(t[k])
        ap.append(abs(r[k]))
    ap = np.array(ap)
    keep = ap > 0
    slope, _ = np.polyfit(np.array(tp)[keep], np.log(ap[keep]), 1)
    return float(slope)


class SecondOrderFit(NamedTuple):
    poles: tuple[complex, complex]
    final: float
    rms_residual: float
    real_poles: tuple[float, ...] = ()


def fit_second_order(t, y, t0: float, window: float, extra_real: int = 0) -> SecondOrderFit:
    """Fit ``y = c + exp(s t)(a cos(w t) + b sin(w t)) + sum_k d_k exp(r_k t)``.

    Variable projection: the exponents ``(s, w, r_k)`` are searched by least
    squares while the linear coefficients are solved exactly at each trial.
    ``extra_real`` adds real modes that would otherwise bias the pair.
    Returns the pole pair ``s +/- j w`` with the upper one first.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (t >= t0) & (t <= t0 + window)
    tau, yy = t[sel] - t0, y[sel]

    def basis(theta):
        s, w = theta[0], theta[1]
        e = np.exp(s * tau)
        cols = [np.ones_like(tau), e * np.cos(w * tau), e * np.sin(w * tau)]
        cols += [np.exp(r * tau) for r in theta[2:]]
        return np.column_stack(cols)

    def resid(theta):
        phi = basis(theta)
        coef, *_ = np.linalg.lstsq(phi, yy, rcond=None)
        return phi @ coef - yy

    # coarse start over plausible electromechanical modes
    best = None
    for s in -np.geomspace(1.0, 200.0, 25):
        for w in np.geomspace(1.0, 400.0, 30):
            c = float(np.sum(resid((s, w)) ** 2))
            if best is None or c < best[0]:
                best = (c, (s, w))
    theta = np.array(best[1])
    for _ in range(extra_real):
        # seed each extra real mode by a scan, previous exponents held
        trials = [(float(np.sum(resid(np.r_[theta, -r]) ** 2)), -r) for r in np.geomspace(1.0, 500.0, 40)]
        theta = np.r_[theta, min(trials)[1]]
        theta = least_squares(resid, theta, x_scale="jac", xtol=1e-12, ftol=1e-12).x
    sol = least_squares(resid, theta, x_scale="jac", xtol=1e-12, ftol=1e-12)
    s, w = sol.x[0], abs(sol.x[1])
    coef, *_ = np.linalg.lstsq(basis(sol.x), yy, rcond=None)
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    return SecondOrderFit((complex(s, w), complex(s, -w)), float(coef[0]), rms,
                          tuple(float(r) for r in sol.x[2:]))
