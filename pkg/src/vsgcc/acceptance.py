"""Acceptance suite shared by the test-suite and the ``verify`` command.

Every check records the measured value, the reference with its tolerance and
a verdict.  Reference values and tolerances are pinned here and nowhere else.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import analysis, design, ident, lti, model, oracles, params, sim
from .errors import ConfigError


@dataclass(frozen=True)
class Check:
    criterion: int
    label: str
    measured: object
    expected: str
    passed: bool | None  # None: informational only
    note: str = ""

    def __post_init__(self):
        if self.passed is not None:
            object.__setattr__(self, "passed", bool(self.passed))

    def line(self) -> str:
        verdict = {True: "PASS", False: "FAIL", None: "INFO"}[self.passed]
        m = self.measured
        if isinstance(m, complex):
            ms = f"{m.real:.5g}{m.imag:+.5g}j"
        elif isinstance(m, (float, np.floating)):
            ms = f"{m:.5g}"
        else:
            ms = str(m)
        tail = f"  ({self.note})" if self.note else ""
        return f"[{verdict}] C{self.criterion} {self.label}: measured {ms}; expected {self.expected}{tail}"


def _near(crit, label, measured, ref, tol, unit="", note="") -> Check:
    ok = measured is not None and abs(measured - ref) <= tol
    return Check(crit, label, measured, f"{ref:g} +/- {tol:g}{unit}", bool(ok), note)


def _rel(crit, label, measured, ref, rel, note="") -> Check:
    ok = measured is not None and abs(measured - ref) <= rel * abs(ref)
    rs = f"{ref.real:g}{ref.imag:+g}j" if isinstance(ref, complex) else f"{ref:g}"
    return Check(crit, label, measured, f"{rs} within {100 * rel:g}%", bool(ok), note)


def _angle_deg(z: complex) -> float:
    return float(np.degrees(np.angle(z)) % 360.0)


# --------------------------------------------------------------------------
# 1-3: gain design
# --------------------------------------------------------------------------

def c1_pole_placement() -> list[Check]:
    kc = design.pole_place_kc(params.base(), kc_real=1.0)
    return [_near(1, "placed kc real part", kc.real, 1.0, 1e-3),
            _near(1, "placed kc imaginary part", kc.imag, 1.1356, 1e-3)]


def c2_placed_pole() -> list[Check]:
    p = params.base().with_kc(design.pole_place_kc(params.base(), 1.0))
    _, geo = model.voltage_closed_loop(p)
    m = design.ctf_step_metrics(p)
    return [_rel(2, "|lambda2| (1/s)", abs(geo.lambda2), 110.0, 0.02),
            _near(2, "arg lambda2 (deg)", _angle_deg(geo.lambda2), 225.0, 0.5),
            _near(2, "rise 10-95% (ms)", 1e3 * m.transition_10_95, 19.7, 1.0),
            _near(2, "overshoot (%)", m.overshoot_pct, 4.63, 0.5)]


def c3_ise_optimum() -> list[Check]:
    res = design.optimize_kc(params.base())
    return [_near(3, "optimal kc real part", res.kc.real, 0.5, 0.05),
            _near(3, "optimal kc imaginary part", res.kc.imag, 0.767, 0.05),
            _rel(3, "|lambda2| at optimum (1/s)", abs(res.lambda2), 176.0, 0.03),
            _rel(3, "arg lambda2 at optimum (deg)", _angle_deg(res.lambda2), 218.6, 0.03),
            _near(3, "rise 10-95% at optimum (ms)", 1e3 * res.transition_10_95, 15.0, 1.5),
            _near(3, "overshoot at optimum (%)", res.overshoot_pct, 2.74, 0.5)]


# --------------------------------------------------------------------------
# 4-5: resonance replication and the stability transition
# --------------------------------------------------------------------------

def _sim_step(name, t_step, mode_span, final_window):
    r = sim.run(sim.preset_scenario(name))
    m = analysis.step_metrics(r.t, r["v_cd"], t_step, final_window=final_window)
    mode = analysis.mode_identify(r.t, r["v_cd"], (t_step + 0.002, t_step + mode_span))
    pov = analysis.power_overshoot_pct(r.t, r["P_e"], t_step, 0.05)
    return m, mode, pov


def c4_resonance() -> list[Check]:
    out = []
    f = np.linspace(0.5, 100.0, 4000)
    pk = analysis.clfr(params.base(), "v_d", f).peak()[0]
    out.append(_near(4, "base CLFR peak (Hz)", pk, 30.1, 1.0))
    f = np.linspace(0.1, 10.0, 4000)
    pk = analysis.clfr(params.so_tuned(), "v_d", f).peak()[0]
    out.append(_near(4, "SO CLFR peak (Hz)", pk, 2.18, 0.15))
    m, mode, pov = _sim_step("base_high_kvi", 0.5, 0.5, 0.3)
    out += [_near(4, "base sim rise 10-95% (ms)", 1e3 * m.transition_10_95, 10.0, 2.0),
            _near(4, "base sim voltage overshoot (%)", m.overshoot_pct, 32.0, 3.0),
            _near(4, "base sim power overshoot (%)", pov, 370.0, 30.0),
            _near(4, "base sim mode (Hz)", mode.freq_hz, 30.3, 1.0)]
    m, mode, _ = _sim_step("so_tuned", 1.0, 2.0, 0.5)
    out += [_near(4, "SO sim rise 10-95% (ms)", 1e3 * m.transition_10_95, 100.0, 10.0),
            _near(4, "SO sim voltage overshoot (%)", m.overshoot_pct, 56.0, 5.0),
            _near(4, "SO sim mode (Hz)", mode.freq_hz, 2.105, 0.1)]
    return out


def full_model_boundary(p: params.VsgParams, lo: float = 0.2, hi: float = 0.6) -> float:
    """Real feeding gain at which the linearized full model loses stability."""
    g = lambda k: model.dominant_eigenvalue(model.full_ssm(p.with_real_kc(k))).real
    return float(brentq(g, lo, hi, xtol=1e-6))


def c5_transition() -> list[Check]:
    r = sim.run(sim.preset_scenario("mu_transition"))
    grow = analysis.envelope_rate(r.t, r["Vc_mag"], (0.3, 1.0))
    decay = analysis.envelope_rate(r.t, r["Vc_mag"], (1.05, 2.0))
    b = params.base()
    lam35 = model.dominant_eigenvalue(model.full_ssm(b.with_real_kc(0.35)))
    lam40 = model.dominant_eigenvalue(model.full_ssm(b.with_real_kc(0.40)))
    return [
        Check(5, "sim envelope rate at kc = 0.35 (1/s)", grow, "> 0 (growing)", grow > 0 and not r.unstable),
        Check(5, "sim envelope rate at kc = 0.40 (1/s)", decay, "< 0 (decaying)", decay < 0),
        Check(5, "full-model max Re at kc = 0.35", lam35.real, "> 0", lam35.real > 0),
        Check(5, "full-model max Re at kc = 0.40", lam40.real, "< 0", lam40.real < 0),
        Check(5, "analytic boundary Ls*kvi", design.real_gain_boundary(b), "reported", None),
        Check(5, "analytic boundary Ls*kvi with Xs = 0.10", design.real_gain_boundary(params.small_filter()),
              "reported; 0.2546 derived", None),
        Check(5, "full-model boundary", full_model_boundary(b), "reported; 0.382 quoted", None),
    ]


# --------------------------------------------------------------------------
# 6-8: frequency-domain results
# --------------------------------------------------------------------------

NYQUIST_REF = {
    # Xg: {setup: (positive, negative)}
    0.30: {"base": (108.4, 7.6), "placed": (114.4, 57.2), "optimized": (104.2, 64.0)},
    1.50: {"base": (94.0, 11.0), "placed": (97.4, 65.0), "optimized": (93.8, 71.0)},
    0.04: {"base": (159.4, 3.6), "placed": (127.4, 51.6), "optimized": (114.7, 60.0)},
}


def c6_nyquist() -> list[Check]:
    out = []
    for xg, row in NYQUIST_REF.items():
        for name, (pos, neg) in row.items():
            q = params.preset(name).replace(Xg=xg)
            rep = analysis.nyquist_margins(q)
            out.append(_near(6, f"Xg={xg:g} {name} positive margin (deg)", rep.min_margin("positive"), pos, 1.0))
            out.append(_near(6, f"Xg={xg:g} {name} negative margin (deg)", rep.min_margin("negative"), neg, 1.0))
    return out


def c7_robustness() -> list[Check]:
    p = params.placed()
    xgs = np.linspace(0.04, 0.86, 165)[:-1]
    zetas = [model.voltage_closed_loop(p.replace(Xg=x))[1].zeta for x in xgs]
    lam = model.voltage_closed_loop(p.replace(Xg=0.04))[1].lambda2
    locus = analysis.root_locus(params.base().with_real_kc(0.0), "kvi", 8.0, 8e4, 200)
    worst = min(max(z.real for z in pt.poles) for pt in locus)
    return [Check(7, "min zeta(lambda2) for Xg in [0.04, 0.86)", float(min(zetas)), "> 0.56", min(zetas) > 0.56),
            _rel(7, "|lambda2| at Xg = 0.04 (1/s)", abs(lam), 19.8, 0.05),
            Check(7, "kc = 0 kvi sweep: smallest max-Re pole", worst, "> 0 at every sample", worst > 0)]


SPECTRUM_FREQS = np.linspace(0.5, 100.0, 4000)


def c8_spectra() -> list[Check]:
    pk = params.placed()
    pc = pk.replace(compensator=True)
    f0, db0 = analysis.clfr(pk, "P_e", SPECTRUM_FREQS).peak()
    f1, db1 = analysis.clfr(pc, "P_e", SPECTRUM_FREQS).peak()
    bw0 = analysis.clfr(pk, "v_d", SPECTRUM_FREQS).bandwidth()
    bw1 = analysis.clfr(pc, "v_d", SPECTRUM_FREQS).bandwidth()
    note = "quiescent operating point P0 = 0"
    return [_near(8, "P_e peak without compensator (dB)", db0, 7.51, 0.5, note=note),
            _near(8, "P_e peak frequency without compensator (Hz)", f0, 15.3, 1.0),
            _near(8, "P_e peak with compensator (dB)", db1, 0.88, 0.3, note=note),
            _near(8, "P_e peak frequency with compensator (Hz)", f1, 3.89, 0.5),
            _near(8, "v_d -3 dB bandwidth without compensator (Hz)", bw0, 18.0, 1.0),
            _near(8, "v_d -3 dB bandwidth with compensator (Hz)", bw1, 21.6, 1.0)]


def c9_identification() -> list[Check]:
    tones = ident.ToneSet.uniform()
    out = []
    for name, p in (("base", params.base()), ("placed", params.placed()),
                    ("placed + compensator", params.placed().replace(compensator=True))):
        res = ident.inject_and_identify(sim.Scenario(p, 1.0), tones, ("v_d", "P_e"))
        for ch, idf in res.items():
            ratio = idf.curve.value / analysis.clfr(p, ch, tones.freqs).value
            ddb = float(np.max(np.abs(20 * np.log10(np.abs(ratio)))))
            ddeg = float(np.max(np.abs(np.degrees(np.angle(ratio)))))
            out.append(Check(9, f"{name} {ch} max deviation (dB, deg)", f"{ddb:.3g}, {ddeg:.3g}",
                             "<= 0.5 dB and <= 5 deg", ddb <= 0.5 and ddeg <= 5.0,
                             f"min coherence {idf.coherence.min():.4f}"))
    return out


# --------------------------------------------------------------------------
# 10-11: experiment scale and scenarios
# --------------------------------------------------------------------------

def c10_experiment() -> list[Check]:
    pe = params.experiment()
    lam_full = model.dominant_eigenvalue(model.full_ssm(pe))
    lam_full = complex(lam_full.real, abs(lam_full.imag))
    _, geo = model.voltage_closed_loop(pe)
    ref_full, ref_ctf = complex(28.49, 268.3), complex(25.08, -272.1)
    d_full = abs(lam_full - ref_full) / abs(ref_full)
    d_ctf = abs(geo.lambda2 - ref_ctf) / abs(ref_ctf)
    return [Check(10, "full-model unstable pole", lam_full, "28.49+268.3j within 10% (|error|/|ref|)",
                  d_full <= 0.10, f"error {100 * d_full:.2f}%"),
            Check(10, "closed-loop CTF lambda2", geo.lambda2, "25.08-272.1j within 2% (|error|/|ref|)",
                  d_ctf <= 0.02, f"error {100 * d_ctf:.2f}%")]


def _restabilization_ms(r, t_event: float, band: float = 0.02) -> float:
    v = r["Vc_mag"]
    final = float(np.mean(v[r.t >= r.t[-1] - 0.1]))
    out = np.flatnonzero((r.t >= t_event) & (np.abs(v - final) > band * final))
    return 0.0 if out.size == 0 else 1e3 * (r.t[out[-1]] - t_event)


def _pre(r, col, t, span=0.05):
    sel = (r.t < t) & (r.t >= t - span)
    return float(np.mean(r[col][sel]))


def c11_scenarios() -> list[Check]:
    out = []
    r = sim.run(sim.preset_scenario("config_v_step_iv"))
    exc = float(np.max(np.abs(r["P_e"][r.t >= 1.3] - _pre(r, "P_e", 1.3))))
    out.append(Check(11, "case iv P_e excursion for 0.1 V step (p.u.)", exc, "< 0.1", exc < 0.1))

    sags = []
    for case in ("i", "ii", "iii", "iv"):
        r = sim.run(sim.preset_scenario(f"config_p_step_{case}"))
        v0 = _pre(r, "Vc_mag", 1.3)
        sags.append(100 * (v0 - float(np.min(r["Vc_mag"][r.t >= 1.3]))) / v0)
    out.append(_near(11, "largest power-step voltage sag, cases i-iv (%)", max(sags), 0.4, 0.2,
                     note="per case " + ", ".join(f"{s:.3f}" for s in sags)))

    sc = sim.preset_scenario("freq_drop_1pct")
    r = sim.run(sc)
    dp = float(np.mean(r["P_e"][r.t >= r.t[-1] - 0.2])) - _pre(r, "P_e", 0.3)
    out.append(_near(11, "frequency drop steady dP (p.u.)", dp, 0.67, 0.02))
    fit = analysis.fit_second_order(r.t, r["P_e"], 0.302, 1.0, extra_real=1)
    out.append(_rel(11, "frequency drop fitted pole pair", fit.poles[0], complex(-16.67, 15.51), 0.05,
                    note=f"fit rms {fit.rms_residual:.2g}"))

    for name, ref_peak in (("phase_jump_60", 1.19), ("reactance_jump", 1.5)):
        r = sim.run(sim.preset_scenario(name))
        ms = _restabilization_ms(r, 0.3)
        bounded = (not r.unstable) and r["Vc_mag"].max() < 2.0 and r["Ig_mag"].max() < 3.0
        out.append(Check(11, f"{name} restabilization (ms)", ms, "<= 40 with bounded states",
                         ms <= 40.0 and bounded, "2% band on |vc|"))
        post = r.t >= 0.3
        peak = float(np.max(r["Vc_mag"][post]))
        if name == "phase_jump_60":
            out.append(_near(11, "phase jump voltage peak (p.u.)", peak, ref_peak, 0.05,
                             note="electromagnetic transients not modelled"))
        else:
            v0 = _pre(r, "Vc_mag", 0.3)
            out.append(Check(11, "reactance jump voltage spike (p.u.)", peak,
                             "qualitative: a spike above the pre-jump level (1.5 quoted)", peak > v0,
                             "electromagnetic transients not modelled"))
    return out


# --------------------------------------------------------------------------
# 12: oracle and property suites
# --------------------------------------------------------------------------

def c12_oracles(samples: int = 500, seed: int = 12) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []

    worst = 0.0
    for deg in (2, 3, 4, 6, 8):
        for _ in range(20):
            c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
            r = lti.polyroots(c)
            for z in r:
                mag = np.abs(c) @ (abs(z) ** np.arange(deg + 1))
                worst = max(worst, abs(np.polyval(c[::-1], z)) / mag)
    out.append(Check(12, "polynomial root residual (scaled)", worst, "< 1e-8", worst < 1e-8))

    tf, _ = model.voltage_closed_loop(params.placed())
    css = lti.realize_control_canonical(tf)
    ev = np.sort_complex(lti.embed_real(css).eigenvalues())
    ref = np.sort_complex(np.r_[css.eigenvalues(), np.conj(css.eigenvalues())])
    err = float(np.max(np.abs(ev - ref)) / np.max(np.abs(ref)))
    out.append(Check(12, "real embedding spectrum = poles and conjugates", err, "< 1e-9", err < 1e-9))

    t, y_rk4 = oracles.rk4_complex_lti(css.A, css.B, css.C, css.D, 0.1, 1e-6)
    y = lti.step_response_exact(tf, t)
    err = float(np.max(np.abs(y - y_rk4)))
    out.append(Check(12, "closed-form step vs RK4 oracle", err, "< 1e-6", err < 1e-6))

    tf_b, geo_b = model.voltage_closed_loop(params.base())
    tt = np.linspace(3.0 / abs(geo_b.lambda1), 0.5, 5000)
    ex = np.abs(lti.step_response_exact(tf_b, tt))
    dom = np.abs(lti.step_response_dominant(geo_b.lambda2, params.OMEGA1, tt))
    err = float(np.max(np.abs(dom - ex) / ex))
    out.append(Check(12, "dominant-pole magnitude vs closed form, t > 3/|lambda1|", err, "< 2%", err < 0.02))

    agree = 0
    base = params.small_filter()
    for _ in range(samples):
        q = base.replace(Xg=float(rng.uniform(0.04, 1.5)), kvi=float(10 ** rng.uniform(np.log10(8), np.log10(8e4))))
        q = q.with_kc(complex(rng.uniform(-0.5, 1.5), rng.uniform(-1.0, 2.0)))
        mu, stable = design.mu_margin(q)
        a0, a1, a2, _, _ = model.closed_loop_coefficients(q)
        roots = oracles.quadratic_roots_direct(a0, a1, a2)
        agree += stable == (max(z.real for z in roots) <= 0)
    out.append(Check(12, "mu sign vs root sign agreement", f"{agree}/{samples}", f"{samples}/{samples}",
                     agree == samples))

    p = params.placed()
    op = model.steady_state(p)
    sc = sim.Scenario(p, 0.6, events=(sim.Event(0.1, "step_v_ref", 1e-3),))
    r = sim.run(sc)
    sel = r.t >= 0.1
    lin = model.full_ssm(p, op).step(r.t[sel] - 0.1, "v_dr", 1e-3)
    rot = r.steady_frame(op.delta0)
    worst = 0.0
    for k, (ch, x0) in enumerate((("v_cd", op.vc0.real), ("v_cq", op.vc0.imag), ("i_gd", op.ig0.real),
                                   ("i_gq", op.ig0.imag), ("P_e", op.P0), ("Q_e", op.Q0))):
        e = rot[ch][sel] - x0 - lin[:, k]
        worst = max(worst, float(np.sqrt(np.mean(e ** 2)) / np.sqrt(np.mean(lin[:, k] ** 2))))
    out.append(Check(12, "nonlinear vs linear RMS error, 1e-3 step", worst, "< 1%", worst < 0.01))

    sc = sim.Scenario(p, 0.05, events=(sim.Event(0.01, "step_v_ref", 0.01),), sample_dt=1e-3)
    ref = sim.run(replace(sc, dt=1e-6)).as_array()[:, 1:]
    errs = [float(np.sqrt(np.mean((sim.run(replace(sc, dt=h)).as_array()[:, 1:] - ref) ** 2)))
            for h in (40e-6, 20e-6, 10e-6)]
    order = float(min(np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])))
    out.append(Check(12, "empirical RK4 order", order, ">= 3.8", order >= 3.8))
    return out


CRITERIA: dict[int, tuple[str, Callable[[], list[Check]]]] = {
    1: ("pole placement gain", c1_pole_placement),
    2: ("placed dominant pole and step metrics", c2_placed_pole),
    3: ("ISE optimization", c3_ise_optimum),
    4: ("resonance replication", c4_resonance),
    5: ("stability transition", c5_transition),
    6: ("nyquist margins", c6_nyquist),
    7: ("robustness sweeps", c7_robustness),
    8: ("coupling suppression spectra", c8_spectra),
    9: ("identification consistency", c9_identification),
    10: ("experiment-scale model", c10_experiment),
    11: ("scenario properties", c11_scenarios),
    12: ("oracle and property suites", c12_oracles),
}


def select(filter_text: str | None = None) -> list[int]:
    if not filter_text:
        return list(CRITERIA)
    f = filter_text.lower()
    return [k for k, (title, _) in CRITERIA.items() if f in title or f == str(k)]


def _evaluate(k: int) -> list[Check]:
    return CRITERIA[k][1]()


def default_workers() -> int:
    """Worker processes for ``run``, from ``VSGCC_WORKERS`` (default 1)."""
    raw = os.environ.get("VSGCC_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"VSGCC_WORKERS must be an integer, got {raw!r}") from None


def run(filter_text: str | None = None, echo: Callable[[str], None] | None = None,
        workers: int | None = None) -> list[Check]:
    """Evaluate the selected criteria; ``echo`` receives each result line.

    With more than one worker the criteria run in separate processes;
    results are still reported in criterion order.
    """
    keys = select(filter_text)
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(keys) > 1:
        with ProcessPoolExecutor(min(workers, len(keys))) as pool:
            results = list(pool.map(_evaluate, keys))
    else:
        results = (_evaluate(k) for k in keys)
    checks = []
    for k, got in zip(keys, results):
        checks += got
        if echo is not None:
            for c in got:
                echo(c.line())
            ok = all(c.passed is not False for c in got)
            echo(f"== C{k} {CRITERIA[k][0]}: {'PASS' if ok else 'FAIL'}")
    return checks
