"""Command-line front-end: ``vsgcc {design,analyze,simulate,identify,verify}``.

Exit codes: 0 success, 2 configuration error, 3 design target unreachable,
4 any other numerical failure.  Every CSV is written with nine significant
digits in a fixed row order so repeated runs are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from . import acceptance, analysis, config, design, ident, lti, model, params, sim
from .errors import ConfigError, TargetUnreachable, VsgError

EXIT_OK, EXIT_CONFIG, EXIT_TARGET, EXIT_NUMERIC = 0, 2, 3, 4


def _g(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, float, np.integer, np.floating)):
        return "%.9g" % v
    return str(v)


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_g(v) for v in row])


def _outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _load_params(args) -> params.VsgParams:
    if getattr(args, "config", None):
        return config.load_params(args.config)
    return params.preset(getattr(args, "params", None) or "base")


def _polar(z: complex) -> str:
    return f"{abs(z):.9g} at {np.degrees(np.angle(z)):.9g} deg"


def _ms(v) -> str:
    return "none" if v is None else f"{1e3 * v:.9g} ms"


# --------------------------------------------------------------------------
# design
# --------------------------------------------------------------------------

def cmd_design(args) -> int:
    p = _load_params(args)
    targets = design.DesignTargets()
    if args.target_rise_ms is not None:
        targets = design.DesignTargets(transition_s=args.target_rise_ms / 1e3)
    kc_real = 1.0 if args.kc_real is None else args.kc_real
    try:
        res = design.design_procedure(p.Xs, p.Xg, targets, kip=p.kip, kc_real=kc_real,
                                      kvi=args.kvi, base=p)
    except TargetUnreachable as exc:
        print(f"target unreachable: {exc}", file=sys.stderr)
        if exc.best is not None:
            _report_design(exc.best, targets, args.out)
        return EXIT_TARGET
    _report_design(res, targets, args.out)
    return EXIT_OK


def _report_design(res: design.DesignResult, targets: design.DesignTargets, out: str | None) -> None:
    corner = res.kip * res.kvi / (2 * np.pi)
    slow = res.omega_n < targets.omega_n_min
    rows = [
        ("kvi", res.kvi),
        ("kc_re", res.kc.real),
        ("kc_im", res.kc.imag),
        ("lambda2_re", res.lambda2.real),
        ("lambda2_im", res.lambda2.imag),
        ("lambda2_mag", abs(res.lambda2)),
        ("lambda2_deg", np.degrees(np.angle(res.lambda2))),
        ("zeta", res.zeta),
        ("rise_10_90_s", np.nan if res.rise_time_10_90 is None else res.rise_time_10_90),
        ("transition_10_95_s", np.nan if res.transition_10_95 is None else res.transition_10_95),
        ("estimated_transition_s", np.nan if res.estimated_transition is None else res.estimated_transition),
        ("overshoot_pct", res.overshoot_pct),
        ("compensator_corner_hz", corner),
        ("slow_pole", slow),
        ("iterations", res.iterations),
    ]
    print(f"kvi                 {res.kvi:.9g}")
    print(f"kc                  {res.kc.real:.9g}{res.kc.imag:+.9g}j")
    print(f"lambda2             {_polar(res.lambda2)}")
    print(f"zeta                {res.zeta:.9g}")
    print(f"rise 10-90          {_ms(res.rise_time_10_90)}")
    print(f"transition 10-95    {_ms(res.transition_10_95)} (dominant-pole estimate "
          f"{_ms(res.estimated_transition)})")
    print(f"overshoot           {res.overshoot_pct:.9g} %")
    print(f"compensator corner  {corner:.9g} Hz")
    if slow:
        print(f"warning: slow dominant pole |lambda2| = {res.omega_n:.9g} 1/s "
              f"(< {targets.omega_n_min:g})")
    if out:
        write_csv(os.path.join(_outdir(out), "design.csv"), ("quantity", "value"), rows)


# --------------------------------------------------------------------------
# analyze
# --------------------------------------------------------------------------

def _safe_eval(fn, w: float) -> tuple[complex, bool]:
    """Evaluate at one frequency; singular or non-finite values are flagged, not fatal."""
    try:
        with np.errstate(all="ignore"):
            val = complex(np.asarray(fn(w)).ravel()[0])
    except (VsgError, ZeroDivisionError, FloatingPointError):
        return complex(np.nan, np.nan), True
    return val, not np.isfinite(val)


def cmd_analyze(args) -> int:
    p = _load_params(args)
    out = _outdir(args.out)
    if args.what == "poles":
        if args.full:
            op = model.steady_state(p, P_ref=args.p0)
            poles = lti.order_poles(model.full_ssm(p, op).eigenvalues())
        else:
            _, geo = model.voltage_closed_loop(p)
            poles = [geo.lambda1, geo.lambda2]
        rows = []
        for z in poles:
            wn = abs(z)
            rows.append((z.real, z.imag, -z.real / wn if wn > 0 else 1.0, wn))
        write_csv(os.path.join(out, "poles.csv"), ("re", "im", "zeta", "wn"), rows)
    elif args.what == "rootlocus":
        lo, hi = args.range
        locus = analysis.root_locus(p, args.param, lo, hi, args.count)
        rows = [(pt.value, z.real, z.imag) for pt in locus for z in pt.poles]
        write_csv(os.path.join(out, "rootlocus.csv"), ("param", "re", "im"), rows)
        worst = min(max(z.real for z in pt.poles) for pt in locus)
        print(f"smallest max-Re over the sweep: {worst:.9g}")
    elif args.what == "nyquist":
        gml = model.minor_loop_gain(p)
        om, _, branch = analysis.nyquist_curve(p, args.points, args.f_lo, args.f_hi)
        rows = []
        for w, b in zip(om, branch):
            val, bad = _safe_eval(lambda x: gml(1j * x), w)
            rows.append((w, val.real, val.imag, b, bad))
        write_csv(os.path.join(out, "nyquist.csv"), ("omega", "re", "im", "branch", "singular"), rows)
        rep = analysis.nyquist_margins(p, args.points, args.f_lo, args.f_hi)
        write_csv(os.path.join(out, "margins.csv"), ("branch", "omega", "margin_deg"),
                  [(c.branch, c.omega, c.margin_deg) for c in rep.crossings])
        for name in ("positive", "negative"):
            m = rep.min_margin(name)
            print(f"{name} branch margin: " + ("no crossing" if m is None else f"{m:.9g} deg"))
    elif args.what == "clfr":
        q = p.replace(compensator=True) if args.compensator else p
        op = model.steady_state(q, P_ref=args.p0)
        sys_ = model.full_ssm(q, op)
        freqs = np.logspace(np.log10(args.f_lo), np.log10(args.f_hi), args.points)
        rows = []
        for ch in args.channels:
            if ch not in analysis.CHANNELS:
                raise ConfigError(f"unknown channel {ch!r}; choose from {sorted(analysis.CHANNELS)}")
            out_name = analysis.CHANNELS[ch]
            for f in freqs:
                val, bad = _safe_eval(lambda w: sys_.freq_response([w], "v_dr", out_name),
                                      2 * np.pi * f)
                with np.errstate(all="ignore"):
                    rows.append((f, 20 * np.log10(abs(val)), np.degrees(np.angle(val)), ch, bad))
        write_csv(os.path.join(out, "clfr.csv"), ("f_hz", "mag_db", "phase_deg", "channel", "singular"), rows)
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

STEP_CHANNELS = {"step_v_ref": ("Vc_mag", "P_e"), "step_p_ref": ("P_e", "Vc_mag")}


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        return float(v) if np.isfinite(v) else None
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _scenario(args) -> sim.Scenario:
    if args.scenario:
        sc = config.load_scenario(args.scenario)
    elif args.preset:
        sc = sim.preset_scenario(args.preset)
        if args.config:
            sc = replace(sc, params=config.load_params(args.config))
    elif args.config:
        _, sc = config.loads(config._read(args.config), args.config)
        if sc is None:
            raise ConfigError(f"{args.config}: no [scenario] section; pass --preset or --scenario")
    else:
        raise ConfigError("give --preset, --scenario or a --config with a [scenario] section")
    return sc


def step_summary(ts: sim.TimeSeries) -> list[dict]:
    """Step metrics of the channels driven by each step event."""
    out = []
    events = list(ts.events)
    for k, ev in enumerate(events):
        if ev.action not in STEP_CHANNELS:
            continue
        t_end = events[k + 1].time if k + 1 < len(events) else ts.t[-1]
        seg = ts.window(ev.time - 0.05, t_end)
        for col in STEP_CHANNELS[ev.action]:
            entry = {"event_time": ev.time, "action": ev.action, "channel": col}
            try:
                m = analysis.step_metrics(seg.t, seg[col], ev.time)
                entry.update({name: _jsonable(getattr(m, name)) for name in m._fields})
            except (ValueError, VsgError) as exc:
                entry["error"] = str(exc)
            out.append(entry)
    return out


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    ts = sim.run(sc)
    out = _outdir(args.out)
    write_csv(os.path.join(out, "timeseries.csv"), sim.COLUMNS, ts.as_array())
    summary = {
        "name": sc.name,
        "unstable": bool(ts.unstable),
        "samples": len(ts),
        "t_end": float(ts.t[-1]),
        "steps": step_summary(ts),
    }
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out, "scenario.ini"), "w", encoding="utf-8") as fh:
        fh.write(config.dumps(sc.params, sc))
    print(f"{sc.name or 'scenario'}: {len(ts)} samples, unstable: {str(ts.unstable).lower()}")
    return EXIT_OK


# --------------------------------------------------------------------------
# identify
# --------------------------------------------------------------------------

def cmd_identify(args) -> int:
    p = _load_params(args)
    if args.compensator:
        p = p.replace(compensator=True)
    sc = sim.Scenario(p, 1.0, P_ref=args.p0)
    tones = ident.ToneSet.uniform(args.freqs, args.amplitude)
    res = ident.inject_and_identify(sc, tones, args.channels, window=args.window)
    op = model.steady_state(p, P_ref=args.p0)
    sys_ = model.full_ssm(p, op)
    rows = []
    for ch in args.channels:
        idf = res[ch]
        ref = analysis.clfr(p, ch, tones.freqs, sys=sys_)
        for k in range(tones.freqs.size):
            v, r = idf.curve.value[k], ref.value[k]
            rows.append((tones.freqs[k], 20 * np.log10(abs(v)), np.degrees(np.angle(v)),
                         20 * np.log10(abs(r)), np.degrees(np.angle(r)),
                         idf.coherence[k], idf.flagged[k], ch))
    write_csv(os.path.join(_outdir(args.out), "identified.csv"),
              ("f_hz", "mag_db", "phase_deg", "model_mag_db", "model_phase_deg",
               "coherence", "flagged", "channel"), rows)
    flagged = sum(int(np.sum(res[ch].flagged)) for ch in args.channels)
    print(f"{len(rows)} points identified, {flagged} below coherence {ident.COHERENCE_MIN}")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------

def cmd_verify(args) -> int:
    checks = acceptance.run(args.filter, echo=print)
    if not checks:
        print(f"no criterion matches {args.filter!r}", file=sys.stderr)
        return EXIT_CONFIG
    failed = sum(c.passed is False for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks without failure")
    return EXIT_OK if failed == 0 else 1


# --------------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vsgcc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def with_params(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--config", help="INI parameter file")
        g.add_argument("--params", choices=sorted(params.PRESETS), help="built-in parameter set")

    sp = sub.add_parser("design", help="tune kvi and kc for speed targets")
    with_params(sp)
    sp.add_argument("--target-rise-ms", type=float, help="10-95%% transition target in ms")
    sp.add_argument("--kc-real", type=float, help="real part of kc on the placement ray (default 1)")
    sp.add_argument("--kvi", type=float, help="pin kvi and skip the search")
    sp.add_argument("--out", help="directory for design.csv")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("analyze", help="poles, root locus, Nyquist margins or closed-loop responses")
    with_params(sp)
    sp.add_argument("--what", required=True, choices=("poles", "rootlocus", "nyquist", "clfr"))
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--full", action="store_true", help="poles of the linearized full model")
    sp.add_argument("--param", default="kvi", choices=analysis.SWEEPABLE, help="root-locus parameter")
    sp.add_argument("--range", type=float, nargs=2, default=(10.0, 5000.0), metavar=("LO", "HI"))
    sp.add_argument("--count", type=int, default=200)
    sp.add_argument("--points", type=int, default=2000)
    sp.add_argument("--f-lo", type=float, default=0.5)
    sp.add_argument("--f-hi", type=float, default=500.0)
    sp.add_argument("--p0", type=float, default=0.0, help="active power dispatch of the operating point")
    sp.add_argument("--channels", type=lambda s: s.split(","), default=["v_d", "P_e"])
    sp.add_argument("--compensator", action="store_true", help="enable the angle compensator")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("simulate", help="run a nonlinear scenario")
    sp.add_argument("--config", help="INI parameters (and optionally a [scenario] section)")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--preset", help="named scenario: " + ", ".join(sorted(sim.scenario_presets())))
    g.add_argument("--scenario", help="INI file with parameters and a [scenario] section")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("identify", help="multi-tone identification against the linear model")
    with_params(sp)
    sp.add_argument("--freqs", type=_floats, default=list(ident.DEFAULT_FREQS))
    sp.add_argument("--amplitude", type=float, default=0.002)
    sp.add_argument("--window", type=float, default=2.0)
    sp.add_argument("--channels", type=lambda s: s.split(","), default=["v_d", "P_e"])
    sp.add_argument("--p0", type=float, default=0.0)
    sp.add_argument("--compensator", action="store_true")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_identify)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--filter", help="criterion number or title substring")
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TargetUnreachable as exc:
        print(f"target unreachable: {exc}", file=sys.stderr)
        return EXIT_TARGET
    except VsgError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
