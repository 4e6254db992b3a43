"""Event-driven nonlinear simulation of the VSG against an infinite bus."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import dynamics as dyn
from . import model
from .errors import ConfigError
from .params import PLACED_KC, VsgParams, base, experiment, so_tuned

ACTIONS = ("step_v_ref", "step_p_ref", "set_kc", "set_beta_v", "phase_jump", "set_Xg",
           "ramp_grid_freq", "toggle_compensator")

COLUMNS = ("t", "v_cd", "v_cq", "i_gd", "i_gq", "i_sd", "i_sq", "P_e", "Q_e",
           "theta_rel", "omega_pu", "Ig_mag", "Vc_mag")


@dataclass(frozen=True)
class Event:
    """Scheduled action; ``value`` meaning depends on ``action``.

    ``ramp_grid_freq`` takes ``(delta_pu, ramp_seconds)``; ``phase_jump``
    takes degrees added to the grid angle; ``toggle_compensator`` ignores
    ``value``.
    """

    time: float
    action: str
    value: object = None

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ConfigError(f"unknown event action {self.action!r}; known: {ACTIONS}")


@dataclass(frozen=True)
class Tone:
    freq_hz: float
    amplitude: float
    phase: float = 0.0


@dataclass(frozen=True)
class Scenario:
    params: VsgParams
    duration: float
    P_ref: float = 0.0
    Q_ref: float = 0.0
    V_ref: float = 1.0
    V_grid: float = 1.0
    dw_grid: float = 0.0
    dt: float = 20e-6
    sample_dt: float = 1e-4
    events: tuple = ()
    tones: tuple = ()
    tone_start: float = 0.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "tones", tuple(self.tones))
        self.validate()

    def validate(self) -> None:
        if not 0 < self.dt <= 100e-6:
            raise ConfigError("dt must lie in (0, 100 us]")
        if self.sample_dt < self.dt:
            raise ConfigError("sample_dt must not be shorter than dt")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        last = -np.inf
        for ev in self.events:
            if ev.time < last:
                raise ConfigError("event times must be non-decreasing")
            if not 0 <= ev.time < self.duration:
                raise ConfigError(f"event at {ev.time} s lies outside [0, duration)")
            last = ev.time


@dataclass
class TimeSeries:
    """Decimated simulation record in the inverter dq frame."""

    columns: dict
    sample_dt: float
    unstable: bool = False
    name: str = ""
    events: tuple = ()

    def __getitem__(self, key: str) -> np.ndarray:
        return self.columns[key]

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    def __len__(self) -> int:
        return self.columns["t"].size

    def window(self, t0: float, t1: float) -> "TimeSeries":
        sel = (self.t >= t0) & (self.t <= t1)
        return TimeSeries({k: v[sel] for k, v in self.columns.items()}, self.sample_dt,
                          self.unstable, self.name, self.events)

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.columns[c] for c in COLUMNS])

    def steady_frame(self, delta0: float) -> dict[str, np.ndarray]:
        """Voltage and current columns rotated by ``theta_rel - delta0``.

        This is the frame in which the linearized model reports its outputs.
        """
        rot = np.exp(1j * (self.columns["theta_rel"] - delta0))
        vc = (self.columns["v_cd"] + 1j * self.columns["v_cq"]) * rot
        ig = (self.columns["i_gd"] + 1j * self.columns["i_gq"]) * rot
        return {"v_cd": vc.real, "v_cq": vc.imag, "i_gd": ig.real, "i_gq": ig.imag,
                "P_e": self.columns["P_e"], "Q_e": self.columns["Q_e"]}


def _apply(event: Event, p: VsgParams, u: np.ndarray, x: np.ndarray, ramp: np.ndarray, t: float):
    a, v = event.action, event.value
    if a == "step_v_ref":
        u[dyn.E_REF] += float(v)
    elif a == "step_p_ref":
        u[dyn.P_REF] += float(v)
    elif a == "set_kc":
        kc = complex(v)
        p = p.with_kc(kc) if kc.imag != 0 else p.with_real_kc(kc.real)
    elif a == "set_beta_v":
        p = p.replace(beta_v=complex(v))
    elif a == "phase_jump":
        x[dyn.DELTA] -= np.radians(float(v))
    elif a == "set_Xg":
        p = p.replace(Xg=float(v))
    elif a == "ramp_grid_freq":
        dpu, dur = v
        current = u[dyn.DW_GRID] if ramp[1] < 0 else ramp[3]
        ramp[:] = (t, float(dur), current, current + float(dpu))
    elif a == "toggle_compensator":
        p = p.replace(compensator=not p.compensator)
    return p


def initial_state(sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    op = model.steady_state(sc.params, P_ref=sc.P_ref, V_ref=sc.V_ref, Q_ref=sc.Q_ref, Vg=sc.V_grid)
    u = op.u0.copy()
    u[dyn.DW_GRID] = sc.dw_grid
    x = op.x0.copy()
    if sc.dw_grid != 0:
        x[dyn.DW] = sc.dw_grid
    return x, u


def run(sc: Scenario, x0: np.ndarray | None = None) -> TimeSeries:
    """Fixed-step RK4 simulation with events applied at their exact times.

    Integration intervals end at every sample and event instant; each is
    covered by equal sub-steps no longer than ``dt``.  If ``|vc|`` exceeds
    the divergence guard the record is truncated and flagged unstable.
    """
    p = sc.params
    x, u = initial_state(sc)
    if x0 is not None:
        x = np.array(x0, dtype=float)
    pv = dyn.pack(p)
    ramp = np.array([0.0, -1.0, 0.0, 0.0])
    tones = np.zeros((len(sc.tones), 4))
    for k, tn in enumerate(sc.tones):
        tones[k] = (tn.freq_hz, tn.amplitude, tn.phase, sc.tone_start)

    n_samples = int(np.floor(sc.duration / sc.sample_dt + 1e-9)) + 1
    sample_times = np.arange(n_samples) * sc.sample_dt
    states = np.empty((n_samples, dyn.N_STATE))
    inputs = np.empty((n_samples, dyn.N_INPUT))
    omega = np.empty(n_samples)
    ev_iter = list(sc.events)
    ei = 0
    t = 0.0
    unstable = False
    u_now = np.empty(dyn.N_INPUT)
    rate = np.empty(dyn.N_STATE)
    count = 0
    tol = 1e-12

    def record(k, t):
        dyn._inputs_at(t, u, ramp, tones, u_now)
        dyn.derivatives(x, pv, u_now, rate)
        states[k] = x
        inputs[k] = u_now
        omega[k] = 1.0 + rate[dyn.DELTA] / p.omega1 + u_now[dyn.DW_GRID]

    for k in range(n_samples):
        ts = sample_times[k]
        while True:
            # events due before (or at) this sample
            target = ts
            if ei < len(ev_iter) and ev_iter[ei].time < ts - tol:
                target = ev_iter[ei].time
            if target > t + tol:
                nsteps = int(np.ceil((target - t) / sc.dt - 1e-9))
                h = (target - t) / nsteps
                done = dyn.integrate_segment(x, pv, u, ramp, tones, t, h, nsteps)
                if done < nsteps:
                    unstable = True
                    break
                t = target
            while ei < len(ev_iter) and ev_iter[ei].time <= t + tol:
                p = _apply(ev_iter[ei], p, u, x, ramp, t)
                pv = dyn.pack(p)
                ei += 1
            if target >= ts - tol:
                break
        if unstable:
            break
        record(k, ts)
        count = k + 1

    st = states[:count]
    inp = inputs[:count]
    vc = st[:, 2] + 1j * st[:, 3]
    ig = st[:, 4] + 1j * st[:, 5]
    i_s = st[:, 0] + 1j * st[:, 1]
    s = vc * np.conj(ig)
    cols = {
        "t": sample_times[:count],
        "v_cd": vc.real, "v_cq": vc.imag,
        "i_gd": ig.real, "i_gq": ig.imag,
        "i_sd": i_s.real, "i_sq": i_s.imag,
        "P_e": s.real, "Q_e": s.imag,
        "theta_rel": st[:, dyn.DELTA],
        "omega_pu": omega[:count],
        "Ig_mag": np.abs(ig), "Vc_mag": np.abs(vc),
    }
    ts_out = TimeSeries(cols, sc.sample_dt, unstable, sc.name, sc.events)
    ts_out.states = st
    ts_out.inputs = inp
    return ts_out


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------

def _variant(case: str) -> VsgParams:
    """Controller variants compared on the nominal circuit."""
    b = base()
    return {
        "i": b.replace(kvi=200.0),
        "ii": b.replace(kvi=200.0, compensator=True),
        "iii": b.with_kc(PLACED_KC),
        "iv": b.with_kc(PLACED_KC).replace(compensator=True),
    }[case]


def _droop_strong(Xg: float) -> VsgParams:
    return experiment().with_kc(PLACED_KC).replace(Xg=Xg, power_loop="droop", kd=0.05)


def dispatch_for_angle_change(p: VsgParams, Xg_after: float, degrees: float, V: float = 1.0) -> float:
    """Active power at which switching ``Xg`` to ``Xg_after`` shifts the steady angle by ``degrees``."""
    from scipy.optimize import brentq

    after = p.replace(Xg=Xg_after)
    target = np.radians(degrees)

    def gap(P):
        d0 = model.steady_state(p, P_ref=P, V_ref=V, Vg=V).delta0
        d1 = model.steady_state(after, P_ref=P, V_ref=V, Vg=V).delta0
        return d1 - d0 - target

    # upper bracket just inside the transferable limit of the weaker grid
    hi = 0.999 * V * V / max(Xg_after, p.Xg)
    return float(brentq(gap, 1e-6, hi, xtol=1e-12))


def scenario_presets() -> dict[str, Scenario]:
    """Named scenarios reproducing the standard test matrix."""
    out = {}
    out["so_tuned"] = Scenario(so_tuned(), 3.0, events=(Event(1.0, "step_v_ref", 0.05),), name="so_tuned")
    out["base_high_kvi"] = Scenario(base(), 1.5, events=(Event(0.5, "step_v_ref", 0.05),), name="base_high_kvi")
    out["mu_transition"] = Scenario(
        base().with_real_kc(0.35), 2.0,
        events=(Event(0.2, "step_v_ref", 0.1), Event(1.0, "set_kc", 0.40)), name="mu_transition")
    for case in ("i", "ii", "iii", "iv"):
        out[f"config_v_step_{case}"] = Scenario(
            _variant(case), 2.0, events=(Event(1.3, "step_v_ref", 0.1),), name=f"config_v_step_{case}")
        out[f"config_p_step_{case}"] = Scenario(
            _variant(case), 2.3, events=(Event(1.3, "step_p_ref", 0.1),), name=f"config_p_step_{case}")
    exp_stable = experiment().with_real_kc(0.35)
    out["exp_instability"] = Scenario(
        exp_stable, 0.8,
        events=(Event(0.3, "set_kc", 0.05), Event(0.3, "step_v_ref", 0.1), Event(0.4, "set_kc", PLACED_KC)),
        name="exp_instability")
    exp_placed = experiment().with_kc(PLACED_KC)
    out["exp_comp_swing"] = Scenario(
        exp_placed.replace(compensator=True), 1.0, events=(Event(0.3, "step_v_ref", 0.1),), name="exp_comp_swing")
    out["exp_comp_droop"] = Scenario(
        exp_placed.replace(compensator=True, power_loop="droop", kd=0.1), 1.0,
        events=(Event(0.3, "step_v_ref", 0.1),), name="exp_comp_droop")
    strong = _droop_strong(0.04)
    out["strong_grid_vstep"] = Scenario(strong, 1.0, V_ref=0.98, V_grid=0.98,
                                        events=(Event(0.3, "step_v_ref", 0.02),), name="strong_grid_vstep")
    out["strong_grid_pstep"] = Scenario(strong, 1.5, V_ref=0.98, V_grid=0.98,
                                        events=(Event(0.3, "step_p_ref", 0.5),), name="strong_grid_pstep")
    out["phase_jump_60"] = Scenario(_droop_strong(0.6), 1.0, V_ref=0.98, V_grid=0.98,
                                    events=(Event(0.3, "phase_jump", 60.0),), name="phase_jump_60")
    x_par = 0.04 * 0.9 / (0.04 + 0.9)
    pj = _droop_strong(x_par)
    out["reactance_jump"] = Scenario(pj, 1.0, P_ref=dispatch_for_angle_change(pj, 0.9, 60.0, 0.98),
                                     V_ref=0.98, V_grid=0.98,
                                     events=(Event(0.3, "set_Xg", 0.9),), name="reactance_jump")
    out["freq_drop_1pct"] = Scenario(exp_placed, 2.0,
                                     events=(Event(0.3, "ramp_grid_freq", (-0.01, 0.0)),), name="freq_drop_1pct")
    return out


def preset_scenario(name: str) -> Scenario:
    presets = scenario_presets()
    if name not in presets:
        raise ConfigError(f"unknown scenario preset {name!r}; available: {sorted(presets)}")
    return presets[name]
