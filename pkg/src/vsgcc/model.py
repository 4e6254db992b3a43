"""Transfer functions, operating point and small-signal model of the VSG."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import dynamics as dyn
from .errors import InfeasibleOperatingPoint, ZeroImpedance
from .lti import ComplexRational, PoleGeometry, RealStateSpace, pole_geometry
from .params import VsgParams

S = ComplexRational.s()


# --------------------------------------------------------------------------
# controller and circuit blocks
# --------------------------------------------------------------------------

def voltage_pi(p: VsgParams, simplified: bool = True) -> ComplexRational:
    """``kvi/s`` (simplified) or ``kvp + kvi/s``."""
    kvp = 0.0 if simplified else p.kvp
    return ComplexRational([p.kvi, kvp], [0.0, 1.0])


def current_pi(p: VsgParams, simplified: bool = True) -> ComplexRational:
    """``kip`` (simplified) or ``kip + kii/s``."""
    if simplified or p.kii == 0:
        return ComplexRational.const(p.kip)
    return ComplexRational([p.kii, p.kip], [0.0, 1.0])


def grid_admittance(p: VsgParams, Rg: float | None = None) -> ComplexRational:
    """``1 / (s Lg + Rg + j Xg)``."""
    r = p.Rg if Rg is None else Rg
    return ComplexRational([1.0], [r + 1j * p.Xg, p.Lg])


def plant_open_loop(p: VsgParams, Rg: float | None = None) -> ComplexRational:
    """Composed plant ``(s Ls + kc kip) / (Rg + (s + j omega1) Lg)``."""
    if p.Xg <= 0:
        raise ZeroImpedance("Xg = 0: the grid branch has no inductance")
    r = p.Rg if Rg is None else Rg
    return ComplexRational([p.kc * p.kip, p.Ls], [r + 1j * p.Xg, p.Lg])


def voltage_open_loop(p: VsgParams, Rg: float | None = 0.0) -> ComplexRational:
    """``Ci Cv / (L_P + 1)`` under the simplified controller contract."""
    lp = plant_open_loop(p, Rg)
    return current_pi(p) * voltage_pi(p) / (lp + 1)


def minor_loop_gain(p: VsgParams, Rg: float | None = None) -> ComplexRational:
    """Inverse of the voltage open loop, ``(L_P + 1) / (Ci Cv)``."""
    lp = plant_open_loop(p, Rg)
    return (lp + 1) / (current_pi(p) * voltage_pi(p))


def closed_loop_coefficients(p: VsgParams) -> tuple[complex, complex, complex, complex, complex]:
    """``(a0, a1, a2, b0, b1)`` of the lossless second-order voltage loop."""
    kc = p.kc
    a0 = 1j * p.Xg * p.kip * p.kvi
    a1 = kc.real * p.kip + p.Lg * p.kip * p.kvi + 1j * (p.Xg + kc.imag * p.kip)
    a2 = p.Lg + p.Ls
    b1 = p.Lg * p.kip * p.kvi
    return a0, a1, complex(a2), a0, complex(b1)


def voltage_closed_loop(p: VsgParams) -> tuple[ComplexRational, PoleGeometry]:
    """Closed voltage loop ``(b1 s + b0)/(a2 s^2 + a1 s + a0)`` and its geometry.

    The grid resistance is neglected and the controllers are ``Cv = kvi/s``
    and ``Ci = kip``.
    """
    if p.Xg <= 0:
        raise ZeroImpedance("Xg = 0: the closed-loop family is undefined")
    a0, a1, a2, b0, b1 = closed_loop_coefficients(p)
    tf = ComplexRational([b0, b1], [a0, a1, a2])
    return tf, pole_geometry(a0, a1, a2)


def compensator_ctf(p: VsgParams) -> ComplexRational:
    """First-order voltage-angle compensator ``1 / (1 + s/(kip kvi))``."""
    corner = p.kip * p.kvi
    return ComplexRational([1.0], [1.0, 1.0 / corner])


def compensated_closed_loop(p: VsgParams, compensator: ComplexRational | None = None) -> ComplexRational:
    """Closed loop of ``(Ci Cv - j C_vtheta)/(L_P + 1)``.

    ``compensator`` overrides the default first-order form; pass
    ``ComplexRational.const(0)`` to recover the uncompensated loop.
    """
    cvt = compensator_ctf(p) if compensator is None else compensator
    lp = plant_open_loop(p, Rg=0.0)
    forward = current_pi(p) * voltage_pi(p) - 1j * cvt
    return (forward / (lp + 1)).feedback(1.0)


def g_theta_v(p: VsgParams, op: "OperatingPoint", simplified: bool = True) -> ComplexRational:
    """Frame-rotation term ``[(Ci^-1 + Cv) vc0 + kc ig0] Ci``."""
    ci = current_pi(p, simplified)
    cv = voltage_pi(p, simplified)
    return (ci.inv() * op.vc0 + cv * op.vc0 + p.kc * op.ig0) * ci


def tg_full(p: VsgParams) -> ComplexRational:
    """Grid-side loading factor including the filter capacitor."""
    ci = current_pi(p, simplified=False)
    xdelta = p.Xs - p.Xf
    yg = grid_admittance(p)
    gcf = ComplexRational([1j * p.Bc, p.Cf], [1.0])
    return 1 + (S * p.Ls + ci * p.kc + 1j * xdelta) * yg + (S * p.Ls + ci * p.beta_k + 1j * xdelta) * gcf


def tg_approx(p: VsgParams) -> ComplexRational:
    """``1 + (s Ls + kc Ci) Yg``: capacitor and decoupling mismatch dropped."""
    ci = current_pi(p, simplified=False)
    return 1 + (S * p.Ls + ci * p.kc) * grid_admittance(p)


def power_droop_ctf(p: VsgParams) -> ComplexRational:
    """Angle response to power error: swing ``omega1/(2H s^2 + D s)`` or droop ``kd omega1/s``."""
    if p.power_loop == "droop":
        return ComplexRational([p.kd * p.omega1], [0.0, 1.0])
    return ComplexRational([p.omega1], [0.0, p.D, 2 * p.H])


def reactive_droop_ctf(p: VsgParams) -> ComplexRational:
    return ComplexRational([p.Kq * p.omegaQ], [p.omegaQ, 1.0])


@dataclass(frozen=True, eq=False)
class LoopSet:
    L_P: ComplexRational
    G_open: ComplexRational
    G_cl: ComplexRational
    G_cl_comp: ComplexRational
    C_v: ComplexRational
    C_i: ComplexRational
    C_vtheta: ComplexRational
    C_P: ComplexRational
    C_Q: ComplexRational
    G_theta_v: ComplexRational
    T_g_full: ComplexRational
    T_g_approx: ComplexRational


def loop_set(p: VsgParams, op: "OperatingPoint | None" = None) -> LoopSet:
    """Every analytical transfer function for one parameter record."""
    op = steady_state(p) if op is None else op
    g_cl, _ = voltage_closed_loop(p)
    return LoopSet(
        L_P=plant_open_loop(p, Rg=0.0),
        G_open=voltage_open_loop(p),
        G_cl=g_cl,
        G_cl_comp=compensated_closed_loop(p),
        C_v=voltage_pi(p),
        C_i=current_pi(p),
        C_vtheta=compensator_ctf(p),
        C_P=power_droop_ctf(p),
        C_Q=reactive_droop_ctf(p),
        G_theta_v=g_theta_v(p, op),
        T_g_full=tg_full(p),
        T_g_approx=tg_approx(p),
    )


# --------------------------------------------------------------------------
# operating point
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatingPoint:
    """Steady state in the inverter frame aligned with the PoC voltage."""

    vc0: complex
    ig0: complex
    is0: complex
    delta0: float
    P0: float
    Q0: float
    vs0: complex
    x0: np.ndarray
    u0: np.ndarray


def _grid_current(V: float, delta: float, Vg: float, p: VsgParams) -> complex:
    return (V - Vg * np.exp(-1j * delta)) / (p.Rg + 1j * p.Xg)


def _power_at(V, delta, Vg, p):
    ig = _grid_current(V, delta, Vg, p)
    return float((V * np.conj(ig)).real)


def _angle_for_power(P: float, V: float, Vg: float, p: VsgParams) -> float:
    # P(delta) ~ -cos(delta + arg z): maximum at pi - arg z, minimum at -arg z
    theta_z = float(np.angle(p.Rg + 1j * p.Xg))
    d_max = np.pi - theta_z
    p_max = _power_at(V, d_max, Vg, p)
    p_min = _power_at(V, d_max - np.pi, Vg, p)
    if not p_min < P < p_max:
        raise InfeasibleOperatingPoint(
            f"P_ref = {P:g} outside the transferable range ({p_min:.4g}, {p_max:.4g})")
    return brentq(lambda d: _power_at(V, d, Vg, p) - P, d_max - np.pi, d_max, xtol=1e-15, rtol=1e-15)


def steady_state(p: VsgParams, P_ref: float = 0.0, V_ref: float = 1.0,
                 Q_ref: float = 0.0, Vg: float | None = None) -> OperatingPoint:
    """Equilibrium of the nonlinear model at nominal grid frequency.

    The PoC voltage equals ``V_ref`` (integral voltage control) unless the
    reactive droop is active, in which case the voltage is found by a scalar
    root search.  Residual of the nonlinear derivatives is checked below
    ``1e-10``.
    """
    if p.Xg <= 0:
        raise ZeroImpedance("Xg = 0: no grid branch to carry the dispatch")
    vg = p.Vg if Vg is None else Vg

    def solve(V):
        d = _angle_for_power(P_ref, V, vg, p)
        ig = _grid_current(V, d, vg, p)
        return d, ig

    V = V_ref
    if p.Kq != 0:
        def excess(V):
            d, ig = solve(V)
            q = float((V * np.conj(ig)).imag)
            return V - (V_ref + p.Kq * (Q_ref - q))
        lo, hi = 0.5 * V_ref, 1.5 * V_ref
        try:
            V = brentq(excess, lo, hi, xtol=1e-15)
        except ValueError as exc:
            raise InfeasibleOperatingPoint(f"no voltage satisfies the reactive droop: {exc}") from exc
    delta, ig = solve(V)
    vc = complex(V, 0.0)
    i_s = ig + 1j * p.Bc * vc
    vs = vc + 1j * p.Xs * i_s
    x = np.zeros(dyn.N_STATE)
    x[0], x[1] = i_s.real, i_s.imag
    x[2], x[3] = vc.real, vc.imag
    x[4], x[5] = ig.real, ig.imag
    if p.kii > 0:
        xi = vs - 1j * p.Xf * i_s
        xv = p.beta_k * i_s - 1j * p.Bf * vc - p.beta_v * ig
    else:
        xi = 0j
        ei = (vs - 1j * p.Xf * i_s) / p.kip
        xv = ei + p.beta_k * i_s - 1j * p.Bf * vc - p.beta_v * ig
    x[6], x[7] = xv.real, xv.imag
    x[8], x[9] = xi.real, xi.imag
    x[dyn.XC] = 0.0
    x[dyn.DELTA] = delta
    x[dyn.DW] = 0.0
    q0 = float((vc * np.conj(ig)).imag)
    x[dyn.XQ] = p.Kq * (Q_ref - q0)
    u = np.array([V - x[dyn.XQ], P_ref, Q_ref, vg, 0.0])
    res = dyn.rates(x, p, u)
    # integrator rates are scaled by gains; compare them relative to those gains
    scale = np.ones(dyn.N_STATE)
    scale[6:8] = max(p.kvi, 1.0)
    scale[8:10] = max(p.kii, 1.0)
    scale[0:6] = 1.0 / np.array([p.Ls, p.Ls, p.Cf or 1.0, p.Cf or 1.0, p.Lg, p.Lg])
    resid = float(np.max(np.abs(res) / scale))
    if resid > 1e-10:
        raise InfeasibleOperatingPoint(f"equilibrium residual {resid:.3g} exceeds 1e-10")
    return OperatingPoint(vc0=vc, ig0=complex(ig), is0=complex(i_s), delta0=float(delta),
                          P0=float(P_ref), Q0=q0, vs0=complex(vs), x0=x, u0=u)


# --------------------------------------------------------------------------
# small-signal model
# --------------------------------------------------------------------------

SSM_INPUTS = ("v_dr", "P_r", "vn_d", "vn_q", "dw_g")
SSM_OUTPUTS = ("v_cd", "v_cq", "i_gd", "i_gq", "P_e", "Q_e", "theta")


class _Lin:
    """Complex linear forms over the real vector ``[x; u]``.

    A signal ``z`` is stored as the complex row ``c`` with ``dz = c @ [dx; du]``;
    real-valued signals simply have a real row.
    """

    def __init__(self, n: int, m: int):
        self.n, self.m = n, m

    def unit(self, k: int) -> np.ndarray:
        r = np.zeros(self.n + self.m, dtype=complex)
        r[k] = 1.0
        return r

    def cplx(self, k: int) -> np.ndarray:
        return self.unit(k) + 1j * self.unit(k + 1)

    def inp(self, k: int) -> np.ndarray:
        return self.unit(self.n + k)

    def zero(self) -> np.ndarray:
        return np.zeros(self.n + self.m, dtype=complex)


def _real_part(row: np.ndarray) -> np.ndarray:
    """Row of ``Re(z)`` for a complex signal row."""
    return row.real.astype(complex)


def _conj(row: np.ndarray) -> np.ndarray:
    return np.conj(row)


def _full_jacobian(p: VsgParams, op: OperatingPoint) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Analytic Jacobians ``(A, B, C, D)`` on the full 14-slot state."""
    n, m = dyn.N_STATE, len(SSM_INPUTS)
    L = _Lin(n, m)
    w1 = p.omega1
    x0 = op.x0
    is0 = complex(x0[0], x0[1])
    vc0 = complex(x0[2], x0[3])
    ig0 = complex(x0[4], x0[5])
    delta0 = float(x0[dyn.DELTA])
    vg0 = float(op.u0[dyn.V_GRID])

    d_is, d_vc, d_ig = L.cplx(0), L.cplx(2), L.cplx(4)
    d_xv, d_xi = L.cplx(6), L.cplx(8)
    d_xc, d_delta, d_dw, d_xq = L.unit(dyn.XC), L.unit(dyn.DELTA), L.unit(dyn.DW), L.unit(dyn.XQ)
    d_vr = L.inp(0) + d_xq
    d_pr = L.inp(1)
    d_vn_grid = L.inp(2) + 1j * L.inp(3)
    d_wg = L.inp(4)

    d_pe = _real_part(d_vc * np.conj(ig0) + vc0 * _conj(d_ig))
    d_qe = (d_vc * np.conj(ig0) + vc0 * _conj(d_ig)).imag.astype(complex)

    d_ev = d_vr - d_vc
    d_iref = p.kvp * d_ev + d_xv + 1j * p.Bf * d_vc + p.beta_v * d_ig
    d_ei = d_iref - p.beta_k * d_is
    d_vs = p.kip * d_ei + d_xi + 1j * p.Xf * d_is

    d_comp = p.kip * p.kvi * (_real_part(d_ev) - d_xc) if p.compensator else L.zero()
    if p.power_loop == "droop":
        d_speed = p.kd * (d_pr - d_pe)
    else:
        d_speed = d_dw
    d_w = d_speed - d_comp / w1

    vn0 = vg0 * np.exp(-1j * delta0)
    d_vn = d_vn_grid * np.exp(-1j * delta0) - 1j * vn0 * d_delta

    rows = [None] * n
    c_is = (d_vs - d_vc - 1j * p.Xs * (d_is + is0 * d_w)) / p.Ls
    c_vc = (d_is - d_ig - 1j * p.Bc * (d_vc + vc0 * d_w)) / p.Cf
    c_ig = (d_vc - d_vn - (p.Rg + 1j * p.Xg) * d_ig - 1j * p.Xg * ig0 * d_w) / p.Lg
    for k, c in ((0, c_is), (2, c_vc), (4, c_ig), (6, p.kvi * d_ev), (8, p.kii * d_ei)):
        rows[k] = c.real
        rows[k + 1] = c.imag
    rows[dyn.XC] = d_comp.real
    rows[dyn.DELTA] = (w1 * (d_speed - d_wg) - d_comp).real
    if p.power_loop == "droop":
        rows[dyn.DW] = np.zeros(n + m)
    else:
        rows[dyn.DW] = ((d_pr - d_pe - p.D * d_dw) / (2 * p.H)).real
    rows[dyn.XQ] = (p.omegaQ * (p.Kq * (-d_qe) - d_xq)).real
    J = np.vstack(rows)

    # outputs in the frame aligned with the steady inverter frame
    rot = 1j * d_delta
    out_rows = []
    for sig, x_ref in ((d_vc, vc0), (d_ig, ig0)):
        z = sig + x_ref * rot
        out_rows += [z.real, z.imag]
    out_rows += [d_pe.real, d_qe.real, d_delta.real]
    O = np.vstack(out_rows)
    return J[:, :n], J[:, n:], O[:, :n], O[:, n:]


def full_ssm(p: VsgParams, op: OperatingPoint | None = None, reduce: bool = True) -> RealStateSpace:
    """Linearized model with inputs ``(v_dr, P_r, vn_d, vn_q, dw_g)``.

    Outputs ``(v_cd, v_cq, i_gd, i_gq, P_e, Q_e, theta)`` are expressed in the
    grid-synchronous frame aligned with the steady inverter frame, using
    ``dx_s = dx_c + j x0 d_delta``.  With ``reduce`` the structurally inert
    slots (rows of ``[A B]`` identically zero, e.g. the current integrator
    when ``kii = 0``) are removed.
    """
    op = steady_state(p) if op is None else op
    A, B, C, D = _full_jacobian(p, op)
    keep = np.arange(A.shape[0])
    if reduce:
        # iterate: dropping a slot can leave others inert only via their own row
        inert = np.all(A == 0, axis=1) & np.all(B == 0, axis=1)
        keep = np.flatnonzero(~inert)
    names = tuple(dyn.STATE_NAMES[k] for k in keep)
    return RealStateSpace(A[np.ix_(keep, keep)], B[keep], C[:, keep], D,
                          SSM_INPUTS, SSM_OUTPUTS, names)


def power_coupling_row(op: OperatingPoint, p: VsgParams) -> tuple[ComplexRational, ComplexRational]:
    """Coefficients mapping ``(dv_cd, dv_cq)`` to ``dP_e`` through the grid branch.

    ``d = i_gd0 + (s Lg + Rg) v_cd0 / den``, ``q = i_gq0 + v_cd0 Xg / den``
    with ``den = (s Lg + Rg)^2 + Xg^2``.
    """
    z = ComplexRational([p.Rg, p.Lg], [1.0])
    den = z * z + p.Xg ** 2
    vcd0 = op.vc0.real
    d = op.ig0.real + z * vcd0 / den
    q = op.ig0.imag + ComplexRational.const(vcd0 * p.Xg) / den
    return d, q


def quasi_static_power_coefficients(V_s: float, V_r: float, X: float, delta0: float) -> tuple[float, float]:
    """``dP = a dV_s + b d_delta`` of the lossless two-bus power-angle curve."""
    return V_r / X * np.sin(delta0), V_s * V_r / X * np.cos(delta0)


def dominant_eigenvalue(sys: RealStateSpace) -> complex:
    """Eigenvalue with the largest real part (ties: largest |Im|, positive first)."""
    ev = sys.eigenvalues()
    return complex(max(ev, key=lambda z: (round(z.real, 9), abs(z.imag), z.imag)))


def rigid_voltage_swing_poles(p: VsgParams, op: OperatingPoint | None = None) -> tuple[complex, complex]:
    """Power-loop poles when the voltage loop is ideal and the line is lossless.

    Roots of ``2H s^2 + D s + omega1 K`` with the synchronizing coefficient
    ``K = V Vg cos(delta0) / Xg``; droop mode gives the single pole
    ``-kd omega1 K`` twice.
    """
    op = steady_state(p) if op is None else op
    vg = float(op.u0[dyn.V_GRID])
    k_sync = abs(op.vc0) * vg * np.cos(op.delta0) / p.Xg
    if p.power_loop == "droop":
        r = complex(-p.kd * p.omega1 * k_sync)
        return r, r
    roots = np.roots([2 * p.H, p.D, p.omega1 * k_sync]).astype(complex)
    hi, lo = sorted(roots, key=lambda z: -z.imag)
    return complex(hi), complex(lo)
