"""Nonlinear average-model equations of the grid-connected VSG.

The state vector is a flat float array expressed in the inverter dq frame.
Its layout is fixed so the same kernel serves the simulator, the steady
state checks and the Jacobian oracle.

=====  ===========================================================
slot   meaning
=====  ===========================================================
0, 1   converter (filter) current ``is``
2, 3   PoC capacitor voltage ``vc``
4, 5   grid current ``ig``
6, 7   voltage PI integrator
8, 9   current PI integrator
10     voltage-angle compensator state (real)
11     relative angle ``theta - theta_g`` (rad)
12     swing speed deviation (p.u.); unused in droop mode
13     reactive droop filter state
=====  ===========================================================

The input vector holds ``[E_ref, P_ref, Q_ref, V_grid, dw_grid]``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .params import VsgParams

N_STATE = 14
IS, VC, IG, XV, XI = 0, 2, 4, 6, 8
XC, DELTA, DW, XQ = 10, 11, 12, 13
STATE_NAMES = ("is_d", "is_q", "vc_d", "vc_q", "ig_d", "ig_q", "xv_d", "xv_q",
               "xi_d", "xi_q", "x_comp", "delta", "domega", "x_q")

N_INPUT = 5
E_REF, P_REF, Q_REF, V_GRID, DW_GRID = range(N_INPUT)

# packed parameter vector
(P_OMEGA1, P_XS, P_XG, P_RG, P_BC, P_KIP, P_KII, P_KVP, P_KVI, P_BVR, P_BVI,
 P_BK, P_H, P_D, P_KQ, P_WQ, P_XF, P_BF, P_MODE, P_KD, P_COMP) = range(21)
N_PARAM = 21

V_GUARD = 10.0
I_GUARD = 20.0


def pack(p: VsgParams) -> np.ndarray:
    """Flatten a :class:`VsgParams` into the kernel parameter vector."""
    return np.array([
        p.omega1, p.Xs, p.Xg, p.Rg, p.Bc, p.kip, p.kii, p.kvp, p.kvi,
        p.beta_v.real, p.beta_v.imag, p.beta_k, p.H, p.D, p.Kq, p.omegaQ,
        p.Xf, p.Bf, 1.0 if p.power_loop == "droop" else 0.0, p.kd,
        1.0 if p.compensator else 0.0,
    ], dtype=np.float64)


@njit(cache=True)
def terminal_quantities(x):
    """Active and reactive power delivered at the PoC, ``vc * conj(ig)``."""
    vd, vq, gd, gq = x[2], x[3], x[4], x[5]
    return vd * gd + vq * gq, vq * gd - vd * gq


@njit(cache=True)
def speed_deviation(x, p, u):
    """Power-loop speed deviation (state in swing mode, algebraic in droop)."""
    if p[P_MODE] > 0.5:
        pe, _ = terminal_quantities(x)
        return p[P_KD] * (u[P_REF] - pe)
    return x[DW]


@njit(cache=True)
def derivatives(x, p, u, out):
    """Write ``dx/dt`` into ``out``; the frame spins at ``omega1 * w``."""
    w1 = p[P_OMEGA1]
    i_s = complex(x[0], x[1])
    vc = complex(x[2], x[3])
    ig = complex(x[4], x[5])
    xv = complex(x[6], x[7])
    xi = complex(x[8], x[9])
    xc = x[XC]
    delta = x[DELTA]
    xq = x[XQ]
    bv = complex(p[P_BVR], p[P_BVI])

    pe = vc.real * ig.real + vc.imag * ig.imag
    qe = vc.imag * ig.real - vc.real * ig.imag

    vr = u[E_REF] + xq
    ev = vr - vc
    i_ref = p[P_KVP] * ev + xv + 1j * p[P_BF] * vc + bv * ig
    ei = i_ref - p[P_BK] * i_s
    vs = p[P_KIP] * ei + xi + 1j * p[P_XF] * i_s

    # compensator: a first-order lag on the d-axis error whose rate rotates the frame
    comp_rate = 0.0
    if p[P_COMP] > 0.5:
        comp_rate = p[P_KIP] * p[P_KVI] * (ev.real - xc)
    dw = speed_deviation(x, p, u)
    w = 1.0 + dw - comp_rate / w1

    ls = p[P_XS] / w1
    cf = p[P_BC] / w1
    lg = p[P_XG] / w1
    vn = u[V_GRID] * complex(np.cos(delta), -np.sin(delta))

    dis = (vs - vc - 1j * w * p[P_XS] * i_s) / ls
    dvc = (i_s - ig - 1j * w * p[P_BC] * vc) / cf
    dig = (vc - vn - (p[P_RG] + 1j * w * p[P_XG]) * ig) / lg
    dxv = p[P_KVI] * ev
    dxi = p[P_KII] * ei

    out[0] = dis.real
    out[1] = dis.imag
    out[2] = dvc.real
    out[3] = dvc.imag
    out[4] = dig.real
    out[5] = dig.imag
    out[6] = dxv.real
    out[7] = dxv.imag
    out[8] = dxi.real
    out[9] = dxi.imag
    out[XC] = comp_rate
    out[DELTA] = w1 * (dw - u[DW_GRID]) - comp_rate
    if p[P_MODE] > 0.5:
        out[DW] = 0.0
    else:
        out[DW] = (u[P_REF] - pe - p[P_D] * dw) / (2.0 * p[P_H])
    out[XQ] = p[P_WQ] * (p[P_KQ] * (u[Q_REF] - qe) - xq)


def rates(x: np.ndarray, params: VsgParams | np.ndarray, u: np.ndarray) -> np.ndarray:
    """Convenience wrapper returning a fresh derivative array."""
    pv = pack(params) if isinstance(params, VsgParams) else params
    out = np.empty(N_STATE)
    derivatives(np.asarray(x, dtype=np.float64), pv, np.asarray(u, dtype=np.float64), out)
    return out


@njit(cache=True)
def _inputs_at(t, u0, ramp, tones, uout):
    for i in range(u0.size):
        uout[i] = u0[i]
    # grid frequency ramp: ramp = (t_start, duration, start, target)
    if ramp[1] >= 0.0:
        if t <= ramp[0]:
            uout[DW_GRID] = ramp[2]
        elif ramp[1] == 0.0 or t >= ramp[0] + ramp[1]:
            uout[DW_GRID] = ramp[3]
        else:
            uout[DW_GRID] = ramp[2] + (ramp[3] - ramp[2]) * (t - ramp[0]) / ramp[1]
    for k in range(tones.shape[0]):
        uout[E_REF] += tones[k, 1] * np.sin(2.0 * np.pi * tones[k, 0] * (t - tones[k, 3]) + tones[k, 2])


@njit(cache=True)
def integrate_segment(x, p, u0, ramp, tones, t0, dt, nsteps):
    """Advance ``x`` in place by ``nsteps`` RK4 steps of size ``dt``.

    Inputs are sampled at the stage times (time-varying ramp and tones).
    Returns the number of completed steps; fewer than ``nsteps`` means the
    divergence guard tripped.
    """
    n = x.size
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    ua = np.empty(u0.size)
    ub = np.empty(u0.size)
    uc = np.empty(u0.size)
    for step in range(nsteps):
        t = t0 + step * dt
        _inputs_at(t, u0, ramp, tones, ua)
        _inputs_at(t + 0.5 * dt, u0, ramp, tones, ub)
        _inputs_at(t + dt, u0, ramp, tones, uc)
        derivatives(x, p, ua, k1)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * dt * k1[i]
        derivatives(tmp, p, ub, k2)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * dt * k2[i]
        derivatives(tmp, p, ub, k3)
        for i in range(n):
            tmp[i] = x[i] + dt * k3[i]
        derivatives(tmp, p, uc, k4)
        for i in range(n):
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        vmag = np.sqrt(x[2] * x[2] + x[3] * x[3])
        imag = max(np.sqrt(x[0] * x[0] + x[1] * x[1]), np.sqrt(x[4] * x[4] + x[5] * x[5]))
        if not (np.isfinite(vmag) and np.isfinite(imag)) or vmag > V_GUARD or imag > I_GUARD:
            return step + 1
    return nsteps
