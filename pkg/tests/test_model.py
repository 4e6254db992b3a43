import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vsgcc import dynamics as dyn
from vsgcc import model, oracles, params
from vsgcc.errors import InfeasibleOperatingPoint, ZeroImpedance
from vsgcc.lti import ComplexRational

SETS = {"base": params.base, "placed": params.placed, "small_filter": params.small_filter,
        "so_tuned": params.so_tuned, "experiment": params.experiment}


@pytest.mark.parametrize("name", sorted(SETS))
def test_closed_form_equals_block_algebra(name):
    p = SETS[name]()
    tf, _ = model.voltage_closed_loop(p)
    fb = model.voltage_open_loop(p).feedback()
    uncomp = model.compensated_closed_loop(p, ComplexRational.const(0))
    for w in (-700.0, -30.0, 3.0, 50.0, 700.0):
        ref = tf(1j * w)
        assert abs(fb(1j * w) - ref) <= 1e-10 * abs(ref)
        assert abs(uncomp(1j * w) - ref) <= 1e-10 * abs(ref)


def test_ctf_dc_gain_is_unity():
    tf, _ = model.voltage_closed_loop(params.placed())
    assert tf.dcgain() == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["base", "placed", "so_tuned"])
@pytest.mark.parametrize("mode", ["swing", "droop"])
@pytest.mark.parametrize("comp", [False, True])
def test_jacobian_matches_central_differences(name, mode, comp):
    p = SETS[name]().replace(power_loop=mode, compensator=comp)
    op = model.steady_state(p, P_ref=0.4)
    A, B, _, _ = model._full_jacobian(p, op)
    Jx, Ju = oracles.numeric_jacobian(p, op.x0, op.u0)
    assert np.max(np.abs(A - Jx)) <= 1e-8 * np.max(np.abs(A))
    # input order differs: (v_dr, P_r, ..., dw_g) vs kernel (E_ref, P_ref, Q_ref, V_grid, dw_grid)
    for k_lin, k_num in ((0, dyn.E_REF), (1, dyn.P_REF), (4, dyn.DW_GRID)):
        col = Ju[:, k_num]
        assert np.max(np.abs(B[:, k_lin] - col)) <= 1e-7 * max(1.0, np.max(np.abs(col)))


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(0.9, 1.1), st.floats(0.1, 1.2), st.floats(0.0, 0.5))
def test_steady_state_is_an_equilibrium(P, V, Xg, Rg):
    p = params.base().replace(Xg=Xg, Rg=Rg)
    z = abs(complex(Rg, Xg))
    # keep the dispatch inside the transferable range of the lossy line
    p_max = V * V / z - V * V * Rg / z ** 2
    if not -0.9 * (V * V / z + V * V * Rg / z ** 2) < P < 0.9 * p_max:
        return
    op = model.steady_state(p, P_ref=P, V_ref=V)
    r = dyn.rates(op.x0, p, op.u0)
    assert np.max(np.abs(r[10:])) < 1e-8
    assert (op.vc0 * np.conj(op.ig0)).real == pytest.approx(P, abs=1e-10)
    assert abs(op.vc0) == pytest.approx(V)


def test_operating_point_with_high_resistance_line():
    p = params.base().replace(Rg=0.4, Xg=0.1)
    op = model.steady_state(p, P_ref=0.0)
    assert abs(op.ig0) < 1e-9
    op = model.steady_state(p, P_ref=0.5)
    assert op.P0 == pytest.approx(0.5)


def test_infeasible_dispatch_and_zero_impedance():
    with pytest.raises(InfeasibleOperatingPoint):
        model.steady_state(params.base(), P_ref=5.0)
    with pytest.raises(ZeroImpedance):
        model.steady_state(params.base().replace(Xg=0.0))


def test_power_coupling_row_matches_linear_power():
    p = params.placed()
    op = model.steady_state(p, P_ref=0.5)
    d, q = model.power_coupling_row(op, p)
    # at DC, dP from a d-axis voltage perturbation with the grid fixed
    ig = lambda v: (v - p.Vg * np.exp(-1j * op.delta0)) / (p.Rg + 1j * p.Xg)
    h = 1e-7
    dp = ((op.vc0 + h) * np.conj(ig(op.vc0 + h))).real - ((op.vc0 - h) * np.conj(ig(op.vc0 - h))).real
    assert complex(d(0.0)).real == pytest.approx(dp / (2 * h), rel=1e-6)
    assert np.isfinite(complex(q(10j)))


def test_full_model_reduces_inert_states():
    sys_full = model.full_ssm(params.so_tuned(), reduce=False)
    sys_red = model.full_ssm(params.so_tuned())
    assert sys_red.n_states < sys_full.n_states
    assert "xi_d" not in sys_red.state_names
    ev_red = sys_red.eigenvalues()
    ev_full = sys_full.eigenvalues()
    for z in ev_red:
        assert np.min(np.abs(ev_full - z)) < 1e-6 * max(1.0, abs(z))


def test_rigid_voltage_swing_poles():
    p = params.experiment().with_kc(params.PLACED_KC)
    op = model.steady_state(p)
    hi, lo = model.rigid_voltage_swing_poles(p, op)
    k = abs(op.vc0) * p.Vg * np.cos(op.delta0) / p.Xg
    for z in (hi, lo):
        assert abs(2 * p.H * z * z + p.D * z + p.omega1 * k) < 1e-9 * p.omega1 * k
    assert hi.imag > 0 and hi == pytest.approx(np.conj(lo))
