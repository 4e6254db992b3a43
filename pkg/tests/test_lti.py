import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vsgcc import lti, oracles
from vsgcc.errors import (DegenerateOrder, ImproperTransferFunction, SingularEvaluation,
                          SingularInterconnection)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)


def _scaled_residual(c, z):
    scale = np.abs(c) @ (abs(z) ** np.arange(c.size))
    return 0.0 if scale == 0 else abs(np.polyval(c[::-1], z)) / scale


def _same_multiset(a, b, tol):
    a, b = list(a), list(b)
    for z in a:
        k = int(np.argmin([abs(z - w) for w in b]))
        if abs(z - b.pop(k)) > tol:
            return False
    return not b


@settings(max_examples=150, deadline=None)
@given(st.lists(cplx, min_size=2, max_size=9))
def test_polyroots_scaled_residual(coeffs):
    c = np.array(coeffs)
    if abs(c[-1]) < 1e-3:
        c[-1] = 1.0
    r = lti.polyroots(c)
    assert r.size == c.size - 1
    assert max(_scaled_residual(c, z) for z in r) < 1e-8


@settings(max_examples=100, deadline=None)
@given(cplx, cplx, st.floats(0.1, 5))
def test_quadratic_matches_companion(a0, a1, a2):
    got = lti.poles_quadratic(a0, a1, a2)
    ref = oracles.companion_roots([a0, a1, a2])
    assert _same_multiset(got, ref, 1e-9 * max(1.0, np.max(np.abs(ref))))


def test_quadratic_ordering_and_degenerate():
    lam1, lam2 = lti.poles_quadratic(200.0, 30.0, 1.0)  # roots -10, -20
    assert lam2 == pytest.approx(-10) and lam1 == pytest.approx(-20)
    with pytest.raises(DegenerateOrder):
        lti.poles_quadratic(1.0, 1.0, 0.0)


def test_roots_at_origin_are_exact():
    r = lti.polyroots([0, 0, 2.0, 1.0])
    assert np.sum(r == 0) == 2
    assert np.isclose(r[r != 0][0], -2.0)


def test_rational_arithmetic_and_feedback():
    s = lti.ComplexRational.s()
    g = (2 + 1j) / (s + 3)
    cl = g.feedback()
    for w in (0.1, 5.0, -7.0):
        z = 1j * w
        assert np.isclose(cl(z), g(z) / (1 + g(z)))
    assert np.isclose(cl.dcgain(), (2 + 1j) / (5 + 1j))


def test_realization_and_embedding_spectrum():
    tf = lti.ComplexRational([1 + 2j, 0.5], [5 + 1j, 2 - 1j, 1.0])
    css = lti.realize_control_canonical(tf)
    for w in (-30.0, 0.3, 12.0):
        assert np.isclose(css.evaluate(1j * w), tf(1j * w))
    ev = np.sort_complex(lti.embed_real(css).eigenvalues())
    ref = np.sort_complex(np.r_[css.eigenvalues(), np.conj(css.eigenvalues())])
    assert np.allclose(ev, ref)


def test_improper_and_static_rejected():
    with pytest.raises(ImproperTransferFunction):
        lti.realize_control_canonical(lti.ComplexRational([0, 0, 1.0], [1.0, 1.0]))
    with pytest.raises(DegenerateOrder):
        lti.realize_control_canonical(lti.ComplexRational.const(2.0))


def test_frequency_response_on_pole_raises():
    tf = lti.ComplexRational([1.0], [-2j, 1.0])  # pole at s = 2j
    with pytest.raises(SingularEvaluation):
        lti.freq_response(tf, [2.0])


@settings(max_examples=25, deadline=None)
@given(st.floats(5, 60), st.floats(-40, 40), st.floats(0.2, 3), cplx)
def test_closed_form_step_matches_rk4(re, im, k, b1):
    p1, p2 = complex(-re, im), complex(-k * re, -im)
    a1, a0 = -(p1 + p2), p1 * p2
    tf = lti.ComplexRational([a0, b1], [a0, a1, 1.0])
    css = lti.realize_control_canonical(tf)
    t, y_ref = oracles.rk4_complex_lti(css.A, css.B, css.C, css.D, 0.2, 2e-5)
    y = lti.step_response_exact(tf, t)
    assert np.max(np.abs(y - y_ref)) < 1e-6 * max(1.0, np.max(np.abs(y_ref)))


def test_closed_form_needs_second_order():
    with pytest.raises(DegenerateOrder):
        lti.step_response_exact(lti.ComplexRational([1.0], [1.0, 1.0]), [0.0, 1.0])


def test_pole_geometry_reconstructs_poles():
    a0, a1, a2 = 3j * 40.0, 25 + 9j, 0.8
    geo = lti.pole_geometry(a0, a1, a2)
    assert np.allclose(geo.reconstructed_poles(), lti.poles_quadratic(a0, a1, a2))
    assert abs(geo.mu.imag) < 1e-12


def test_interconnect_unity_feedback():
    g = lti.RealStateSpace([[-1.0]], [[1.0]], [[2.0]], [[0.0]])
    cl = lti.interconnect([g], [(0, 0, 0, 0, -1.0)], [[(0, 0, 1.0)]], [[(0, 0, 1.0)]])
    assert np.allclose(cl.eigenvalues(), [-3.0])
    assert np.isclose(cl.evaluate(0.0)[0, 0], 2 / 3)


def test_interconnect_algebraic_loop_rejected():
    k = lti.RealStateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[1.0]])
    with pytest.raises(SingularInterconnection):
        lti.interconnect([k], [(0, 0, 0, 0, 1.0)], [[(0, 0, 1.0)]], [[(0, 0, 1.0)]])
