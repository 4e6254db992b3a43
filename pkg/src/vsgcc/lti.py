"""Complex-coefficient LTI mathematics.

Polynomials are stored with ascending powers of ``s`` (``c[0] + c[1] s + ...``),
the same convention as :mod:`numpy.polynomial.polynomial`.  Complex-coefficient
systems do not have conjugate-symmetric responses, so every frequency routine
takes *signed* angular frequencies.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.linalg import expm

from .errors import (
    DefectivePoles,
    DegenerateOrder,
    ImproperTransferFunction,
    NumericalFailure,
    SingularEvaluation,
    SingularInterconnection,
)

_TRIM = 1e-300


def _as_coeffs(c) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(c, dtype=complex))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("coefficients must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficients must be finite")
    # strip exact-zero leading (highest power) coefficients but keep a constant
    n = arr.size
    while n > 1 and abs(arr[n - 1]) <= _TRIM:
        n -= 1
    return arr[:n]


def order_poles(poles) -> list[complex]:
    """Sort poles so the last entry is dominant.

    Dominance is the largest real part; ties are broken by larger ``|Im|``,
    then by the imaginary part itself so the ordering is deterministic.
    """
    return sorted((complex(p) for p in poles), key=lambda z: (z.real, abs(z.imag), z.imag))


# --------------------------------------------------------------------------
# roots
# --------------------------------------------------------------------------

def _scaled_residual(coeffs: np.ndarray, z: complex) -> float:
    """Backward error |p(z)| / sum |a_i| |z|^i."""
    powers = np.abs(z) ** np.arange(coeffs.size)
    denom = float(np.sum(np.abs(coeffs) * powers))
    if denom == 0.0:
        return 0.0
    return float(abs(npoly.polyval(z, coeffs)) / denom)


def _aberth(coeffs: np.ndarray, maxiter: int = 500, tol: float = 1e-15):
    n = coeffs.size - 1
    monic = coeffs / coeffs[-1]
    dcoeffs = npoly.polyder(monic)
    # initial guesses on a circle sized by the coefficient magnitudes
    radius = max(abs(monic[k]) ** (1.0 / (n - k)) for k in range(n)) if n else 1.0
    radius = max(radius, 1e-12)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)
    for it in range(maxiter):
        p = npoly.polyval(z, monic)
        dp = npoly.polyval(z, dcoeffs)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            corr = ratio / (1.0 - ratio * inv.sum(axis=1))
        if not np.all(np.isfinite(corr)):
            return z, False, it
        z = z - corr
        if np.all(np.abs(corr) <= tol * np.maximum(np.abs(z), 1.0)):
            return z, True, it + 1
    return z, False, maxiter


def _newton_polish(coeffs: np.ndarray, z: np.ndarray, steps: int = 3) -> np.ndarray:
    d = npoly.polyder(coeffs)
    out = z.copy()
    for k in range(out.size):
        for _ in range(steps):
            dp = npoly.polyval(out[k], d)
            if dp == 0:
                break
            step = npoly.polyval(out[k], coeffs) / dp
            cand = out[k] - step
            if _scaled_residual(coeffs, cand) <= _scaled_residual(coeffs, out[k]):
                out[k] = cand
            else:
                break
    return out


def polyroots(coeffs, tol: float = 1e-8) -> np.ndarray:
    """All roots of a complex polynomial (ascending coefficients).

    Aberth-Ehrlich simultaneous iteration with a companion-matrix fallback.
    Raises :class:`NumericalFailure` when neither route reaches a scaled
    residual below ``tol``.
    """
    c = _as_coeffs(coeffs)
    n = c.size - 1
    if n < 1:
        raise DegenerateOrder("polynomial of degree 0 has no roots")
    # factor out roots at the origin exactly
    nzero = 0
    while nzero < n and c[nzero] == 0:
        nzero += 1
    core = c[nzero:]
    roots = np.zeros(0, dtype=complex)
    if core.size > 1:
        z, ok, _ = _aberth(core)
        res = max(_scaled_residual(core, r) for r in z) if ok else np.inf
        if not ok or res > tol:
            comp = npoly.polycompanion(core / core[-1]) if core.size > 2 else np.array([[-core[0] / core[1]]])
            z = np.linalg.eigvals(comp.astype(complex))
        z = _newton_polish(core, z)
        res = max(_scaled_residual(core, r) for r in z)
        if res > tol:
            raise NumericalFailure(f"root finder did not converge (residual {res:.3g})", best_residual=res)
        roots = z
    return np.concatenate([np.zeros(nzero, dtype=complex), roots])


def poles_quadratic(a0: complex, a1: complex, a2: complex) -> tuple[complex, complex]:
    """Roots of ``a2 s^2 + a1 s + a0`` ordered as ``(minor, dominant)``."""
    a0, a1, a2 = complex(a0), complex(a1), complex(a2)
    if a2 == 0:
        raise DegenerateOrder("a2 = 0: the characteristic polynomial is not second order")
    disc = np.sqrt(a1 * a1 - 4 * a0 * a2)
    # numerically stable pair: avoid cancellation in -a1 +/- disc
    if abs(-a1 + disc) > abs(-a1 - disc):
        q = -a1 + disc
    else:
        q = -a1 - disc
    if q == 0:
        r1 = r2 = -a1 / (2 * a2)
    else:
        r1 = q / (2 * a2)
        r2 = (2 * a0) / q
    lam1, lam2 = order_poles([r1, r2])
    return lam1, lam2


# --------------------------------------------------------------------------
# transfer functions
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ComplexRational:
    """Ratio of complex polynomials in ``s`` (ascending coefficients)."""

    numerator: np.ndarray
    denominator: np.ndarray

    def __post_init__(self):
        num = _as_coeffs(self.numerator)
        den = _as_coeffs(self.denominator)
        if den.size == 1 and den[0] == 0:
            raise ZeroDivisionError("denominator is identically zero")
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @classmethod
    def const(cls, k: complex) -> "ComplexRational":
        return cls([k], [1.0])

    @classmethod
    def s(cls) -> "ComplexRational":
        return cls([0.0, 1.0], [1.0])

    @property
    def num_degree(self) -> int:
        return self.numerator.size - 1

    @property
    def den_degree(self) -> int:
        return self.denominator.size - 1

    def is_proper(self) -> bool:
        return self.num_degree <= self.den_degree

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        return npoly.polyval(s, self.numerator) / npoly.polyval(s, self.denominator)

    # arithmetic ----------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "ComplexRational":
        if isinstance(other, ComplexRational):
            return other
        return ComplexRational.const(complex(other))

    def __add__(self, other):
        o = self._coerce(other)
        num = npoly.polyadd(npoly.polymul(self.numerator, o.denominator),
                            npoly.polymul(o.numerator, self.denominator))
        return ComplexRational(num, npoly.polymul(self.denominator, o.denominator))

    __radd__ = __add__

    def __neg__(self):
        return ComplexRational(-self.numerator, self.denominator)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return ComplexRational(npoly.polymul(self.numerator, o.numerator),
                               npoly.polymul(self.denominator, o.denominator))

    __rmul__ = __mul__

    def inv(self) -> "ComplexRational":
        return ComplexRational(self.denominator, self.numerator)

    def __truediv__(self, other):
        return self * self._coerce(other).inv()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inv()

    def feedback(self, other=1.0) -> "ComplexRational":
        """Negative feedback ``self / (1 + self * other)``."""
        o = self._coerce(other)
        num = npoly.polymul(self.numerator, o.denominator)
        den = npoly.polyadd(npoly.polymul(self.denominator, o.denominator),
                            npoly.polymul(self.numerator, o.numerator))
        return ComplexRational(num, den)

    def conj(self) -> "ComplexRational":
        """System whose coefficients are conjugated: G*(s*)."""
        return ComplexRational(np.conj(self.numerator), np.conj(self.denominator))

    def normalized(self) -> "ComplexRational":
        lead = self.denominator[-1]
        return ComplexRational(self.numerator / lead, self.denominator / lead)

    def poles(self) -> list[complex]:
        return poles_general(self)

    def zeros(self) -> list[complex]:
        if self.num_degree < 1:
            return []
        return order_poles(polyroots(self.numerator))

    def dcgain(self) -> complex:
        return complex(self(0.0))

    def __repr__(self):
        return f"ComplexRational(num={self.numerator!r}, den={self.denominator!r})"


def poles_general(tf: ComplexRational) -> list[complex]:
    """Denominator roots of ``tf`` in dominance order (dominant last)."""
    if tf.den_degree < 1:
        raise DegenerateOrder("static gain has no poles")
    return order_poles(polyroots(tf.denominator))


# --------------------------------------------------------------------------
# state space
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ComplexStateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: complex = 0j

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=complex).reshape(n, 1)
        C = np.asarray(self.C, dtype=complex).reshape(1, n)
        if A.shape != (n, n):
            raise ValueError("A must be square")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", complex(self.D))

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def evaluate(self, s: complex) -> complex:
        n = self.order
        x = np.linalg.solve(s * np.eye(n) - self.A, self.B)
        return complex((self.C @ x)[0, 0] + self.D)

    def eigenvalues(self) -> list[complex]:
        return order_poles(np.linalg.eigvals(self.A))


def realize_control_canonical(tf: ComplexRational) -> ComplexStateSpace:
    """Control canonical realization of a proper complex transfer function.

    For ``(b1 s + b0)/(a2 s^2 + a1 s + a0)`` this yields
    ``A = [[-a1/a2, -a0/a2], [1, 0]]``, ``B = (1, 0)``, ``C = (b1/a2, b0/a2)``.
    """
    if not tf.is_proper():
        raise ImproperTransferFunction(
            f"numerator degree {tf.num_degree} exceeds denominator degree {tf.den_degree}")
    n = tf.den_degree
    if n < 1:
        raise DegenerateOrder("cannot realize a static gain as a state-space system")
    lead = tf.denominator[-1]
    den = tf.denominator / lead
    num = np.zeros(n + 1, dtype=complex)
    num[: tf.numerator.size] = tf.numerator / lead
    d = num[n]
    # strictly proper remainder
    rem = num[:n] - d * den[:n]
    A = np.zeros((n, n), dtype=complex)
    A[0, :] = -den[n - 1::-1]
    if n > 1:
        A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1), dtype=complex)
    B[0, 0] = 1.0
    C = rem[n - 1::-1].reshape(1, n)
    return ComplexStateSpace(A, B, C, d)


@dataclass(frozen=True, eq=False)
class RealStateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    input_names: tuple = ()
    output_names: tuple = ()
    state_names: tuple = ()

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, -1) if n else np.zeros((0, np.asarray(self.B).shape[-1]))
        C = np.asarray(self.C, dtype=float).reshape(-1, n) if n else np.atleast_2d(np.asarray(self.C, dtype=float))
        D = np.atleast_2d(np.asarray(self.D, dtype=float)).reshape(C.shape[0], B.shape[1])
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    def _index(self, key, names, count) -> int:
        if isinstance(key, str):
            try:
                return list(names).index(key)
            except ValueError:
                raise KeyError(f"unknown channel {key!r}; known: {names}") from None
        if not 0 <= key < count:
            raise IndexError(key)
        return int(key)

    def input_index(self, key) -> int:
        return self._index(key, self.input_names, self.n_inputs)

    def output_index(self, key) -> int:
        return self._index(key, self.output_names, self.n_outputs)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    def evaluate(self, s: complex) -> np.ndarray:
        n = self.n_states
        X = np.linalg.solve(s * np.eye(n) - self.A, self.B.astype(complex))
        return self.C @ X + self.D

    def freq_response(self, omegas, inp=0, out=0) -> np.ndarray:
        i = self.input_index(inp)
        o = self.output_index(out)
        omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
        eig = self.eigenvalues()
        res = np.empty(omegas.size, dtype=complex)
        n = self.n_states
        b = self.B[:, i].astype(complex)
        for k, w in enumerate(omegas):
            s = 1j * w
            if eig.size and np.min(np.abs(eig - s)) <= 1e-9 * max(1.0, abs(w)):
                raise SingularEvaluation(f"frequency {w} rad/s coincides with a pole", omega=w)
            x = np.linalg.solve(s * np.eye(n) - self.A, b)
            res[k] = self.C[o] @ x + self.D[o, i]
        return res

    def step(self, times, inp=0, amplitude: float = 1.0) -> np.ndarray:
        """Exact zero-order-hold step response at uniformly spaced ``times``.

        Returns the output matrix with shape ``(len(times), n_outputs)``.
        """
        times = np.asarray(times, dtype=float)
        i = self.input_index(inp)
        return simulate_linear(self, times, np.tile(_unit(self.n_inputs, i) * amplitude, (times.size, 1)))

    def select(self, inputs=None, outputs=None) -> "RealStateSpace":
        ii = [self.input_index(k) for k in inputs] if inputs is not None else list(range(self.n_inputs))
        oo = [self.output_index(k) for k in outputs] if outputs is not None else list(range(self.n_outputs))
        return RealStateSpace(
            self.A, self.B[:, ii], self.C[oo], self.D[np.ix_(oo, ii)],
            tuple(self.input_names[k] for k in ii) if self.input_names else (),
            tuple(self.output_names[k] for k in oo) if self.output_names else (),
            self.state_names,
        )


def _unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def simulate_linear(sys: RealStateSpace, times, inputs, x0=None) -> np.ndarray:
    """Zero-order-hold simulation on a uniform grid using the matrix exponential."""
    times = np.asarray(times, dtype=float)
    u = np.asarray(inputs, dtype=float).reshape(times.size, sys.n_inputs)
    n = sys.n_states
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    y = np.empty((times.size, sys.n_outputs))
    if times.size > 1:
        dt = times[1] - times[0]
        if not np.allclose(np.diff(times), dt, rtol=1e-9, atol=1e-15):
            raise ValueError("simulate_linear requires uniformly spaced times")
        M = np.zeros((n + sys.n_inputs, n + sys.n_inputs))
        M[:n, :n] = sys.A * dt
        M[:n, n:] = sys.B * dt
        E = expm(M)
        Ad, Bd = E[:n, :n], E[:n, n:]
    else:
        Ad, Bd = np.eye(n), np.zeros((n, sys.n_inputs))
    for k in range(times.size):
        y[k] = sys.C @ x + sys.D @ u[k]
        x = Ad @ x + Bd @ u[k]
    return y


def embed_real(sys: ComplexStateSpace) -> RealStateSpace:
    """Real (d, q) embedding of a complex state-space system.

    Inputs are ``(Re u, Im u)`` and outputs ``(Re y, Im y)``; every complex
    matrix ``M`` becomes ``[[Re M, -Im M], [Im M, Re M]]``.
    """

    def blk(M):
        M = np.atleast_2d(M)
        return np.block([[M.real, -M.imag], [M.imag, M.real]])

    D = np.array([[sys.D]])
    return RealStateSpace(blk(sys.A), blk(sys.B), blk(sys.C), blk(D),
                          ("u_d", "u_q"), ("y_d", "y_q"))


def complex_block(c: complex) -> np.ndarray:
    """2x2 real matrix acting like multiplication by ``c`` on (d, q)."""
    c = complex(c)
    return np.array([[c.real, -c.imag], [c.imag, c.real]])


def freq_response(sys, omegas) -> np.ndarray:
    """``G(j omega)`` for signed angular frequencies.

    Accepts a :class:`ComplexRational` or :class:`ComplexStateSpace`.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    out = np.empty(omegas.size, dtype=complex)
    if isinstance(sys, ComplexRational):
        poles = np.array(poles_general(sys)) if sys.den_degree >= 1 else np.zeros(0)
        for k, w in enumerate(omegas):
            s = 1j * w
            if poles.size and np.min(np.abs(poles - s)) <= 1e-9 * max(1.0, abs(w)):
                raise SingularEvaluation(f"frequency {w} rad/s coincides with a pole", omega=w)
            out[k] = sys(s)
        return out
    if isinstance(sys, ComplexStateSpace):
        eig = np.linalg.eigvals(sys.A)
        for k, w in enumerate(omegas):
            s = 1j * w
            if np.min(np.abs(eig - s)) <= 1e-9 * max(1.0, abs(w)):
                raise SingularEvaluation(f"frequency {w} rad/s coincides with a pole", omega=w)
            out[k] = sys.evaluate(s)
        return out
    raise TypeError(f"unsupported system type {type(sys).__name__}")


# --------------------------------------------------------------------------
# step responses
# --------------------------------------------------------------------------

def _second_order_coeffs(tf: ComplexRational):
    if tf.den_degree != 2 or tf.num_degree > 1:
        raise DegenerateOrder("closed-form step response needs (b1 s + b0)/(a2 s^2 + a1 s + a0)")
    a0, a1, a2 = tf.denominator
    b = np.zeros(2, dtype=complex)
    b[: tf.numerator.size] = tf.numerator
    return a0, a1, a2, b[0], b[1]


def step_response_exact(tf: ComplexRational, times) -> np.ndarray:
    """Closed-form step response of the second-order closed voltage loop.

    Valid for the family with ``a0 == b0``; the expression is written in
    terms of the two poles and ``b1/a0``.
    """
    a0, a1, a2, b0, b1 = _second_order_coeffs(tf)
    lam1, lam2 = poles_quadratic(a0, a1, a2)
    if abs(lam1 - lam2) < 1e-8 * max(abs(lam1), 1e-300):
        raise DefectivePoles("repeated poles: use step_response_numeric instead")
    if a0 == 0:
        raise DegenerateOrder("a0 = 0: closed form undefined")
    t = np.asarray(times, dtype=float)
    e1 = np.exp(lam1 * t)
    e2 = np.exp(lam2 * t)
    r = b1 / a0
    y = 1 - (lam1 * e2 - lam2 * e1 - r * lam1 * lam2 * (e1 - e2)) / (lam1 - lam2)
    # the closed form assumes unit DC gain; rescale otherwise
    return y * (b0 / a0)


def step_response_dominant(lambda2: complex, omega1: float, times) -> np.ndarray:
    """Dominant-pole estimate ``1 - exp(lambda2 t) (1 - j lambda2 / omega1)``."""
    t = np.asarray(times, dtype=float)
    lambda2 = complex(lambda2)
    return 1 - np.exp(lambda2 * t) * (1 - 1j * lambda2 / omega1)


def step_response_numeric(sys, times) -> np.ndarray:
    """Step response of any proper complex system via the matrix exponential."""
    if isinstance(sys, ComplexRational):
        sys = realize_control_canonical(sys)
    t = np.asarray(times, dtype=float)
    n = sys.order
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[:n, :n] = sys.A
    M[:n, n] = sys.B[:, 0]
    out = np.empty(t.size, dtype=complex)
    for k, tk in enumerate(t):
        E = expm(M * tk)
        x = E[:n, n]
        out[k] = (sys.C @ x)[0] + sys.D
    return out


# --------------------------------------------------------------------------
# geometry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PoleGeometry:
    M: float
    mu: complex
    phi: float
    lambda1: complex
    lambda2: complex

    @property
    def stable(self) -> bool:
        return self.lambda2.real < 0

    @property
    def zeta(self) -> float:
        return -self.lambda2.real / abs(self.lambda2) if self.lambda2 != 0 else 1.0

    @property
    def omega_n(self) -> float:
        return abs(self.lambda2)

    def reconstructed_poles(self) -> tuple[complex, complex]:
        """Poles from ``-M [exp(j phi) +/- sqrt(exp(-2j phi) + j mu)]``."""
        root = np.sqrt(np.exp(-2j * self.phi) + 1j * self.mu)
        cands = [-self.M * (np.exp(1j * self.phi) + sgn * root) for sgn in (1, -1)]
        return tuple(order_poles(cands))


def pole_geometry(a0: complex, a1: complex, a2: float) -> PoleGeometry:
    """Scale, rotation and margin of the quadratic ``a2 s^2 + a1 s + a0``.

    ``mu`` is defined so that ``exp(-2j phi) + j mu == (a1^2 - 4 a0 a2)/|a1|^2``;
    it is real whenever ``a0`` is purely imaginary and ``a2`` real.
    """
    a0, a1, a2 = complex(a0), complex(a1), complex(a2)
    if a1 == 0:
        raise DegenerateOrder("a1 = 0: geometry undefined")
    M = abs(a1 / (2 * a2))
    phi = float(np.angle(a1 / a2))
    mu = (a1 * a1 - np.conj(a1) ** 2 * (a2 / abs(a2)) ** 2 - 4 * a0 * a2) / (1j * abs(a1) ** 2)
    # mu above is exact for real positive a2, the only case used here
    if abs(mu.imag) <= 1e-12 * max(1.0, abs(mu)):
        mu = complex(mu.real, 0.0)
    lam1, lam2 = poles_quadratic(a0, a1, a2)
    return PoleGeometry(M=M, mu=mu, phi=phi, lambda1=lam1, lambda2=lam2)


# --------------------------------------------------------------------------
# interconnection
# --------------------------------------------------------------------------

def interconnect(blocks: Sequence[RealStateSpace], connections, inputs, outputs) -> RealStateSpace:
    """Aggregate real state space of interconnected blocks.

    Parameters
    ----------
    blocks : sequence of RealStateSpace
    connections : iterable of ``(dst_block, dst_input, src_block, src_output, gain)``
        Each entry adds ``gain * y[src]`` to ``u[dst]``.  Use a negative gain
        for negative feedback.
    inputs : iterable of lists of ``(block, input, gain)``
        One entry per external input.
    outputs : iterable of lists of ``(block, output, gain)``
        One entry per external output (a weighted sum of block outputs).
    """
    blocks = list(blocks)
    nx = [b.n_states for b in blocks]
    nu = [b.n_inputs for b in blocks]
    ny = [b.n_outputs for b in blocks]
    xo = np.concatenate([[0], np.cumsum(nx)]).astype(int)
    uo = np.concatenate([[0], np.cumsum(nu)]).astype(int)
    yo = np.concatenate([[0], np.cumsum(ny)]).astype(int)
    NX, NU, NY = xo[-1], uo[-1], yo[-1]

    A = np.zeros((NX, NX))
    B = np.zeros((NX, NU))
    C = np.zeros((NY, NX))
    D = np.zeros((NY, NU))
    for k, b in enumerate(blocks):
        A[xo[k]:xo[k + 1], xo[k]:xo[k + 1]] = b.A
        B[xo[k]:xo[k + 1], uo[k]:uo[k + 1]] = b.B
        C[yo[k]:yo[k + 1], xo[k]:xo[k + 1]] = b.C
        D[yo[k]:yo[k + 1], uo[k]:uo[k + 1]] = b.D

    K = np.zeros((NU, NY))
    for dst_b, dst_i, src_b, src_o, g in connections:
        K[uo[dst_b] + dst_i, yo[src_b] + src_o] += g
    inputs = list(inputs)
    outputs = list(outputs)
    R = np.zeros((NU, len(inputs)))
    for j, terms in enumerate(inputs):
        for b, i, g in terms:
            R[uo[b] + i, j] += g
    S = np.zeros((len(outputs), NY))
    for j, terms in enumerate(outputs):
        for b, o, g in terms:
            S[j, yo[b] + o] += g

    # u = K y + R r,  y = C x + D u  ->  (I - D K) y = C x + D R r
    L = np.eye(NY) - D @ K
    if np.linalg.cond(L) > 1e12:
        raise SingularInterconnection("algebraic loop is ill-posed (I - D K singular)")
    Linv = np.linalg.inv(L)
    Cy = Linv @ C
    Dy = Linv @ D @ R
    Acl = A + B @ K @ Cy
    Bcl = B @ (K @ Dy + R)
    return RealStateSpace(Acl, Bcl, S @ Cy, S @ Dy)


def rational_to_real(tf: ComplexRational) -> RealStateSpace:
    """Real embedding of a proper complex transfer function (2 in, 2 out)."""
    if tf.den_degree == 0:
        k = complex(tf.numerator[0] / tf.denominator[0]) if tf.num_degree == 0 else None
        if k is None:
            raise ImproperTransferFunction("static block must have constant numerator")
        return RealStateSpace(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)), complex_block(k))
    return embed_real(realize_control_canonical(tf))
