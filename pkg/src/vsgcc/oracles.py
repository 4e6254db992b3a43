"""Independent reference computations used to cross-check the main code paths.

Each routine deliberately takes a different numerical route from the
production implementation (brute-force integration, finite differences,
dense eigen-solvers) so agreement is meaningful.
"""
from __future__ import annotations

import numpy as np

from . import dynamics as dyn
from .params import VsgParams


def rk4_complex_lti(A: np.ndarray, B: np.ndarray, C: np.ndarray, D: complex,
                    t_end: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-step response of a complex state-space model by classical RK4."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex).ravel()
    C = np.asarray(C, dtype=complex).ravel()
    n = int(round(t_end / h))
    x = np.zeros(A.shape[0], dtype=complex)
    t = np.arange(n + 1) * h
    y = np.empty(n + 1, dtype=complex)
    y[0] = C @ x + D
    f = lambda x: A @ x + B
    for k in range(n):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        y[k + 1] = C @ x + D
    return t, y


def companion_roots(coeffs_ascending) -> np.ndarray:
    """Polynomial roots from the dense companion-matrix eigenvalues."""
    c = np.trim_zeros(np.asarray(coeffs_ascending, dtype=complex), "b")
    return np.roots(c[::-1])


def numeric_jacobian(p: VsgParams, x0: np.ndarray, u0: np.ndarray, eps: float = 1e-6):
    """Central-difference Jacobians ``(df/dx, df/du)`` of the nonlinear rates."""
    pv = dyn.pack(p)
    out_p = np.empty(dyn.N_STATE)
    out_m = np.empty(dyn.N_STATE)
    n, m = x0.size, u0.size
    Jx = np.empty((n, n))
    Ju = np.empty((n, m))
    for k in range(n):
        dx = np.zeros(n)
        dx[k] = eps * max(1.0, abs(x0[k]))
        dyn.derivatives(x0 + dx, pv, u0, out_p)
        dyn.derivatives(x0 - dx, pv, u0, out_m)
        Jx[:, k] = (out_p - out_m) / (2 * dx[k])
    for k in range(m):
        du = np.zeros(m)
        du[k] = eps * max(1.0, abs(u0[k]))
        dyn.derivatives(x0, pv, u0 + du, out_p)
        dyn.derivatives(x0, pv, u0 - du, out_m)
        Ju[:, k] = (out_p - out_m) / (2 * du[k])
    return Jx, Ju


def quadratic_roots_direct(a0: complex, a1: complex, a2: complex) -> tuple[complex, complex]:
    """Textbook quadratic formula, no cancellation guard."""
    disc = np.sqrt(complex(a1) ** 2 - 4 * complex(a0) * complex(a2))
    return (-a1 + disc) / (2 * a2), (-a1 - disc) / (2 * a2)
