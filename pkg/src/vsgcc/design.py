"""Tuning of the complex current feeding gain and the voltage integral gain."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import model
from .analysis import step_metrics
from .errors import NoFeasibleGain, TargetUnreachable
from .lti import ComplexRational, poles_quadratic, step_response_dominant, step_response_exact
from .params import VsgParams

ISE_WINDOW = (0.01, 0.06)
ISE_DT = 1e-4
ISE_TAU = 0.005


@dataclass(frozen=True)
class DesignResult:
    kc: complex
    kvi: float
    kip: float
    lambda2: complex
    zeta: float
    omega_n: float
    rise_time_10_90: float | None
    transition_10_95: float | None
    overshoot_pct: float
    ise: float | None = None
    iterations: int = 0
    compensator: ComplexRational | None = None
    estimated_transition: float | None = None


def mu_margin(p: VsgParams) -> tuple[complex, bool]:
    """Geometric stability margin of the lossless voltage loop.

    For a real feeding gain this is ``4 Xg kip (kc - Ls kvi) / |a1|^2``; the
    complex form adds ``(kc_r + kvi Lg) kc_i kip`` inside the bracket.
    The sign test presumes ``Re a1 > 0``; otherwise the pole sum ``-a1/a2``
    already lies in the right half-plane and the loop is reported unstable.
    """
    a0, a1, _, _, _ = model.closed_loop_coefficients(p)
    kc = p.kc
    mu = 4 * p.kip / abs(a1) ** 2 * (p.Xg * (kc.real - p.kvi * p.Ls)
                                    + (kc.real + p.kvi * p.Lg) * kc.imag * p.kip)
    return complex(mu), bool(mu >= 0 and a1.real > 0)


def real_gain_boundary(p: VsgParams) -> float:
    """Real feeding gain at which the margin changes sign, ``Ls kvi``."""
    return p.Ls * p.kvi


def pole_place_kc(p: VsgParams, kc_real: float | None = None) -> complex:
    """Feeding gain that puts ``arg a1`` at 45 degrees.

    ``kc = kr (1 + j) + j (Lg kvi - Xg / kip)``.  The real part ``kr`` is the
    filter-current feedback ratio ``beta_k`` unless given.
    """
    kr = p.beta_k if kc_real is None else kc_real
    return complex(kr, kr) + 1j * (p.Lg * p.kvi - p.Xg / p.kip)


def placed_poles(p: VsgParams) -> tuple[complex, complex]:
    """Poles along the 225-degree ray after pole placement.

    When ``1 - 4 |a0| a2 / |a1|^2`` is negative the ray form does not apply;
    the quadratic roots are returned with a warning.
    """
    a0, a1, a2, _, _ = model.closed_loop_coefficients(p)
    rad = 1 - 4 * abs(a0) * a2.real / abs(a1) ** 2
    if rad < 0:
        warnings.warn("placement radicand negative: poles do not share the 0.707 damping ray",
                      RuntimeWarning, stacklevel=2)
        return poles_quadratic(a0, a1, a2)
    scale = abs(a1) / (2 * a2.real)
    ray = np.exp(1j * np.pi / 4)
    pair = [-scale * (1 + sg * np.sqrt(rad)) * ray for sg in (1, -1)]
    return tuple(sorted(pair, key=lambda z: (z.real, abs(z.imag))))


def _step_horizon(lam2: complex) -> float:
    return float(np.clip(12.0 / max(abs(lam2.real), 1e-3), 0.1, 5.0))


def ctf_step_metrics(p: VsgParams, n: int = 200_001):
    """Magnitude step metrics of the closed voltage loop."""
    tf, geo = model.voltage_closed_loop(p)
    t = np.linspace(0.0, _step_horizon(geo.lambda2), n)
    y = np.abs(step_response_exact(tf, t))
    return step_metrics(t, y, 0.0, initial=0.0, final=1.0)


def dominant_transition(lambda2: complex, omega1: float, n: int = 100_001) -> float | None:
    """10-95 % transition of the dominant-pole magnitude estimate."""
    t = np.linspace(0.0, _step_horizon(lambda2), n)
    y = np.abs(step_response_dominant(lambda2, omega1, t))
    return step_metrics(t, y, 0.0, initial=0.0, final=1.0).transition_10_95


def in_region(lambda2: complex, wn_min: float = 100.0, zeta_min: float = 0.7) -> bool:
    if lambda2.real >= 0:
        return False
    wn = abs(lambda2)
    return wn > wn_min and -lambda2.real / wn > zeta_min


def ise_objective(kc: complex, p: VsgParams) -> float:
    """Root integrated squared error of ``|step|`` against ``1 - exp(-t/0.005)``.

    The error is integrated from 10 ms to 60 ms by the trapezoid rule with a
    0.1 ms grid.  Unstable gains return ``inf``.
    """
    q = p.with_kc(kc)
    tf, geo = model.voltage_closed_loop(q)
    if geo.lambda2.real >= 0:
        return float("inf")
    t = np.arange(ISE_WINDOW[0], ISE_WINDOW[1] + 0.5 * ISE_DT, ISE_DT)
    ref = 1 - np.exp(-t / ISE_TAU)
    y = np.abs(step_response_exact(tf, t))
    return float(np.sqrt(np.trapezoid((y - ref) ** 2, t)))


Region = Callable[[complex], bool]


def default_region(p: VsgParams) -> Region:
    """Gains whose dominant pole has ``omega_n > 100`` and ``zeta > 0.7``."""

    def member(kc: complex) -> bool:
        a0, a1, a2, _, _ = model.closed_loop_coefficients(p.with_kc(kc))
        return in_region(poles_quadratic(a0, a1, a2)[1])

    return member


def _result(q: VsgParams, ise=None, iterations=0) -> DesignResult:
    _, geo = model.voltage_closed_loop(q)
    m = ctf_step_metrics(q)
    return DesignResult(
        kc=q.kc, kvi=q.kvi, kip=q.kip, lambda2=geo.lambda2, zeta=geo.zeta,
        omega_n=geo.omega_n, rise_time_10_90=m.rise_10_90,
        transition_10_95=m.transition_10_95, overshoot_pct=m.overshoot_pct,
        ise=ise, iterations=iterations, compensator=model.compensator_ctf(q),
        estimated_transition=dominant_transition(geo.lambda2, q.omega1),
    )


def optimize_kc(p: VsgParams, region: Region | None = None, grid_step: float = 0.05,
                bounds: tuple[float, float] = (0.0, 1.5), tol: float = 1e-3,
                candidates: list[complex] | None = None) -> DesignResult:
    """Grid search then pattern refinement of the ISE over a feasible region.

    The coarse grid covers ``bounds`` in both components with ``grid_step``;
    refinement probes the eight neighbours at half the current step and
    halves the step until it drops below ``tol``.  Ties keep the earlier
    point in grid order, so results are deterministic.
    """
    region = default_region(p) if region is None else region
    if candidates is None:
        axis = np.round(np.arange(bounds[0], bounds[1] + 0.5 * grid_step, grid_step), 12)
        candidates = [complex(r, i) for r in axis for i in axis]
    best_kc, best = None, np.inf
    evals = 0
    for kc in candidates:
        if not region(kc):
            continue
        v = ise_objective(kc, p)
        evals += 1
        if v < best:
            best_kc, best = kc, v
    if best_kc is None:
        raise NoFeasibleGain("no candidate gain lies inside the feasible region")

    step = grid_step / 2
    lo, hi = bounds
    moves = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
    if len(candidates) > 1:
        while step >= tol:
            improved = False
            for dr, di in moves:
                kc = best_kc + complex(dr * step, di * step)
                if not (lo <= kc.real <= hi and lo <= kc.imag <= hi) or not region(kc):
                    continue
                v = ise_objective(kc, p)
                evals += 1
                if v < best:
                    best_kc, best, improved = kc, v, True
            if not improved:
                step /= 2
    return _result(p.with_kc(best_kc), ise=best, iterations=evals)


@dataclass(frozen=True)
class DesignTargets:
    transition_s: float = 0.020
    zeta: float = 0.707
    omega_n_min: float = 107.0
    kvi_start: float = 100.0
    kvi_factor: float = 1.2
    kvi_cap: float = 1e5


def design_procedure(Xs: float, Xg: float, targets: DesignTargets = DesignTargets(),
                     kip: float = 0.4776, kc_real: float = 1.0, kvi: float | None = None,
                     base: VsgParams | None = None) -> DesignResult:
    """Iterate ``kvi`` with pole-placed ``kc`` until the speed targets hold.

    Each step places the feeding gain on the 45-degree ray, then checks
    ``|lambda2| >= omega_n_min`` and the dominant-pole estimate of the
    10-95 % transition against ``transition_s``.  ``kvi`` grows
    geometrically; passing ``kvi`` pins it and skips the search.
    """
    p0 = (VsgParams() if base is None else base).replace(Xs=Xs, Xg=Xg, kip=kip, Xf=Xs)
    p0 = p0.with_kc(complex(kc_real, 0.0))

    def evaluate(k):
        q = p0.replace(kvi=k)
        q = q.with_kc(pole_place_kc(q, kc_real))
        _, geo = model.voltage_closed_loop(q)
        est = dominant_transition(geo.lambda2, q.omega1)
        ok = (geo.omega_n >= targets.omega_n_min and est is not None
              and est <= targets.transition_s and geo.lambda2.real < 0)
        return q, geo, est, ok

    if kvi is not None:
        q, _, _, _ = evaluate(kvi)
        return _result(q)

    k = targets.kvi_start
    iterations = 0
    best = None
    while k <= targets.kvi_cap:
        q, geo, est, ok = evaluate(k)
        if best is None or geo.omega_n > best[1].omega_n:
            best = (q, geo, est)
        if ok:
            return _result(q, iterations=iterations)
        k *= targets.kvi_factor
        iterations += 1
    q = best[0]
    raise TargetUnreachable(
        f"targets not met up to kvi = {targets.kvi_cap:g}", best=_result(q, iterations=iterations))
