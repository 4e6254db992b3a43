"""Parameter record of the single-machine VSG and its named presets.

All reactances and susceptances are per-unit at the base frequency; the
inductance and capacitance used in differential equations carry seconds
(``L = X / omega1``, ``C = B / omega1``).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigError

OMEGA1 = 2 * np.pi * 50.0

# complex current feeding gains quoted for the nominal circuit
PLACED_KC = 1 + 1.1356j
OPTIMIZED_KC = 0.5 + 0.767j


@dataclass(frozen=True)
class VsgParams:
    """Circuit and controller parameters, per-unit.

    The grid-current feed is stored as the complex ``beta_v`` and the
    filter-current feedback as the real ``beta_k``; the compound gain
    ``kc = beta_k - beta_v`` is what the analytical voltage loop sees.
    A complex gain ``kc = kr + j ki`` is assigned with ``beta_k = kr`` and
    ``beta_v = -j ki``.

    Parameters
    ----------
    power_loop : {"swing", "droop"}
        Swing equation with inertia ``H`` and damping ``D``, or frequency
        droop ``dw = kd (P_ref - P)``.
    compensator : bool
        Enable the voltage-angle compensator.
    """

    omega1: float = OMEGA1
    Xs: float = 0.15
    Xg: float = 0.30
    Rg: float = 1e-3
    Bc: float = 0.01
    kip: float = 0.4776
    kii: float = 15.0
    kvp: float = 0.0
    kvi: float = 800.0
    beta_v: complex = 0.5
    beta_k: float = 1.0
    H: float = 1.0
    D: float = 66.67
    Kq: float = 0.0
    omegaQ: float = 2 * np.pi * 5.0
    Xf: Optional[float] = None
    Bf: Optional[float] = None
    power_loop: str = "swing"
    kd: float = 0.1
    compensator: bool = False
    Vg: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta_v", complex(self.beta_v))
        if self.Xf is None:
            object.__setattr__(self, "Xf", self.Xs)
        if self.Bf is None:
            object.__setattr__(self, "Bf", self.Bc)
        self.validate()

    def validate(self) -> None:
        checks = [
            (self.omega1 > 0, "omega1 must be positive"),
            (self.Xs > 0, "Xs must be positive"),
            (self.Xg >= 0, "Xg must be non-negative"),
            (self.Rg >= 0, "Rg must be non-negative"),
            (self.Bc >= 0, "Bc must be non-negative"),
            (self.kip > 0, "kip must be positive"),
            (self.kvi > 0, "kvi must be positive"),
            (self.kii >= 0 and self.kvp >= 0, "PI gains must be non-negative"),
            (self.power_loop in ("swing", "droop"), "power_loop must be 'swing' or 'droop'"),
            (self.power_loop != "swing" or self.H > 0, "H must be positive in swing mode"),
            (self.power_loop != "droop" or self.kd > 0, "kd must be positive in droop mode"),
        ]
        vals = [self.omega1, self.Xs, self.Xg, self.Rg, self.Bc, self.kip, self.kii,
                self.kvp, self.kvi, self.beta_k, self.H, self.D, self.Kq, self.kd]
        if not all(np.isfinite(vals)) or not np.isfinite(self.beta_v):
            raise ConfigError("parameters must be finite")
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    # derived quantities ----------------------------------------------------
    @property
    def Ls(self) -> float:
        return self.Xs / self.omega1

    @property
    def Lg(self) -> float:
        return self.Xg / self.omega1

    @property
    def Cf(self) -> float:
        return self.Bc / self.omega1

    @property
    def kc(self) -> complex:
        """Compound current feeding gain ``beta_k - beta_v``."""
        return complex(self.beta_k) - self.beta_v

    # modifiers -------------------------------------------------------------
    def with_kc(self, kc: complex) -> "VsgParams":
        """Assign a complex feeding gain (``beta_k = Re kc``, ``beta_v = -j Im kc``)."""
        kc = complex(kc)
        return replace(self, beta_k=kc.real, beta_v=-1j * kc.imag)

    def with_real_kc(self, kc: float) -> "VsgParams":
        """Real compound gain through the grid-current feed, ``beta_k`` kept."""
        return replace(self, beta_v=complex(self.beta_k - kc))

    def replace(self, **changes) -> "VsgParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta_v"] = complex(self.beta_v)
        return d


def base() -> VsgParams:
    """Nominal simulation circuit with the generic controller (``kc = 0.5``)."""
    return VsgParams()


def small_filter() -> VsgParams:
    """Nominal listing with the 0.10 p.u. filter reactance."""
    return VsgParams(Xs=0.10)


def so_tuned() -> VsgParams:
    """Symmetry-optimum voltage/current gains on the nominal circuit.

    The current loop is proportional only.
    """
    return VsgParams(kvi=22.1, kip=0.796, kii=0.0)


def placed() -> VsgParams:
    return base().with_kc(PLACED_KC)


def optimized() -> VsgParams:
    return base().with_kc(OPTIMIZED_KC)


def experiment(physical_esr: bool = False) -> VsgParams:
    """Scaled laboratory setup (125 V, 1 kVA, 15 mH grid, 4 uF filter).

    The grid-current feed ``beta_v = 0.95`` offsets the measured line
    resistance, so by default the model keeps the nominal 1e-3 p.u. ESR;
    ``physical_esr`` substitutes the measured 0.533 ohm instead.
    """
    omega1 = OMEGA1
    zbase = 125.0 ** 2 / 1000.0
    return VsgParams(
        Xs=0.10,
        Xg=15e-3 * omega1 / zbase,
        Rg=0.533 / zbase if physical_esr else 1e-3,
        Bc=omega1 * 4e-6 * zbase,
        beta_v=0.95,
    )


PRESETS = {
    "base": base,
    "small_filter": small_filter,
    "so_tuned": so_tuned,
    "placed": placed,
    "optimized": optimized,
    "experiment": experiment,
}


def preset(name: str) -> VsgParams:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
