"""ACM compact-model primitives.

Thermal voltage, the specific sheet current temperature law, and the
inversion-level/voltage relation

    F(i_f) = sqrt(1 + i_f) - 2 + ln(sqrt(1 + i_f) - 1) = (V_P - V_S) / U_T

together with its numerical inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constants import BOLTZMANN, ELEMENTARY_CHARGE, T_REF, ZERO_CELSIUS
from .errors import DomainError, SolverError


class Temperature(float):
    """Absolute temperature in kelvin; rejects non-positive values."""

    def __new__(cls, kelvin):
        value = float(kelvin)
        if not value > 0.0 or math.isinf(value):
            raise DomainError(f"temperature must be > 0 K, got {value!r}")
        return super().__new__(cls, value)

    @classmethod
    def from_celsius(cls, celsius):
        return cls(float(celsius) + ZERO_CELSIUS)

    @property
    def kelvin(self):
        return float(self)

    @property
    def celsius(self):
        return float(self) - ZERO_CELSIUS

    def __repr__(self):
        return f"Temperature({float(self)!r} K)"


def kelvin(T) -> float:
    """Validate and unwrap a temperature given in kelvin."""
    return float(Temperature(T))


@dataclass(frozen=True)
class DeviceFlavor:
    """One V_T type of a technology (e.g. LVT, HVT, ULL).

    ``isq_ref`` uses the weak-inversion definition mu*C'ox*(n-1)*U_T^2 that
    the V_SG expression is written with; it is not derived from the ACM one.
    """

    name: str
    vt0: float
    vt0_tempco: float = 0.0
    isq_ref: float = 100e-9
    n: float = 1.2
    m: float = 1.25
    t_ref: float = T_REF

    def __post_init__(self):
        if not self.isq_ref > 0:
            raise DomainError(f"{self.name}: isq_ref must be > 0")
        if not self.n > 1:
            raise DomainError(f"{self.name}: n must be > 1")

    def vt0_at(self, T):
        return self.vt0 + self.vt0_tempco * (kelvin(T) - self.t_ref)

    def isq_at(self, T):
        return self.isq_ref * (kelvin(T) / self.t_ref) ** (2.0 - self.m)


@dataclass(frozen=True)
class TechProfile:
    """Technology constants.

    ``isq_ref`` is the ACM specific sheet current (1/2*mu*C'ox*n*U_T^2) of
    M2 at ``t_ref``.  M1, the beta-multiplier pair and the mirrors default to
    the same value unless overridden.  ``vt0`` is the |V_T0| of those
    devices and is only used for supply-headroom estimates.
    """

    n: float = 1.2
    m: float = 1.25
    isq_ref: float = 100e-9
    t_ref: float = T_REF
    isq_m1_ref: float | None = None
    isq_bm_ref: float | None = None
    isq_mirror_ref: float | None = None
    vt0: float = 0.4
    vt0_tempco: float = 0.0
    body_factor_linear: float = 0.165
    body_factor_sqrt: float = 0.4
    fermi_2phi: float = 0.8
    fermi_2phi_tempco: float = 0.0
    flavors: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.n > 1:
            raise DomainError(f"n must be > 1, got {self.n}")
        if not 0 < self.m < 3:
            raise DomainError(f"m must lie in (0, 3), got {self.m}")
        for name in ("isq_ref", "isq_m1_ref", "isq_bm_ref", "isq_mirror_ref"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise DomainError(f"{name} must be > 0, got {value}")
        if not self.fermi_2phi > 0:
            raise DomainError("fermi_2phi must be > 0")
        if not self.t_ref > 0:
            raise DomainError("t_ref must be > 0")

    def isq_scale(self, T):
        """(T/t_ref)^(2-m)."""
        return (kelvin(T) / self.t_ref) ** (2.0 - self.m)

    def isq(self, role, T):
        """Specific sheet current for ``role`` in {'m2', 'm1', 'bm', 'mirror'}."""
        ref = {
            "m2": self.isq_ref,
            "m1": self.isq_m1_ref,
            "bm": self.isq_bm_ref,
            "mirror": self.isq_mirror_ref,
        }[role]
        if ref is None:
            ref = self.isq_ref
        return ref * self.isq_scale(T)

    def fermi_2phi_at(self, T):
        return self.fermi_2phi + self.fermi_2phi_tempco * (kelvin(T) - self.t_ref)


def thermal_voltage(T) -> float:
    """k_B*T/q in volts."""
    return BOLTZMANN * kelvin(T) / ELEMENTARY_CHARGE


def isq_at(tech: TechProfile, T) -> float:
    """ACM specific sheet current of M2 at temperature T: isq_ref*(T/t_ref)^(2-m)."""
    return tech.isq_ref * tech.isq_scale(T)


def acm_voltage_of_if(i_f) -> float:
    """F(i_f) in units of U_T.  Uses ln(sqrt(1+x)-1) = ln x - ln(sqrt(1+x)+1)."""
    i_f = float(i_f)
    if not i_f > 0:
        raise DomainError(f"inversion level must be > 0, got {i_f}")
    return kernels.acm_f(i_f)


def if_of_acm_voltage(v) -> float:
    """Inverse of :func:`acm_voltage_of_if`."""
    v = float(v)
    if not math.isfinite(v):
        raise DomainError(f"voltage must be finite, got {v}")
    i_f = kernels.acm_f_inv(v)
    if math.isnan(i_f):
        raise SolverError(f"F^-1({v}) is below the representable floor", bracket=(1e-300, 1e-12))
    return i_f


def acm_voltage_of_if_array(i_f):
    """Vectorised F for arrays of inversion levels."""
    i_f = np.asarray(i_f, dtype=float)
    if np.any(~(i_f > 0)):
        raise DomainError("inversion levels must be > 0")
    s = np.sqrt(1.0 + i_f)
    return s - 2.0 + np.log(i_f) - np.log(s + 1.0)


def gm_over_id(i_f, n, u_t):
    """ACM transconductance efficiency of a saturated device."""
    return 2.0 / (n * u_t * (1.0 + np.sqrt(1.0 + np.asarray(i_f, dtype=float))))


def vds_sat(i_f, u_t):
    """Saturation voltage estimate U_T*(sqrt(1+i_f) + 3)."""
    return u_t * (math.sqrt(1.0 + i_f) + 3.0)
