"""Self-cascode + beta-multiplier equilibrium.

The beta-multiplier imposes V_X = n*U_T*ln(K_PTAT) + Delta V_T on the SCM,
whose ACM description gives V_X = n*U_T*[F(alpha*i_f2) - F(i_f2)].  Equating
the two fixes i_f2(T); I_REF(T) = I_SQ2(T) * i_f2(T) * S_2/N.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .acm import TechProfile, kelvin, thermal_voltage
from .constants import BETA_FLOOR, DEFAULT_GRID_K, ZERO_CELSIUS
from .errors import (
    ConfigError,
    DomainError,
    InfeasibleDesignError,
    SaturationError,
    SolverError,
)
from .metrics import box_tc, s_iref_closed_form


@dataclass(frozen=True)
class DeltaVtProfile:
    """Delta V_T sampled over temperature; linear interpolation, clamped ends."""

    temperatures: np.ndarray  # K
    values: np.ndarray  # V

    def __init__(self, temperatures, values):
        t = np.asarray(temperatures, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 1:
            raise DomainError("profile needs matching 1-D temperature and value arrays")
        if np.any(np.diff(t) <= 0):
            raise DomainError("profile temperatures must be strictly increasing")
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "values", v)

    def __call__(self, T):
        return np.interp(T, self.temperatures, self.values)


@dataclass(frozen=True)
class DesignPoint:
    alpha: float
    k_ptat: float
    delta_vt: float = 0.0
    n_ratio: float = 1.0
    m_ratio: float = 1.0
    j_ratio: Optional[float] = None
    k_ratio: Optional[float] = None
    i_ref_target: float = 1e-9
    delta_vt_profile: Optional[DeltaVtProfile] = None

    def __post_init__(self):
        if not self.alpha > 1:
            raise DomainError(f"alpha must be > 1, got {self.alpha}")
        if not self.k_ptat >= 1:
            raise DomainError(f"k_ptat must be >= 1, got {self.k_ptat}")
        if self.n_ratio < 0 or self.m_ratio < 0:
            raise DomainError("n_ratio and m_ratio must be >= 0")
        if self.delta_vt < 0:
            raise DomainError("delta_vt must be >= 0")
        if not self.i_ref_target > 0:
            raise DomainError("i_ref_target must be > 0")
        j, k = self.j_ratio, self.k_ratio
        if j is None and k is None:
            j, k = self.k_ptat, 1.0
        elif j is None:
            j = self.k_ptat / k
        elif k is None:
            k = self.k_ptat / j
        elif not math.isclose(j * k, self.k_ptat, rel_tol=1e-9):
            raise DomainError(f"k_ptat ({self.k_ptat}) != j_ratio*k_ratio ({j * k})")
        if not (j > 0 and k > 0):
            raise DomainError("j_ratio and k_ratio must be > 0")
        object.__setattr__(self, "j_ratio", float(j))
        object.__setattr__(self, "k_ratio", float(k))

    def delta_vt_at(self, T):
        if self.delta_vt_profile is not None:
            return float(self.delta_vt_profile(T))
        return self.delta_vt

    def replace(self, **changes):
        from dataclasses import replace

        if "k_ptat" in changes and "j_ratio" not in changes and "k_ratio" not in changes:
            changes.setdefault("j_ratio", None)
            changes.setdefault("k_ratio", None)
        return replace(self, **changes)


@dataclass(frozen=True)
class OperatingPoint:
    temperature: float
    i_f2: float
    i_f1: float
    i_r1: float
    beta: float
    v_x: float
    i_ref: float
    s_iref: float

    @property
    def temperature_c(self):
        return self.temperature - ZERO_CELSIUS


def _interp_leak(T, temps, currents):
    """Log-linear in current, linear in T, clamped; linear where a sample is 0."""
    if T <= temps[0]:
        return float(currents[0])
    if T >= temps[-1]:
        return float(currents[-1])
    k = int(np.searchsorted(temps, T)) - 1
    t0, t1 = temps[k], temps[k + 1]
    c0, c1 = currents[k], currents[k + 1]
    w = (T - t0) / (t1 - t0)
    if c0 > 0 and c1 > 0:
        return float(math.exp((1 - w) * math.log(c0) + w * math.log(c1)))
    return float((1 - w) * c0 + w * c1)


@dataclass(frozen=True)
class LeakagePerturbation:
    """Parasitic diode leakage sampled at the V_X and V_B6 nodes."""

    vx_temperatures: np.ndarray = field(default_factory=lambda: np.array([DEFAULT_GRID_K[0]]))
    vx_currents: np.ndarray = field(default_factory=lambda: np.zeros(1))
    vb6_temperatures: np.ndarray = field(default_factory=lambda: np.array([DEFAULT_GRID_K[0]]))
    vb6_currents: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        for tname, cname in (("vx_temperatures", "vx_currents"), ("vb6_temperatures", "vb6_currents")):
            t = np.asarray(getattr(self, tname), dtype=float)
            c = np.asarray(getattr(self, cname), dtype=float)
            if t.ndim != 1 or t.shape != c.shape or t.size < 1:
                raise DomainError(f"{tname}/{cname} must be matching 1-D arrays")
            if np.any(np.diff(t) <= 0):
                raise DomainError(f"{tname} must be strictly increasing")
            if np.any(c < 0):
                raise DomainError(f"{cname} must be >= 0")
            object.__setattr__(self, tname, t)
            object.__setattr__(self, cname, c)

    def at(self, T):
        """(I_leak at V_X, I_leak at V_B6) in amperes."""
        return (
            _interp_leak(T, self.vx_temperatures, self.vx_currents),
            _interp_leak(T, self.vb6_temperatures, self.vb6_currents),
        )

    def scaled(self, factor):
        return LeakagePerturbation(
            self.vx_temperatures,
            self.vx_currents * factor,
            self.vb6_temperatures,
            self.vb6_currents * factor,
        )

    @classmethod
    def from_csv(cls, vx_path=None, vb6_path=None):
        """Load two-column CSVs (``temperature_c``, ``current_a``); a missing node is zero."""
        kwargs = {}
        for prefix, path in (("vx", vx_path), ("vb6", vb6_path)):
            if path is None:
                continue
            t, c = read_leakage_csv(path)
            kwargs[f"{prefix}_temperatures"] = t
            kwargs[f"{prefix}_currents"] = c
        return cls(**kwargs)


def read_leakage_csv(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read leakage file {path}: {exc}") from exc
    try:
        t = np.array([float(r["temperature_c"]) for r in rows]) + ZERO_CELSIUS
        c = np.array([float(r["current_a"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: expected columns temperature_c, current_a") from exc
    if t.size == 0:
        raise ConfigError(f"{path}: no data rows")
    return t, c


@dataclass(frozen=True)
class TemperatureSweep:
    design: DesignPoint
    points: tuple
    i_leak_vx: np.ndarray
    i_leak_vb6: np.ndarray

    @property
    def temperatures(self):
        return np.array([p.temperature for p in self.points])

    @property
    def i_ref(self):
        return np.array([p.i_ref for p in self.points])

    @property
    def tc(self):
        return box_tc((self.temperatures, self.i_ref))


# --- closed forms --------------------------------------------------------


def vx_scm(i_f2, alpha, n, u_t):
    """V_X seen from the SCM: n*U_T*[F(alpha*i_f2) - F(i_f2)]."""
    if not i_f2 > 0:
        raise DomainError(f"i_f2 must be > 0, got {i_f2}")
    if not alpha > 1:
        raise DomainError(f"alpha must be > 1, got {alpha}")
    return n * u_t * kernels.scm_lhs(i_f2, alpha)


def beta_from_vx(v_x, i_f2, n, u_t, floor=BETA_FLOOR):
    """beta = i_r1/i_f2 from V_X*(n-1) = n*U_T*[F(i_f2) - F(beta*i_f2)]."""
    if v_x < 0:
        raise DomainError(f"v_x must be >= 0, got {v_x}")
    if not i_f2 > 0:
        raise DomainError(f"i_f2 must be > 0, got {i_f2}")
    target = v_x * (n - 1.0) / (n * u_t)
    beta = kernels.solve_beta(i_f2, target, floor)
    if math.isnan(beta):
        raise SaturationError(
            f"M1 effectively saturated: beta < {floor:g} needed for V_X = {v_x:.6g} V, i_f2 = {i_f2:.6g}"
        )
    return beta


def vx_beta_multiplier(k_ptat, delta_vt, n, u_t):
    """V_X imposed by the beta-multiplier: n*U_T*ln(K_PTAT) + Delta V_T."""
    if not k_ptat >= 1:
        raise DomainError(f"k_ptat must be >= 1, got {k_ptat}")
    if delta_vt < 0:
        raise DomainError(f"delta_vt must be >= 0, got {delta_vt}")
    return n * u_t * math.log(k_ptat) + delta_vt


# --- equilibrium ---------------------------------------------------------


def equilibrium_rhs(design, tech, T, dvt_shift=0.0):
    """ln(K_PTAT) + Delta V_T / (n U_T)."""
    u_t = thermal_voltage(T)
    return math.log(design.k_ptat) + (design.delta_vt_at(T) + dvt_shift) / (tech.n * u_t)


def solve_if2(design: DesignPoint, tech: TechProfile, T, dvt_shift=0.0):
    """Inversion level of M2 at temperature T."""
    T = kelvin(T)
    rhs = equilibrium_rhs(design, tech, T, dvt_shift)
    if rhs <= 0:
        raise InfeasibleDesignError(f"equilibrium RHS {rhs:.6g} <= 0 at {T:.2f} K", temperature=T)
    if rhs <= math.log(design.alpha):
        raise InfeasibleDesignError(
            f"equilibrium RHS {rhs:.6g} <= ln(alpha) = {math.log(design.alpha):.6g} at {T:.2f} K "
            "(K_PTAT too small for this alpha)",
            temperature=T,
        )
    try:
        x = kernels.solve_if2(design.alpha, rhs)
    except SolverError as exc:
        raise SolverError(f"i_f2 solve failed at {T:.2f} K", bracket=exc.bracket, temperature=T) from exc
    if math.isnan(x):
        raise InfeasibleDesignError(f"i_f2 below 1e-300 at {T:.2f} K", temperature=T)
    return x


def solve_if2_shifted(design, tech, T, shifts):
    """Vectorised i_f2 for an array of Delta V_T shifts; nan where infeasible."""
    T = kelvin(T)
    u_t = thermal_voltage(T)
    shifts = np.asarray(shifts, dtype=float)
    rhs = math.log(design.k_ptat) + (design.delta_vt_at(T) + shifts) / (tech.n * u_t)
    return kernels.solve_if2_many(design.alpha, rhs)


def default_s2_over_n(design, tech):
    """S_2/N giving I_REF = i_ref_target at the reference temperature."""
    x = solve_if2(design, tech, tech.t_ref)
    return design.i_ref_target / (tech.isq("m2", tech.t_ref) * x)


def reference_current(design, tech, T, s2_over_n=None, dvt_shift=0.0):
    """I_REF = I_SQ2(T) * i_f2(T) * S_2/N."""
    if s2_over_n is None:
        s2_over_n = default_s2_over_n(design, tech)
    return tech.isq("m2", T) * solve_if2(design, tech, T, dvt_shift) * s2_over_n


def operating_point(design, tech, T, s2_over_n=None, dvt_shift=0.0, leak_vx=0.0):
    """Full operating point; ``leak_vx`` is subtracted from the reported I_REF."""
    T = kelvin(T)
    if s2_over_n is None:
        s2_over_n = default_s2_over_n(design, tech)
    u_t = thermal_voltage(T)
    x = solve_if2(design, tech, T, dvt_shift)
    v_x = vx_beta_multiplier(design.k_ptat, design.delta_vt_at(T) + dvt_shift, tech.n, u_t)
    beta = beta_from_vx(v_x, x, tech.n, u_t)
    i_ref = tech.isq("m2", T) * x * s2_over_n - leak_vx
    return OperatingPoint(
        temperature=T,
        i_f2=x,
        i_f1=design.alpha * x,
        i_r1=beta * x,
        beta=beta,
        v_x=v_x,
        i_ref=i_ref,
        s_iref=s_iref_closed_form(x, design.alpha, tech.n, u_t),
    )


def _zero_shift(i_leak_vb6, T):
    return 0.0


def temperature_sweep(
    design: DesignPoint,
    tech: TechProfile,
    grid: Optional[Sequence[float]] = None,
    s2_over_n: Optional[float] = None,
    leak: Optional[LeakagePerturbation] = None,
    dvt_shift: Callable[[float, float], float] = _zero_shift,
) -> TemperatureSweep:
    """Operating points over a temperature grid (kelvin, default -40..85 degC).

    With ``leak`` given, the V_X-node leakage is subtracted from I_REF and
    the V_B6-node leakage goes through ``dvt_shift(i_leak_vb6, T)``, which
    returns a Delta V_T change in volts (zero by default).
    """
    grid = DEFAULT_GRID_K if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise DomainError("temperature grid needs at least two points")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("temperature grid must be strictly increasing")
    if s2_over_n is None:
        s2_over_n = default_s2_over_n(design, tech)
    points = []
    lvx = np.zeros(grid.size)
    lvb6 = np.zeros(grid.size)
    for k, T in enumerate(grid):
        if leak is not None:
            lvx[k], lvb6[k] = leak.at(T)
        shift = dvt_shift(lvb6[k], T) if leak is not None else 0.0
        points.append(operating_point(design, tech, T, s2_over_n, shift, lvx[k]))
    return TemperatureSweep(design, tuple(points), lvx, lvb6)
