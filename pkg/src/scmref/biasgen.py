"""Delta V_T production: the M8-M9 voltage reference and the body-effect laws.

The reference delivers V_X - V_B6 (= V_SB6) from the V_SG difference of two
weak-inversion devices of different V_T type carrying the same current.
Delta V_T then follows from the back-gate (linear) or bulk (square-root)
body-effect law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .acm import DeviceFlavor, TechProfile, kelvin, thermal_voltage
from .constants import DEFAULT_GRID_K
from .errors import DomainError, ScmrefError
from .metrics import box_tc
from .model import DeltaVtProfile

__all__ = [
    "DeviceFlavor",
    "BiasGenSizing",
    "vsg_weak_inversion",
    "vsb6_reference",
    "delta_vt_fdsoi",
    "delta_vt_bulk",
    "minimize_delta_vt_tc",
    "DeltaVtSweepResult",
    "delta_vt_table",
]


@dataclass(frozen=True)
class BiasGenSizing:
    s8: float
    s9: float
    flavor8: DeviceFlavor
    flavor9: DeviceFlavor
    branch_current: float = 1.25e-9

    def __post_init__(self):
        if not (self.s8 > 0 and self.s9 > 0):
            raise DomainError("s8 and s9 must be > 0")
        if not self.branch_current > 0:
            raise DomainError("branch_current must be > 0")


def vsg_weak_inversion(flavor: DeviceFlavor, i_sd, s, T):
    """|V_T0(T)| + n*U_T*ln(I_SD / (I_SQ(T)*S)) for a saturated weak-inversion device."""
    if not (i_sd > 0 and s > 0):
        raise DomainError("i_sd and s must be > 0")
    T = kelvin(T)
    return abs(flavor.vt0_at(T)) + flavor.n * thermal_voltage(T) * math.log(i_sd / (flavor.isq_at(T) * s))


def vsb6_reference(sizing: BiasGenSizing, T):
    """V_X - V_B6 = |V_T08 - V_T09| + n*U_T*ln(I_SQ9*S_9 / (I_SQ8*S_8))."""
    f8, f9 = sizing.flavor8, sizing.flavor9
    if not math.isclose(f8.n, f9.n, rel_tol=1e-12):
        raise DomainError("M8 and M9 must share the slope factor n")
    T = kelvin(T)
    dvt0 = abs(f8.vt0_at(T) - f9.vt0_at(T))
    ratio = f9.isq_at(T) * sizing.s9 / (f8.isq_at(T) * sizing.s8)
    return dvt0 + f8.n * thermal_voltage(T) * math.log(ratio)


def delta_vt_fdsoi(gamma_b, v_sb6):
    """Back-gate law: Delta V_T = gamma_b * V_SB6."""
    if v_sb6 < 0:
        raise DomainError("v_sb6 must be >= 0 (forward back-gate bias)")
    return gamma_b * v_sb6


def delta_vt_bulk(gamma_b_sqrt, two_phi_f, v_fbb):
    """Bulk body effect under forward bias: gamma*(sqrt(2phi) - sqrt(2phi - V_FBB))."""
    if v_fbb < 0:
        raise DomainError("v_fbb must be >= 0")
    if not v_fbb < two_phi_f:
        raise DomainError(f"v_fbb ({v_fbb}) must stay below 2*phi_f ({two_phi_f})")
    return gamma_b_sqrt * (math.sqrt(two_phi_f) - math.sqrt(two_phi_f - v_fbb))


def delta_vt_table(temperatures, values):
    """Delta V_T(T) given directly (V_T-type or length-difference options)."""
    return DeltaVtProfile(temperatures, values)


class AllInfeasibleError(ScmrefError):
    pass


@dataclass(frozen=True)
class DeltaVtSweepResult:
    ratios: np.ndarray
    tc_delta_vt: np.ndarray  # nan where infeasible
    tc_vsb6: np.ndarray
    best_ratio: float
    temperatures: np.ndarray
    vsb6: np.ndarray  # series at best_ratio
    delta_vt: np.ndarray
    tc_best: float
    tc_vsb6_best: float

    def profile(self):
        return DeltaVtProfile(self.temperatures, self.delta_vt)


def _delta_vt_series(tech, mode, vsb, temps):
    if mode == "fdsoi":
        return np.array([delta_vt_fdsoi(tech.body_factor_linear, v) for v in vsb])
    if mode == "bulk":
        return np.array(
            [delta_vt_bulk(tech.body_factor_sqrt, tech.fermi_2phi_at(T), v) for v, T in zip(vsb, temps)]
        )
    raise DomainError(f"unknown body-effect mode {mode!r}")


def minimize_delta_vt_tc(
    ratios: Sequence[float],
    tech: TechProfile,
    flavor8: DeviceFlavor,
    flavor9: DeviceFlavor,
    grid: Optional[Sequence[float]] = None,
    mode: str = "fdsoi",
    s8: float = 1.0,
    branch_current: float = 1.25e-9,
) -> DeltaVtSweepResult:
    """Sweep S_9/S_8 and keep the ratio whose Delta V_T(T) has the lowest box TC.

    A ratio is infeasible when V_SB6 leaves the forward-bias range anywhere on
    the grid (V_SB6 < 0, or >= 2*phi_f in bulk mode).
    """
    if mode not in ("fdsoi", "bulk"):
        raise DomainError(f"unknown body-effect mode {mode!r}")
    ratios = np.asarray(ratios, dtype=float)
    if ratios.size == 0:
        raise DomainError("empty S9/S8 sweep")
    temps = DEFAULT_GRID_K if grid is None else np.asarray(grid, dtype=float)
    tc_dvt = np.full(ratios.size, np.nan)
    tc_vsb = np.full(ratios.size, np.nan)
    series = {}
    for k, r in enumerate(ratios):
        sizing = BiasGenSizing(s8, s8 * r, flavor8, flavor9, branch_current)
        vsb = np.array([vsb6_reference(sizing, T) for T in temps])
        try:
            dvt = _delta_vt_series(tech, mode, vsb, temps)
        except DomainError:
            continue
        if np.any(dvt <= 0):
            continue
        tc_dvt[k] = box_tc((temps, dvt))
        tc_vsb[k] = box_tc((temps, vsb))
        series[k] = (vsb, dvt)
    if np.all(np.isnan(tc_dvt)):
        raise AllInfeasibleError("no S9/S8 ratio in the sweep gives a forward-biased V_SB6")
    best = int(np.nanargmin(tc_dvt))
    vsb, dvt = series[best]
    return DeltaVtSweepResult(
        ratios=ratios,
        tc_delta_vt=tc_dvt,
        tc_vsb6=tc_vsb,
        best_ratio=float(ratios[best]),
        temperatures=temps,
        vsb6=vsb,
        delta_vt=dvt,
        tc_best=float(tc_dvt[best]),
        tc_vsb6_best=float(tc_vsb[best]),
    )
