"""(K_PTAT, alpha) design-space exploration.

TC maps, valley extraction (coarse log scan + golden section on ln K_PTAT),
the affine valley fit used to guess alpha, and the guess -> simulate -> size
loop of the sizing flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .acm import TechProfile, thermal_voltage
from .constants import DEFAULT_GRID_K
from .errors import DomainError, InfeasibleDesignError, ScmrefError
from .metrics import s_iref_closed_form
from .model import DeltaVtProfile, DesignPoint

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_K_RANGE = (1.0, 40.0)
DEFAULT_FIT_ALPHAS = tuple(np.linspace(2.0, 8.0, 7))


class BracketError(ScmrefError):
    pass


@dataclass(frozen=True)
class ValleyPoint:
    alpha: float
    k_ptat_opt: float
    tc: float
    s_iref: float
    boundary: bool = False


@dataclass(frozen=True)
class ValleyFit:
    slope: float
    offset: float
    r_squared: float

    def k_ptat(self, alpha):
        return self.slope * alpha + self.offset


@dataclass(frozen=True)
class TcMap:
    alphas: np.ndarray
    k_ptats: np.ndarray
    tc: np.ndarray  # [alpha, k_ptat], nan where infeasible
    s_iref: np.ndarray
    feasible: np.ndarray


class _Objective:
    """Precomputed per-temperature arrays for fast TC evaluation."""

    def __init__(self, tech, delta_vt, grid=None):
        grid = DEFAULT_GRID_K if grid is None else np.asarray(grid, dtype=float)
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise DomainError("temperature grid must be strictly increasing with >= 2 points")
        self.tech = tech
        self.grid = grid
        u_t = np.array([thermal_voltage(T) for T in grid])
        if isinstance(delta_vt, DeltaVtProfile):
            dvt = delta_vt(grid)
            self.dvt_ref = float(delta_vt(tech.t_ref))
        else:
            dvt = np.full(grid.size, float(delta_vt))
            self.dvt_ref = float(delta_vt)
        self.offset = np.ascontiguousarray(dvt / (tech.n * u_t))
        self.weight = np.ascontiguousarray((grid / tech.t_ref) ** (2.0 - tech.m))
        self.span = float(grid[-1] - grid[0])
        self.u_t_ref = thermal_voltage(tech.t_ref)

    def tc(self, alpha, k_ptat):
        """Box TC in ppm/degC, nan when the design is infeasible anywhere on the grid."""
        rhs = self.offset + math.log(k_ptat)
        return kernels.box_tc_cell(float(alpha), rhs, self.weight, self.span)

    def s_iref(self, alpha, k_ptat):
        rhs = math.log(k_ptat) + self.dvt_ref / (self.tech.n * self.u_t_ref)
        x = kernels.solve_if2(float(alpha), rhs)
        if math.isnan(x):
            return math.nan
        return s_iref_closed_form(x, alpha, self.tech.n, self.u_t_ref)


def design_tc(tech, alpha, k_ptat, delta_vt, grid=None):
    """Box TC of I_REF for one (alpha, K_PTAT); nan if infeasible."""
    return _Objective(tech, delta_vt, grid).tc(alpha, k_ptat)


def grid_tc_map(tech: TechProfile, delta_vt, alphas, k_ptats, grid=None) -> TcMap:
    alphas = np.asarray(alphas, dtype=float)
    k_ptats = np.asarray(k_ptats, dtype=float)
    if alphas.size == 0 or k_ptats.size == 0:
        raise DomainError("alpha and K_PTAT ranges must be nonempty")
    obj = _Objective(tech, delta_vt, grid)
    tc = np.full((alphas.size, k_ptats.size), np.nan)
    s = np.full_like(tc, np.nan)
    for i, a in enumerate(alphas):
        for j, k in enumerate(k_ptats):
            tc[i, j] = obj.tc(a, k)
            if not math.isnan(tc[i, j]):
                s[i, j] = obj.s_iref(a, k)
    return TcMap(alphas, k_ptats, tc, s, ~np.isnan(tc))


def _golden(f, lo, hi, tol):
    """Minimise f on [lo, hi] to an interval width of ``tol``."""
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _nan_to_inf(v):
    return math.inf if math.isnan(v) else v


def _local_minima(values):
    v = values
    return [i for i in range(1, len(v) - 1) if v[i] < v[i - 1] and v[i] <= v[i + 1] and math.isfinite(v[i])]


def _scan_min(f, lo, hi, n_coarse, rtol, n_dense=401):
    """Coarse log scan then golden refinement; returns (x, f(x), boundary)."""
    xs = np.geomspace(lo, hi, n_coarse)
    vals = [_nan_to_inf(f(x)) for x in xs]
    if not any(math.isfinite(v) for v in vals):
        raise InfeasibleDesignError("no feasible point in the searched range")
    if len(_local_minima(vals)) > 1:
        xs = np.geomspace(lo, hi, n_dense)
        vals = [_nan_to_inf(f(x)) for x in xs]
    i = int(np.argmin(vals))
    if i == 0 or i == len(xs) - 1:
        return float(xs[i]), float(vals[i]), True
    g = lambda u: _nan_to_inf(f(math.exp(u)))
    u, fu = _golden(g, math.log(xs[i - 1]), math.log(xs[i + 1]), rtol)
    if fu > vals[i]:
        return float(xs[i]), float(vals[i]), False
    return math.exp(u), fu, False


def valley_for_alpha(tech, delta_vt, alpha, k_range=DEFAULT_K_RANGE, grid=None, n_coarse=41, rtol=1e-4):
    """K_PTAT minimising the TC of I_REF at fixed alpha."""
    obj = _Objective(tech, delta_vt, grid)
    k, tc, boundary = _scan_min(lambda k: obj.tc(alpha, k), k_range[0], k_range[1], n_coarse, rtol)
    return ValleyPoint(float(alpha), k, tc, obj.s_iref(alpha, k), boundary)


def valley_table(tech, delta_vt, alphas=DEFAULT_FIT_ALPHAS, k_range=DEFAULT_K_RANGE, grid=None):
    return [valley_for_alpha(tech, delta_vt, a, k_range, grid) for a in alphas]


def fit_valley(points) -> ValleyFit:
    """Least-squares K_PTAT = slope*alpha + offset."""
    if len(points) < 3:
        raise DomainError("at least three valley points are needed")
    a = np.array([p.alpha for p in points], dtype=float)
    k = np.array([p.k_ptat_opt for p in points], dtype=float)
    a_mean = a.mean()
    saa = np.sum((a - a_mean) ** 2)
    if saa <= 1e-300 * max(1.0, a_mean**2):
        raise DomainError("valley points share a single alpha; the fit is degenerate")
    slope = float(np.sum((a - a_mean) * (k - k.mean())) / saa)
    offset = float(k.mean() - slope * a_mean)
    ss_res = float(np.sum((k - (slope * a + offset)) ** 2))
    ss_tot = float(np.sum((k - k.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return ValleyFit(slope, offset, r2)


def guess_alpha(k_ptat, fit: ValleyFit):
    """Invert the affine valley fit."""
    if not fit.slope > 0:
        raise InfeasibleDesignError(f"valley slope {fit.slope:.6g} is not positive")
    if k_ptat < fit.offset:
        raise InfeasibleDesignError(f"K_PTAT {k_ptat} is below the valley offset {fit.offset:.6g}")
    alpha = (k_ptat - fit.offset) / fit.slope
    if not alpha > 1:
        raise InfeasibleDesignError(f"guessed alpha {alpha:.6g} is not > 1")
    return alpha


@dataclass
class MethodologyResult:
    fit: ValleyFit
    valley: list
    alpha_guess: float
    tc_guess: float
    alpha_sim: float
    tc_sim: float
    bracket_alphas: np.ndarray
    bracket_tcs: np.ndarray
    widened: bool
    design: DesignPoint
    sizing: object = None
    extra: dict = field(default_factory=dict)


def alpha_scan(tech, delta_vt, k_ptat, alphas, grid=None):
    obj = _Objective(tech, delta_vt, grid)
    return np.array([obj.tc(a, k_ptat) for a in alphas])


def methodology_loop(
    tech: TechProfile,
    delta_vt,
    k_ptat: float,
    template: Optional[DesignPoint] = None,
    fit_alphas=DEFAULT_FIT_ALPHAS,
    k_range=DEFAULT_K_RANGE,
    bracket=(0.7, 1.4),
    n_bracket=15,
    grid=None,
    size=True,
    **size_kwargs,
) -> MethodologyResult:
    """Guess alpha from the valley fit, scan a bracket around it, then size at the best alpha.

    ``template`` supplies N, M, J/K split and the target current; its alpha
    and K_PTAT are overridden.
    """
    obj = _Objective(tech, delta_vt, grid)
    valley = [valley_for_alpha(tech, delta_vt, a, k_range, grid) for a in fit_alphas]
    fit = fit_valley(valley)
    a_guess = guess_alpha(k_ptat, fit)
    tc_guess = _nan_to_inf(obj.tc(a_guess, k_ptat))

    widened = False
    lo_f, hi_f = bracket
    while True:
        alphas = a_guess * np.linspace(lo_f, hi_f, n_bracket)
        alphas = alphas[alphas > 1.0]
        tcs = np.array([_nan_to_inf(obj.tc(a, k_ptat)) for a in alphas])
        i = int(np.argmin(tcs)) if alphas.size else 0
        if alphas.size >= 3 and 0 < i < alphas.size - 1 and math.isfinite(tcs[i]):
            break
        if widened:
            raise BracketError(
                f"no interior TC minimum for alpha in [{alphas[0] if alphas.size else 1:.4g}, "
                f"{a_guess * hi_f:.4g}] at K_PTAT = {k_ptat}"
            )
        widened = True
        half = 0.5 * (hi_f - lo_f)
        lo_f, hi_f = max(lo_f - half, 1e-3), hi_f + half

    a_sim, tc_sim = _golden(
        lambda a: _nan_to_inf(obj.tc(a, k_ptat)), alphas[i - 1], alphas[i + 1], 1e-6 * alphas[i]
    )
    if tc_sim > tcs[i]:
        a_sim, tc_sim = float(alphas[i]), float(tcs[i])

    template = template or DesignPoint(alpha=2.0, k_ptat=k_ptat)
    profile = delta_vt if isinstance(delta_vt, DeltaVtProfile) else None
    design = DesignPoint(
        alpha=a_sim,
        k_ptat=k_ptat,
        delta_vt=obj.dvt_ref,
        n_ratio=template.n_ratio,
        m_ratio=template.m_ratio,
        j_ratio=template.j_ratio if math.isclose(template.k_ptat, k_ptat) else None,
        k_ratio=template.k_ratio if math.isclose(template.k_ptat, k_ptat) else None,
        i_ref_target=template.i_ref_target,
        delta_vt_profile=profile,
    )
    result = MethodologyResult(
        fit=fit,
        valley=valley,
        alpha_guess=a_guess,
        tc_guess=tc_guess,
        alpha_sim=float(a_sim),
        tc_sim=float(tc_sim),
        bracket_alphas=alphas,
        bracket_tcs=tcs,
        widened=widened,
        design=design,
    )
    if size:
        from . import sizing as sizing_mod

        result.sizing = sizing_mod.size_acm(design, tech, **size_kwargs)
    return result
