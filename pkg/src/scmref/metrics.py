"""Box-method TC/LS, the sensitivity S_IREF and variability propagation.

Units: S_IREF is carried in 1/V internally (1 /V = 0.1 %/mV); TC is in
ppm/degC and LS in %/V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ScmrefError


PER_V_TO_PCT_PER_MV = 0.1


@dataclass(frozen=True)
class BoxSeries:
    axis: np.ndarray
    values: np.ndarray

    def __init__(self, axis, values):
        axis = np.asarray(axis, dtype=float)
        values = np.asarray(values, dtype=float)
        if axis.ndim != 1 or axis.shape != values.shape:
            raise DomainError("axis and values must be 1-D and of equal length")
        if axis.size < 2:
            raise DomainError("a box series needs at least two points")
        if np.any(np.diff(axis) <= 0):
            raise DomainError("axis must be strictly increasing")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class VariabilityEstimate:
    sigma_vx: float
    s_iref: float
    sigma_over_mu: float


def _box(series, scale):
    if not isinstance(series, BoxSeries):
        series = BoxSeries(*series)
    span = series.axis[-1] - series.axis[0]
    if not span > 0:
        raise DomainError("degenerate axis: max equals min")
    v = series.values
    return (v.max() - v.min()) / (v.mean() * span) * scale


def box_tc(series) -> float:
    """(max - min) / (mean * (T_max - T_min)) * 1e6, in ppm/degC.

    ``series`` is a :class:`BoxSeries` or an ``(axis, values)`` pair; the
    mean is the arithmetic mean over the sampled points.
    """
    return _box(series, 1e6)


def box_ls(series) -> float:
    """Line sensitivity over a supply sweep, in %/V."""
    return _box(series, 100.0)


def s_iref_closed_form(i_f2, alpha, n2, u_t):
    """Relative sensitivity (1/I_REF) dI_REF/dV_X in 1/V.

    The bracket alpha/(sqrt(1+alpha*x)-1) - 1/(sqrt(1+x)-1) is evaluated in
    its rationalised form (alpha-1)/(sqrt(1+alpha*x)+sqrt(1+x)), divided by x.
    """
    if not i_f2 > 0:
        raise DomainError(f"i_f2 must be > 0, got {i_f2}")
    if not alpha > 1:
        raise DomainError(f"alpha must be > 1, got {alpha}")
    s = math.sqrt(1.0 + i_f2)
    sa = math.sqrt(1.0 + alpha * i_f2)
    return 2.0 * (sa + s) / ((alpha - 1.0) * i_f2 * n2 * u_t)


def first_order_variability(sigma_vx, s_iref) -> VariabilityEstimate:
    """sigma/mu of I_REF = S_IREF * sigma_VX."""
    if sigma_vx < 0 or s_iref < 0:
        raise DomainError("sigma_vx and s_iref must be >= 0")
    return VariabilityEstimate(sigma_vx, s_iref, s_iref * sigma_vx)


class MonteCarloAbort(ScmrefError):
    pass


@dataclass(frozen=True)
class MonteCarloResult:
    sigma_over_mu: float
    mean_i_ref: float
    delta_vt: np.ndarray
    i_ref: np.ndarray
    failures: int
    hist_counts: np.ndarray
    hist_edges: np.ndarray


def monte_carlo_variability(design, tech, T, sigma_vx, trials, seed, s2_over_n=None, bins=40):
    """Nonlinear propagation of a V_X offset ~ N(0, sigma_vx) through the equilibrium.

    Each trial perturbs Delta V_T and re-solves i_f2.  Trial k uses the k-th
    draw of ``numpy.random.default_rng(seed)``, so results are reproducible
    bit for bit.  Trials whose equilibrium has no solution count as
    failures; more than 1 % of failures aborts.
    """
    from . import model

    if trials < 100:
        raise DomainError(f"at least 100 trials are required, got {trials}")
    if sigma_vx < 0:
        raise DomainError("sigma_vx must be >= 0")
    if seed is None:
        raise DomainError("a seed is required")
    rng = np.random.default_rng(seed)
    offsets = rng.standard_normal(trials) * sigma_vx
    x = model.solve_if2_shifted(design, tech, T, offsets)
    failed = np.isnan(x)
    failures = int(failed.sum())
    if failures > 0.01 * trials:
        raise MonteCarloAbort(f"{failures} of {trials} trials failed to solve")
    if s2_over_n is None:
        s2_over_n = model.default_s2_over_n(design, tech)
    i_ref = tech.isq("m2", T) * x * s2_over_n
    good = i_ref[~failed]
    mu = good.mean()
    # identical samples: report exactly zero rather than mean-rounding noise
    sigma_over_mu = float(good.std(ddof=1) / mu) if np.ptp(good) > 0 else 0.0
    counts, edges = np.histogram(good, bins=bins)
    return MonteCarloResult(sigma_over_mu, float(mu), offsets, i_ref, failures, counts, edges)
