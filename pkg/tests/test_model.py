import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from oracles import FROZEN
from scmref import kernels
from scmref.acm import TechProfile, thermal_voltage
from scmref.constants import DEFAULT_GRID_K
from scmref.errors import DomainError, InfeasibleDesignError, SaturationError
from scmref.model import (
    DeltaVtProfile,
    DesignPoint,
    beta_from_vx,
    default_s2_over_n,
    operating_point,
    reference_current,
    solve_if2,
    solve_if2_shifted,
    temperature_sweep,
    vx_beta_multiplier,
    vx_scm,
)

T25 = 298.15
GENERIC = DesignPoint(alpha=2.9, k_ptat=6.0, delta_vt=0.020)


# --- DesignPoint ---------------------------------------------------------


def test_design_defaults_split_k_ptat():
    d = DesignPoint(alpha=2.0, k_ptat=6.0)
    assert (d.j_ratio, d.k_ratio) == (6.0, 1.0)
    assert DesignPoint(alpha=2.0, k_ptat=6.0, k_ratio=2.0).j_ratio == 3.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(alpha=1.0, k_ptat=6),
        dict(alpha=2.0, k_ptat=0.5),
        dict(alpha=2.0, k_ptat=6, delta_vt=-0.01),
        dict(alpha=2.0, k_ptat=6, n_ratio=-1),
        dict(alpha=2.0, k_ptat=6, j_ratio=2, k_ratio=2),
        dict(alpha=2.0, k_ptat=6, i_ref_target=0),
    ],
)
def test_design_invariants(kwargs):
    with pytest.raises(DomainError):
        DesignPoint(**kwargs)


def test_design_replace_resets_split():
    d = DesignPoint(alpha=2.0, k_ptat=6.0, k_ratio=2.0).replace(k_ptat=8.0)
    assert d.j_ratio * d.k_ratio == 8.0


# --- closed forms --------------------------------------------------------


def test_vx_scm_values():
    assert vx_scm(1.0, 5.0, 1.2, 0.02585) == pytest.approx(FROZEN["vx_scm_1_5"], rel=1e-13)
    assert vx_scm(1.0, 1 + 1e-12, 1.2, 0.02585) == pytest.approx(0.0, abs=1e-12)
    assert vx_scm(2.0, 3.0, 2.4, 0.026) == pytest.approx(2 * vx_scm(2.0, 3.0, 1.2, 0.026), rel=1e-15)


@pytest.mark.parametrize("args", [(0.0, 2.0), (1.0, 1.0), (-1.0, 3.0)])
def test_vx_scm_domain(args):
    with pytest.raises(DomainError):
        vx_scm(args[0], args[1], 1.2, 0.025)


@given(st.floats(1e-4, 1e3), st.floats(1.01, 10.0))
def test_vx_scm_increasing(x, alpha):
    v = vx_scm(x, alpha, 1.2, 0.025)
    assert vx_scm(x * 1.01, alpha, 1.2, 0.025) > v
    assert vx_scm(x, alpha * 1.01, 1.2, 0.025) > v


def test_vx_beta_multiplier():
    u = thermal_voltage(T25)
    assert vx_beta_multiplier(1.0, 0.0, 1.2, u) == 0.0
    assert vx_beta_multiplier(6.0, 0.020, 1.2, u) == pytest.approx(FROZEN["vx_bm_6_20mV"], rel=1e-13)
    assert round(vx_beta_multiplier(6.0, 0.020, 1.2, 0.025693) * 1e3, 2) == 75.24
    # PTAT when Delta V_T = 0
    r = [vx_beta_multiplier(6.0, 0.0, 1.2, thermal_voltage(T)) / T for T in (233.15, 358.15)]
    assert r[0] == pytest.approx(r[1], rel=1e-15)


def test_beta_examples():
    u = thermal_voltage(T25)
    assert beta_from_vx(0.0, 6.8, 1.2, u) == 1.0
    x = 6.8
    vx = vx_scm(x, 2.9, 1.2, u)
    b = beta_from_vx(vx, x, 1.2, u)
    assert b == pytest.approx(float(oracles.beta(vx, x, 1.2, u)), rel=1e-12)
    resid = (kernels.acm_f(x) - kernels.acm_f(b * x)) - vx * 0.2 / (1.2 * u)
    assert abs(resid) < 1e-12


@given(st.floats(0.0, 0.3), st.floats(1e-3, 100.0))
def test_beta_monotone_in_vx(v, x):
    u = 0.025
    try:
        b1 = beta_from_vx(v, x, 1.2, u)
        b2 = beta_from_vx(v + 0.01, x, 1.2, u)
    except SaturationError:
        return
    assert 0 < b2 <= b1 <= 1


def test_beta_saturation_signalled():
    with pytest.raises(SaturationError):
        beta_from_vx(5.0, 1e-3, 1.2, 0.025)
    with pytest.raises(DomainError):
        beta_from_vx(-0.1, 1.0, 1.2, 0.025)


# --- equilibrium ---------------------------------------------------------


def test_solve_if2_generic_pinned(generic_tech):
    x = solve_if2(GENERIC, generic_tech, T25)
    assert x == pytest.approx(FROZEN["if2_generic"], rel=1e-12)
    assert round(x, 1) == 6.8


def test_solve_if2_residual(generic_tech):
    for T in DEFAULT_GRID_K:
        x = solve_if2(GENERIC, generic_tech, T)
        rhs = math.log(6.0) + 0.02 / (1.2 * thermal_voltage(T))
        assert abs(kernels.scm_lhs(x, 2.9) - rhs) < 1e-12


def test_ptat_if2_constant(generic_tech):
    d = DesignPoint(alpha=3.0, k_ptat=6.0)
    xs = np.array([solve_if2(d, generic_tech, T) for T in DEFAULT_GRID_K])
    assert np.ptp(xs) / xs.mean() < 1e-9


def test_if2_decreasing_in_T(generic_tech):
    xs = np.array([solve_if2(GENERIC, generic_tech, T) for T in DEFAULT_GRID_K])
    assert np.all(np.diff(xs) < 0)


def test_infeasible_design(generic_tech):
    # RHS below ln(alpha): K_PTAT too small for this alpha
    with pytest.raises(InfeasibleDesignError) as exc:
        solve_if2(DesignPoint(alpha=8.0, k_ptat=2.0), generic_tech, T25)
    assert exc.value.temperature == T25
    with pytest.raises(InfeasibleDesignError):
        solve_if2(DesignPoint(alpha=2.0, k_ptat=1.0), generic_tech, T25)


@given(st.floats(1.05, 10.0), st.floats(0.01, 3.0))
def test_sign_change_once(alpha, extra):
    """LHS - RHS changes sign exactly once over (1e-9, 1e5)."""
    rhs = math.log(alpha) + extra
    x = np.logspace(-9, 5, 400)
    g = np.array([kernels.scm_lhs(v, alpha) for v in x]) - rhs
    if g[0] >= 0 or g[-1] <= 0:
        return
    assert np.count_nonzero(np.diff(np.sign(g))) == 1


def test_reference_current_ptat_law(generic_tech):
    d = DesignPoint(alpha=3.0, k_ptat=6.0)
    i0 = reference_current(d, generic_tech, T25)
    for T in DEFAULT_GRID_K:
        assert reference_current(d, generic_tech, T) / i0 == pytest.approx((T / T25) ** 0.75, rel=1e-6)


def test_reference_current_linear_in_s2(generic_tech):
    a = reference_current(GENERIC, generic_tech, 320.0, s2_over_n=0.01)
    assert reference_current(GENERIC, generic_tech, 320.0, s2_over_n=0.02) == pytest.approx(2 * a, rel=1e-15)


def test_default_s2_hits_target(generic_tech):
    d = GENERIC.replace(i_ref_target=1.25e-9)
    assert reference_current(d, generic_tech, T25) == pytest.approx(1.25e-9, rel=1e-12)
    assert default_s2_over_n(d, generic_tech) > 0


def test_generic_current_flat(generic_tech):
    sw = temperature_sweep(GENERIC, generic_tech)
    norm = sw.i_ref / reference_current(GENERIC, generic_tech, T25)
    assert np.all(np.abs(norm - 1) < 0.03)


def test_operating_point_consistency(generic_tech):
    for T in DEFAULT_GRID_K:
        op = operating_point(GENERIC, generic_tech, T)
        u = thermal_voltage(T)
        assert abs(vx_scm(op.i_f2, 2.9, 1.2, u) - op.v_x) < 1e-12
        assert op.i_f1 / op.i_f2 == pytest.approx(2.9, rel=1e-15)
        assert 0 <= op.beta <= 1
        assert op.i_ref > 0 and op.v_x >= 0


def test_operating_point_beta_pinned(generic_tech):
    op = operating_point(GENERIC, generic_tech, T25)
    assert op.beta == pytest.approx(FROZEN["beta_generic"], rel=1e-11)
    assert op.temperature_c == pytest.approx(25.0)


def test_vx_affine_with_offset(generic_tech):
    sw = temperature_sweep(GENERIC, generic_tech)
    v = np.array([p.v_x for p in sw.points])
    slope, icpt = np.polyfit(sw.temperatures, v, 1)
    assert icpt == pytest.approx(0.020, abs=1e-12)
    assert np.max(np.abs(slope * sw.temperatures + icpt - v)) < 1e-14


def test_shifted_solve_matches_scalar(generic_tech):
    shifts = np.array([-1e-3, 0.0, 2e-3])
    many = solve_if2_shifted(GENERIC, generic_tech, T25, shifts)
    for s, x in zip(shifts, many):
        assert x == pytest.approx(solve_if2(GENERIC, generic_tech, T25, s), rel=1e-14)


def test_profile_design(generic_tech):
    prof = DeltaVtProfile(DEFAULT_GRID_K[[0, -1]], [0.019, 0.021])
    d = GENERIC.replace(delta_vt_profile=prof)
    assert d.delta_vt_at(T25) == pytest.approx(0.019 + 0.002 * (T25 - 233.15) / 125, rel=1e-12)
    assert d.delta_vt_at(100.0) == 0.019  # clamped


def test_sweep_grid_validation(generic_tech):
    with pytest.raises(DomainError):
        temperature_sweep(GENERIC, generic_tech, grid=[300.0])
    with pytest.raises(DomainError):
        temperature_sweep(GENERIC, generic_tech, grid=[300.0, 290.0])


def test_sweep_reports_failing_temperature(generic_tech):
    # RHS drops below ln(alpha) part-way up the grid
    d = DesignPoint(alpha=2.9, k_ptat=2.0, delta_vt=0.01)
    solve_if2(d, generic_tech, DEFAULT_GRID_K[0])
    with pytest.raises(InfeasibleDesignError) as exc:
        temperature_sweep(d, generic_tech, s2_over_n=1.0)
    assert DEFAULT_GRID_K[0] < exc.value.temperature <= DEFAULT_GRID_K[-1]
