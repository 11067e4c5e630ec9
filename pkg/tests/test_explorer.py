import numpy as np
import pytest

from scmref.constants import DEFAULT_GRID_K
from scmref.errors import DomainError, InfeasibleDesignError
from scmref.explorer import (
    BracketError,
    ValleyFit,
    ValleyPoint,
    design_tc,
    fit_valley,
    grid_tc_map,
    guess_alpha,
    methodology_loop,
    valley_for_alpha,
    valley_table,
)
from scmref.metrics import PER_V_TO_PCT_PER_MV, box_tc
from scmref.model import DesignPoint, temperature_sweep

ALPHAS = np.linspace(2.0, 8.0, 7)


def test_ptat_row_equals_power_law(generic_tech):
    law = box_tc((DEFAULT_GRID_K, (DEFAULT_GRID_K / 298.15) ** 0.75))
    m = grid_tc_map(generic_tech, 0.0, [1.5, 3.0, 6.0], [10.0, 20.0])
    assert np.allclose(m.tc, law, rtol=1e-9)


def test_map_matches_full_sweep(generic_tech):
    m = grid_tc_map(generic_tech, 0.02, [2.9], [6.0])
    sw = temperature_sweep(DesignPoint(alpha=2.9, k_ptat=6.0, delta_vt=0.02), generic_tech)
    assert m.tc[0, 0] == pytest.approx(sw.tc, rel=1e-10)


def test_map_flags_infeasible(generic_tech):
    m = grid_tc_map(generic_tech, 0.02, [8.0], [1.5, 10.0])
    assert not m.feasible[0, 0] and np.isnan(m.tc[0, 0]) and np.isnan(m.s_iref[0, 0])
    assert m.feasible[0, 1]
    with pytest.raises(DomainError):
        grid_tc_map(generic_tech, 0.02, [], [1.0])


def test_generic_surface_has_interior_valley(generic_tech):
    ks = np.geomspace(1.5, 30, 60)
    m = grid_tc_map(generic_tech, 0.02, [2.0, 3.0, 4.0, 5.0], ks)
    for row in m.tc:
        i = np.nanargmin(row)
        assert 0 < i < ks.size - 1


def test_s_monotone_along_k_column(generic_tech):
    m = grid_tc_map(generic_tech, 0.02, np.linspace(1.5, 6, 10), [6.0, 10.0, 20.0])
    for j in range(3):
        col = m.s_iref[:, j][m.feasible[:, j]]
        assert np.all(np.diff(col) > 0)


def test_valley_generic_point(generic_tech):
    p = valley_for_alpha(generic_tech, 0.020, 2.9)
    assert p.k_ptat_opt == pytest.approx(6.0, rel=0.10)
    assert p.tc <= 100
    assert not p.boundary


def test_valley_interior_minimum(generic_tech):
    for p in valley_table(generic_tech, 0.020, ALPHAS):
        here = design_tc(generic_tech, p.alpha, p.k_ptat_opt, 0.020)
        assert here == pytest.approx(p.tc)
        for f in (1 - 1e-3, 1 + 1e-3):
            assert design_tc(generic_tech, p.alpha, p.k_ptat_opt * f, 0.020) > p.tc


def test_valley_tc_roughly_constant(generic_tech):
    tcs = [p.tc for p in valley_table(generic_tech, 0.020, ALPHAS)]
    assert all(55 <= t <= 105 for t in tcs)


def test_boundary_flag(generic_tech):
    p = valley_for_alpha(generic_tech, 0.020, 2.9, k_range=(3.5, 5.0))
    assert p.boundary
    assert p.k_ptat_opt == pytest.approx(5.0)


def test_22nm_valley(fdsoi_tech):
    alphas = np.linspace(3.5, 6.5, 31)
    tcs = [design_tc(fdsoi_tech, a, 6.0, 0.0176) for a in alphas]
    best = alphas[int(np.argmin(tcs))]
    assert best == pytest.approx(4.975, rel=0.05)
    assert min(tcs) == pytest.approx(70, abs=20)


def test_fit_exact_affine():
    pts = [ValleyPoint(a, 1.5 * a + 0.25, 80.0, 30.0) for a in (2.0, 3.0, 5.0, 7.0)]
    f = fit_valley(pts)
    assert f.slope == pytest.approx(1.5, rel=1e-14)
    assert f.offset == pytest.approx(0.25, rel=1e-13)
    assert f.r_squared == pytest.approx(1.0, abs=1e-14)
    assert guess_alpha(1.5 * 4.2 + 0.25, f) == pytest.approx(4.2, rel=1e-13)


def test_fit_rejects_degenerate():
    with pytest.raises(DomainError):
        fit_valley([ValleyPoint(2.0, 5.0, 1.0, 1.0)] * 3)
    with pytest.raises(DomainError):
        fit_valley([ValleyPoint(2.0, 5.0, 1.0, 1.0), ValleyPoint(3.0, 6.0, 1.0, 1.0)])


def test_guess_alpha_infeasible():
    with pytest.raises(InfeasibleDesignError):
        guess_alpha(0.5, ValleyFit(1.6, 1.4, 1.0))
    with pytest.raises(InfeasibleDesignError):
        guess_alpha(5.0, ValleyFit(-1.0, 1.4, 1.0))


@pytest.fixture(scope="module")
def generic_fits():
    from scmref.acm import TechProfile

    tech = TechProfile()
    out = {}
    for dvt in (0.010, 0.020, 0.030):
        pts = valley_table(tech, dvt, ALPHAS)
        out[dvt] = (pts, fit_valley(pts))
    return out


def test_fit_quality_and_ordering(generic_fits):
    fits = [generic_fits[d][1] for d in (0.010, 0.020, 0.030)]
    assert all(f.r_squared >= 0.99 for f in fits)
    assert fits[0].slope < fits[1].slope < fits[2].slope
    assert fits[0].offset < fits[1].offset < fits[2].offset


def test_order_preservation(generic_fits):
    ks = np.array([[p.k_ptat_opt for p in generic_fits[d][0]] for d in (0.010, 0.020, 0.030)])
    assert np.all(np.diff(ks, axis=0) > 0)


def test_iso_sensitivity(generic_fits):
    for d in (0.010, 0.020, 0.030):
        s = np.array([p.s_iref for p in generic_fits[d][0]])
        assert s.max() / s.min() <= 1.3


def test_guess_generic(generic_fits):
    assert guess_alpha(6.0, generic_fits[0.020][1]) == pytest.approx(2.9, rel=0.05)


def test_sensitivity_trend_at_alpha4(generic_tech):
    s = [valley_for_alpha(generic_tech, d, 4.0).s_iref * PER_V_TO_PCT_PER_MV for d in (0.01, 0.02, 0.03)]
    assert s[0] > s[1] > s[2]
    assert s[0] == pytest.approx(7.33, rel=0.15)
    assert s[2] == pytest.approx(2.45, rel=0.15)


def test_methodology_generic(generic_tech):
    r = methodology_loop(generic_tech, 0.020, 6.0)
    assert r.bracket_alphas[0] <= r.alpha_sim <= r.bracket_alphas[-1]
    assert abs(r.alpha_sim - r.alpha_guess) / r.alpha_guess <= 0.25
    assert r.tc_sim <= r.tc_guess
    assert r.sizing is not None and r.sizing.alpha == r.alpha_sim
    assert not r.widened


def test_methodology_22nm(fdsoi_tech):
    r = methodology_loop(fdsoi_tech, 0.0176, 6.0, profile="fdsoi")
    assert r.alpha_guess == pytest.approx(4.975, rel=0.05)
    assert r.alpha_sim == pytest.approx(4.975, rel=0.05)
    assert r.tc_sim == pytest.approx(70, abs=20)
    assert r.sizing.s_iref * PER_V_TO_PCT_PER_MV == pytest.approx(5.62, rel=0.15)


def test_methodology_deterministic(generic_tech):
    a = methodology_loop(generic_tech, 0.020, 6.0)
    b = methodology_loop(generic_tech, 0.020, 6.0)
    assert a.sizing == b.sizing and a.alpha_sim == b.alpha_sim


def test_methodology_widens_then_fails(generic_tech):
    r = methodology_loop(generic_tech, 0.020, 6.0, bracket=(1.02, 1.4), size=False)
    assert r.widened
    with pytest.raises(BracketError):
        methodology_loop(generic_tech, 0.020, 6.0, bracket=(1.3, 1.4), size=False)
