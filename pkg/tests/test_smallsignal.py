import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scmref.acm import TechProfile, thermal_voltage
from scmref.errors import DomainError
from scmref.model import DesignPoint, operating_point, reference_current
from scmref.smallsignal import (
    WORKED_EXAMPLES,
    SmallSignalSet,
    dominant_pole,
    gm_weak_inversion,
    ls_iref,
    ls_vx_basic,
    ls_vx_cascoded,
    r_scm,
)

BASE = dict(gm6=250e-9, gm6c=250e-9, gd5=1e-9, gd6=2e-9, gm8=90e-9, gd8=10e-9, j_ratio=2.0, c_f=1e-12, av_ota=100.0)


def sig9(x):
    return float(f"{x:.9g}")


def test_r_scm_examples():
    assert sig9(r_scm(1e-9, 50.0)) == 20e6
    assert r_scm(2e-9, 50.0) == pytest.approx(r_scm(1e-9, 50.0) / 2)
    with pytest.raises(DomainError):
        r_scm(0.0, 1.0)


def test_r_scm_finite_difference():
    tech = TechProfile()
    d = DesignPoint(alpha=2.9, k_ptat=6.0, delta_vt=0.02)
    T = 298.15
    op = operating_point(d, tech, T)
    h = 1e-6
    di = reference_current(d, tech, T, dvt_shift=h) - reference_current(d, tech, T, dvt_shift=-h)
    assert (2 * h) / di == pytest.approx(r_scm(op.i_ref, op.s_iref), rel=0.01)


def test_ls_vx_basic_example():
    ss = SmallSignalSet(**BASE)
    assert sig9(ls_vx_basic(ss)) == 10e-3


def test_ls_vx_cascoded_example():
    ss = SmallSignalSet(**BASE)
    assert sig9(ls_vx_cascoded(ss)) == 2e-3
    assert ls_vx_basic(ss) / ls_vx_cascoded(ss) == pytest.approx(1 + 2e-9 * 2 / 1e-9, rel=1e-15)


def test_gd6_zero_reduces_to_cascoded():
    ss = SmallSignalSet(**{**BASE, "gd6": 0.0})
    assert ls_vx_basic(ss) == ls_vx_cascoded(ss)


def test_exact_cascoded_form():
    ss = SmallSignalSet(**BASE)
    r = 20e6
    exact = ls_vx_cascoded(ss, r, exact=True)
    assert exact == pytest.approx(0.5e-9 / (250e-9 + 2e-9 / (250e-9 * r)), rel=1e-15)
    assert exact <= ls_vx_cascoded(ss)
    with pytest.raises(DomainError):
        ls_vx_cascoded(ss, None, exact=True)


def test_ls_iref_examples():
    assert sig9(ls_iref(2e-3, 50.0)) == 10.0
    assert ls_iref(0.0, 50.0) == 0.0


def test_worked_examples():
    ex = WORKED_EXAMPLES["22nm"]
    pred = ls_iref(ex["ls_vx"], ex["s_iref_per_v"])
    assert pred == pytest.approx(2.0475, rel=1e-12)
    assert pred == pytest.approx(ex["reference_pct_per_v"], rel=0.10)
    ex = WORKED_EXAMPLES["65nm"]
    assert ex["ls_vx"] == pytest.approx(ex["reference_ls_vx"], rel=0.10)


def test_dominant_pole_examples():
    ss = SmallSignalSet(**BASE)
    assert sig9(dominant_pole(ss)) == 159.154943
    ss2 = SmallSignalSet(**{**BASE, "c_f": 2e-12})
    assert dominant_pole(ss2) == pytest.approx(dominant_pole(ss) / 2, rel=1e-15)
    ss1 = SmallSignalSet(**{**BASE, "av_ota": 1.0})
    assert dominant_pole(ss1) == pytest.approx(100e-9 / (2 * math.pi * 1e-12), rel=1e-15)


@pytest.mark.parametrize("field,value", [("gm6", 0.0), ("gd6", -1e-9), ("c_f", 0.0), ("av_ota", 0.5), ("j_ratio", 0.0)])
def test_invariants(field, value):
    with pytest.raises(DomainError):
        SmallSignalSet(**{**BASE, field: value})


def _random_sets(rng, count):
    for _ in range(count):
        g = 10 ** rng.uniform(-12, -5, 6)
        yield SmallSignalSet(
            gm6=g[0], gm6c=g[1], gd5=g[2], gd6=g[3] * rng.integers(0, 2), gm8=g[4], gd8=g[5],
            j_ratio=10 ** rng.uniform(-1, 2), c_f=10 ** rng.uniform(-14, -10), av_ota=10 ** rng.uniform(0, 4),
        )


def test_cascoded_never_worse_10k():
    rng = np.random.default_rng(123)
    for ss in _random_sets(rng, 10_000):
        assert ls_vx_cascoded(ss) <= ls_vx_basic(ss)


@given(st.floats(1e-3, 1e3))
def test_ls_vx_scale_invariant(c):
    ss = SmallSignalSet(**BASE)
    scaled = SmallSignalSet(**{**BASE, **{k: BASE[k] * c for k in ("gm6", "gm6c", "gd5", "gd6", "gm8", "gd8")}})
    assert ls_vx_basic(scaled) == pytest.approx(ls_vx_basic(ss), rel=1e-14)
    assert ls_vx_cascoded(scaled) == pytest.approx(ls_vx_cascoded(ss), rel=1e-14)


def test_gm_weak_inversion():
    u = thermal_voltage(298.15)
    assert gm_weak_inversion(1e-9, 1.2, u) == pytest.approx(1e-9 / (1.2 * u))
    with pytest.raises(DomainError):
        gm_weak_inversion(0.0, 1.2, u)


def test_from_mapping():
    assert SmallSignalSet.from_mapping({k: str(v) for k, v in BASE.items()}) == SmallSignalSet(**BASE)
    with pytest.raises(DomainError):
        SmallSignalSet.from_mapping({"gm6": 1.0})
