"""Transistor sizing from a solved design point.

Two routes produce a :class:`SizingResult`:

* ``size_acm`` runs the closed-form ACM steps (V_X, i_f2 and S_2, beta and
  S_1, the beta-multiplier pair, the mirrors);
* ``size_lut`` replaces the M1/M2 step by a gate-voltage sweep through
  sampled current-per-width tables.

Branch currents: M2 carries N*I_REF, M1 carries (1+M+N)*I_REF, M6 and M4
carry I_REF, M7 and M5 carry J*I_REF, M3 carries N*I_REF and M10 M*I_REF.
K = S_6/S_7.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .acm import TechProfile, kelvin, thermal_voltage, vds_sat
from .errors import ConfigError, DegenerateDesignError, DomainError, SolverError
from .metrics import s_iref_closed_form
from .model import DesignPoint, operating_point, vx_beta_multiplier

#: (i_f6, mirror_if) defaults per technology family
INVERSION_DEFAULTS = {"bulk": (0.03, 0.69), "fdsoi": (0.003, 0.25)}
DEGENERACY_RTOL = 1e-6

LUT_COLUMNS = ("vg_v", "vs_v", "id_per_w_a_per_m", "gm_over_id_per_v")


@dataclass(frozen=True)
class SizingResult:
    s1: float
    s2: float
    s3: float
    s4: float
    s5: float
    s6: float
    s7: float
    s10: Optional[float]  # None when M = 0 (no M10)
    inversion: dict
    alpha: float
    beta: float
    isq_ratio: float  # I_SQ2 / I_SQ1
    n_ratio: float
    m_ratio: float
    delta_vt: float
    v_x: float
    i_ref_target: float
    s_iref: float  # 1/V
    v_dd_min: float
    method: str = "acm"
    v_g: Optional[float] = None
    budget: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("s1", "s2", "s3", "s4", "s5", "s6", "s7", "s10"):
            v = getattr(self, name)
            if name == "s10" and v is None and self.m_ratio == 0:
                continue
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v}")

    @property
    def aspect_ratios(self):
        names = ("s1", "s2", "s3", "s4", "s5", "s6", "s7", "s10")
        return {k: getattr(self, k) for k in names if getattr(self, k) is not None}

    def eq15_rhs(self):
        """(I_SQ2/I_SQ1) * ((1+M+N)/N) / (alpha - beta)."""
        n = self.n_ratio
        return self.isq_ratio * (1.0 + self.m_ratio + n) / n / (self.alpha - self.beta)

    def eq15_residual(self):
        return abs(self.s1 / self.s2 / self.eq15_rhs() - 1.0)

    def to_dict(self):
        return asdict(self)


def _inversion_defaults(profile, i_f6, mirror_if):
    try:
        d6, dm = INVERSION_DEFAULTS[profile]
    except KeyError:
        raise DomainError(f"unknown technology family {profile!r}") from None
    i_f6 = d6 if i_f6 is None else float(i_f6)
    mirror_if = dm if mirror_if is None else float(mirror_if)
    if not 0 < i_f6 <= 0.1:
        raise DomainError(f"i_f6 must lie in (0, 0.1] (weak inversion), got {i_f6}")
    if not mirror_if > 0:
        raise DomainError("mirror_if must be > 0")
    return i_f6, mirror_if


def vdd_min(v_ds_sat, v_sg1, v_sg2, v_sg7, v_sg8, v_gs4, v_sd6c_sat):
    """V_DS,sat + max(V_SG1, V_SG8+V_SG1-V_SG2, V_GS4+V_SD6C,sat+V_SG1-V_SG2, V_SG7).

    ``v_sg8=None`` drops the bias-generator term.
    """
    args = (v_ds_sat, v_sg1, v_sg2, v_sg7, v_gs4, v_sd6c_sat) + (() if v_sg8 is None else (v_sg8,))
    if any(not v >= 0 for v in args):
        raise DomainError("voltage budget inputs must be >= 0")
    terms = [v_sg1, v_gs4 + v_sd6c_sat + v_sg1 - v_sg2, v_sg7]
    if v_sg8 is not None:
        terms.append(v_sg8 + v_sg1 - v_sg2)
    return v_ds_sat + max(terms)


def voltage_budget(tech, T, v_x, i_f1, i_f7, i_f6, mirror_if, v_sg8=None):
    """ACM estimates of the gate-source and saturation voltages entering V_DD,min."""
    u_t = thermal_voltage(T)
    vt0 = abs(tech.vt0 + tech.vt0_tempco * (kelvin(T) - tech.t_ref))

    def vgs(i_f):
        return max(0.0, vt0 + tech.n * u_t * kernels.acm_f(i_f))

    v_sg1 = vgs(i_f1)
    budget = {
        "v_ds_sat": vds_sat(mirror_if, u_t),
        "v_sg1": v_sg1,
        "v_sg2": max(0.0, v_sg1 - v_x),
        "v_sg7": vgs(i_f7),
        "v_sg8": v_sg8,
        "v_gs4": vgs(mirror_if),
        "v_sd6c_sat": vds_sat(i_f6, u_t),
    }
    return budget, vdd_min(**budget)


def _periphery(design, tech, T, i_f6, mirror_if):
    """Steps (d) and (e): beta-multiplier pair and mirrors."""
    i_ref = design.i_ref_target
    s6 = i_ref / (tech.isq("bm", T) * i_f6)
    s7 = s6 / design.k_ratio
    i_f7 = design.j_ratio * design.k_ratio * i_f6
    s4 = i_ref / (tech.isq("mirror", T) * mirror_if)
    return dict(
        s3=design.n_ratio * s4,
        s4=s4,
        s5=design.j_ratio * s4,
        s6=s6,
        s7=s7,
        s10=design.m_ratio * s4 if design.m_ratio > 0 else None,
    ), i_f7


def _check_design(design, alpha, beta):
    if not design.n_ratio > 0:
        raise DomainError("n_ratio must be > 0 to size M2")
    if alpha - beta <= DEGENERACY_RTOL * alpha:
        raise DegenerateDesignError(
            f"alpha - beta = {alpha - beta:.3g} is too small: S1/S2 would blow up"
        )


def size_acm(
    design: DesignPoint,
    tech: TechProfile,
    op25=None,
    i_f6=None,
    mirror_if=None,
    profile="bulk",
    v_sg8=None,
) -> SizingResult:
    """Closed-form ACM sizing at the operating point ``op25`` (solved at t_ref if omitted)."""
    i_f6, mirror_if = _inversion_defaults(profile, i_f6, mirror_if)
    if op25 is None:
        op25 = operating_point(design, tech, tech.t_ref)
    T = op25.temperature
    u_t = thermal_voltage(T)
    # (a)
    v_x = vx_beta_multiplier(design.k_ptat, design.delta_vt_at(T), tech.n, u_t)
    # (b)
    x = op25.i_f2
    i_ref = design.i_ref_target
    beta = op25.beta
    _check_design(design, design.alpha, beta)
    s2 = design.n_ratio * i_ref / (tech.isq("m2", T) * x)
    # (c)
    isq_ratio = tech.isq("m2", T) / tech.isq("m1", T)
    s1 = s2 * isq_ratio * (1.0 + design.m_ratio + design.n_ratio) / design.n_ratio / (design.alpha - beta)
    # (d), (e)
    periph, i_f7 = _periphery(design, tech, T, i_f6, mirror_if)
    i_f1 = design.alpha * x
    budget, vdd = voltage_budget(tech, T, v_x, i_f1, i_f7, i_f6, mirror_if, v_sg8)
    return SizingResult(
        s1=s1,
        s2=s2,
        inversion={"m1_f": i_f1, "m1_r": beta * x, "m2": x, "m6": i_f6, "m7": i_f7, "mirror": mirror_if},
        alpha=design.alpha,
        beta=beta,
        isq_ratio=isq_ratio,
        n_ratio=design.n_ratio,
        m_ratio=design.m_ratio,
        delta_vt=design.delta_vt_at(T),
        v_x=v_x,
        i_ref_target=i_ref,
        s_iref=op25.s_iref,
        v_dd_min=vdd,
        method="acm",
        budget=budget,
        **periph,
    )


# --- lookup tables -------------------------------------------------------


class DeviceLUT:
    """Sampled saturated-device characteristics on a (V_G, V_S) grid.

    Voltages are referred to the body.  ``id_per_w`` is the forward drain
    current per unit width (A/m) for a device of channel length ``length``.
    Read-only after construction.
    """

    def __init__(self, vg, vs, id_per_w, gm_over_id, length=1e-6, name="lut"):
        vg = np.array(vg, dtype=float)
        vs = np.array(vs, dtype=float)
        idw = np.array(id_per_w, dtype=float)
        gmid = np.array(gm_over_id, dtype=float)
        if vg.ndim != 1 or vs.ndim != 1 or vg.size < 2 or vs.size < 2:
            raise DomainError("LUT grids must be 1-D with at least two points")
        if np.any(np.diff(vg) <= 0) or np.any(np.diff(vs) <= 0):
            raise DomainError("LUT grids must be strictly increasing")
        if idw.shape != (vg.size, vs.size) or gmid.shape != idw.shape:
            raise DomainError("LUT tables must have shape (len(vg), len(vs))")
        if not np.all(np.isfinite(idw)) or np.any(idw <= 0):
            raise DomainError("current-per-width must be finite and > 0")
        if not length > 0:
            raise DomainError("length must be > 0")
        for a in (vg, vs, idw, gmid):
            a.setflags(write=False)
        self.vg, self.vs, self.id_per_w, self.gm_over_id = vg, vs, idw, gmid
        self._log_id = np.log(idw)
        self._log_id.setflags(write=False)
        self.length = float(length)
        self.name = name

    def scaled(self, factor):
        return DeviceLUT(self.vg, self.vs, self.id_per_w * factor, self.gm_over_id, self.length, self.name)

    def covers(self, vg, vs):
        return self.vg[0] <= vg <= self.vg[-1] and self.vs[0] <= vs <= self.vs[-1]

    def _cell(self, vg, vs):
        if not self.covers(vg, vs):
            raise DomainError(
                f"({vg:.6g} V, {vs:.6g} V) outside LUT {self.name!r} "
                f"[{self.vg[0]:.6g}, {self.vg[-1]:.6g}] x [{self.vs[0]:.6g}, {self.vs[-1]:.6g}]"
            )
        i = min(int(np.searchsorted(self.vg, vg, side="right")) - 1, self.vg.size - 2)
        j = min(int(np.searchsorted(self.vs, vs, side="right")) - 1, self.vs.size - 2)
        tg = (vg - self.vg[i]) / (self.vg[i + 1] - self.vg[i])
        ts = (vs - self.vs[j]) / (self.vs[j + 1] - self.vs[j])
        return i, j, tg, ts

    @staticmethod
    def _blend(tab, i, j, tg, ts):
        return (
            (1 - tg) * (1 - ts) * tab[i, j]
            + tg * (1 - ts) * tab[i + 1, j]
            + (1 - tg) * ts * tab[i, j + 1]
            + tg * ts * tab[i + 1, j + 1]
        )

    def current_per_width(self, vg, vs=0.0):
        """Bilinear interpolation of ln(I_D/W)."""
        i, j, tg, ts = self._cell(vg, vs)
        return math.exp(self._blend(self._log_id, i, j, tg, ts))

    def gm_id(self, vg, vs=0.0):
        i, j, tg, ts = self._cell(vg, vs)
        return float(self._blend(self.gm_over_id, i, j, tg, ts))

    # CSV I/O

    @classmethod
    def from_csv(cls, path, length=1e-6, name=None):
        """Load a vg-major table with columns vg_v, vs_v, id_per_w_a_per_m, gm_over_id_per_v."""
        try:
            with open(path, newline="") as fh:
                reader = csv.DictReader(fh)
                if reader.fieldnames is None or any(c not in reader.fieldnames for c in LUT_COLUMNS):
                    raise ConfigError(f"{path}: LUT header must contain {', '.join(LUT_COLUMNS)}")
                rows = [[float(r[c]) for c in LUT_COLUMNS] for r in reader]
        except OSError as exc:
            raise ConfigError(f"cannot read LUT file {path}: {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: non-numeric LUT entry ({exc})") from exc
        if not rows:
            raise ConfigError(f"{path}: LUT has no data rows")
        data = np.array(rows)
        vg = np.unique(data[:, 0])
        vs = np.unique(data[:, 1])
        if data.shape[0] != vg.size * vs.size:
            raise ConfigError(f"{path}: LUT rows do not form a full rectangular grid")
        expect_vg = np.repeat(vg, vs.size)
        expect_vs = np.tile(vs, vg.size)
        if not (np.array_equal(data[:, 0], expect_vg) and np.array_equal(data[:, 1], expect_vs)):
            raise ConfigError(f"{path}: LUT rows must be vg-major with strictly increasing vg and vs")
        try:
            return cls(
                vg,
                vs,
                data[:, 2].reshape(vg.size, vs.size),
                data[:, 3].reshape(vg.size, vs.size),
                length=length,
                name=name or str(path),
            )
        except DomainError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(LUT_COLUMNS)
            for i, g in enumerate(self.vg):
                for j, s in enumerate(self.vs):
                    w.writerow([f"{g:.17g}", f"{s:.17g}", f"{self.id_per_w[i, j]:.17g}", f"{self.gm_over_id[i, j]:.17g}"])


def synthesize_acm_lut(tech, role="m2", T=None, vg=None, vs=None, length=1e-6, vt0=None, name=None):
    """Build a LUT from the ACM equations: I_D/W = I_SQ/L * F^-1((V_P - V_S)/U_T)."""
    T = tech.t_ref if T is None else kelvin(T)
    vg = np.linspace(0.0, 1.2, 500) if vg is None else np.asarray(vg, dtype=float)
    vs = np.linspace(0.0, 0.3, 61) if vs is None else np.asarray(vs, dtype=float)
    vt0 = abs(tech.vt0) if vt0 is None else vt0
    u_t = thermal_voltage(T)
    isq = tech.isq(role, T)
    i_f = np.empty((vg.size, vs.size))
    for a, g in enumerate(vg):
        vp = (g - vt0) / tech.n
        for b, s in enumerate(vs):
            i_f[a, b] = kernels.acm_f_inv((vp - s) / u_t)
    if np.any(~(i_f > 0)):
        raise DomainError("LUT range reaches inversion levels below 1e-300")
    idw = isq / length * i_f
    gmid = 2.0 / (tech.n * u_t * (1.0 + np.sqrt(1.0 + i_f)))
    return DeviceLUT(vg, vs, idw, gmid, length=length, name=name or f"acm-{role}")


def _lut_ratios(lut1, lut2, v_g, v_x, isq_ratio):
    """(alpha, beta, j1_forward - j1_reverse, j2) at gate voltage v_g."""
    j2 = lut2.current_per_width(v_g - v_x, 0.0)
    j1f = lut1.current_per_width(v_g, 0.0)
    j1r = lut1.current_per_width(v_g, v_x)
    return j1f / j2 * isq_ratio, j1r / j2 * isq_ratio, j1f - j1r, j2


def size_lut(
    design: DesignPoint,
    tech: TechProfile,
    lut_m2: DeviceLUT,
    lut_m1: Optional[DeviceLUT] = None,
    T=None,
    i_f6=None,
    mirror_if=None,
    profile="bulk",
    v_sg8=None,
    n_sweep=None,
) -> SizingResult:
    """Size M1/M2 by sweeping the common gate voltage through the tables.

    M2 has its body tied to its source (V_X), M1's body is at ground.  The
    gate voltage is chosen where the table ratio i_f1/i_f2 equals the design
    alpha; widths then follow from the branch currents N*I_REF and
    (1+M+N)*I_REF.  Steps (d)-(e) are the same as :func:`size_acm`.
    """
    lut_m1 = lut_m2 if lut_m1 is None else lut_m1
    T = tech.t_ref if T is None else kelvin(T)
    i_f6, mirror_if = _inversion_defaults(profile, i_f6, mirror_if)
    if not design.n_ratio > 0:
        raise DomainError("n_ratio must be > 0 to size M2")
    u_t = thermal_voltage(T)
    v_x = vx_beta_multiplier(design.k_ptat, design.delta_vt_at(T), tech.n, u_t)
    isq_ratio = tech.isq("m2", T) / tech.isq("m1", T)
    if not (lut_m1.covers(lut_m1.vg[0], v_x) and lut_m1.vs[0] <= 0.0):
        raise DomainError(f"LUT source grid must span [0, V_X = {v_x:.6g} V]")
    lo = max(lut_m1.vg[0], lut_m2.vg[0] + v_x)
    hi = min(lut_m1.vg[-1], lut_m2.vg[-1] + v_x)
    if not hi > lo:
        raise DomainError("LUT gate range does not cover V_G and V_G - V_X simultaneously")

    def g(v):
        return _lut_ratios(lut_m1, lut_m2, v, v_x, isq_ratio)[0] - design.alpha

    n = n_sweep or max(64, 4 * lut_m1.vg.size)
    sweep = np.linspace(lo, hi, n)
    vals = np.array([g(v) for v in sweep])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if idx.size == 0:
        raise SolverError(
            f"no gate voltage in the LUT gives alpha = {design.alpha:.6g} "
            f"(table alpha spans {vals.min() + design.alpha:.6g}..{vals.max() + design.alpha:.6g})",
            bracket=(lo, hi),
        )
    a, b = sweep[idx[0]], sweep[idx[0] + 1]
    fa = vals[idx[0]]
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = g(m)
        if fm == 0 or b - a < 1e-13:
            a = b = m
            break
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    v_g = 0.5 * (a + b)
    alpha, beta, j1, j2 = _lut_ratios(lut_m1, lut_m2, v_g, v_x, isq_ratio)
    _check_design(design, alpha, beta)
    i_ref = design.i_ref_target
    s2 = design.n_ratio * i_ref / j2 / lut_m2.length
    s1 = (1.0 + design.m_ratio + design.n_ratio) * i_ref / j1 / lut_m1.length
    x = j2 * lut_m2.length / tech.isq("m2", T)
    periph, i_f7 = _periphery(design, tech, T, i_f6, mirror_if)
    budget, vdd = voltage_budget(tech, T, v_x, alpha * x, i_f7, i_f6, mirror_if, v_sg8)

    return SizingResult(
        s1=s1,
        s2=s2,
        inversion={"m1_f": alpha * x, "m1_r": beta * x, "m2": x, "m6": i_f6, "m7": i_f7, "mirror": mirror_if},
        alpha=alpha,
        beta=beta,
        isq_ratio=isq_ratio,
        n_ratio=design.n_ratio,
        m_ratio=design.m_ratio,
        delta_vt=design.delta_vt_at(T),
        v_x=v_x,
        i_ref_target=i_ref,
        s_iref=s_iref_closed_form(x, alpha, tech.n, u_t),
        v_dd_min=vdd,
        method="lut",
        v_g=v_g,
        budget=budget,
        **periph,
    )
