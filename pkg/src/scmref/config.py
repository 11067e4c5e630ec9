"""Run configuration: a YAML tree with tech, design, temperature, sweeps, sizing,
mc, small_signal, leakage and output sections.

Every numeric leaf goes through ``float()`` so that YAML 1.1 quirks such as
``100e-9`` being read as a string do not leak into the model.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .acm import DeviceFlavor, TechProfile
from .constants import DEFAULT_GRID_C, ZERO_CELSIUS
from .errors import ConfigError, DomainError
from .model import DeltaVtProfile, DesignPoint, LeakagePerturbation

SECTIONS = {
    "tech",
    "design",
    "temperature",
    "supply",
    "sweeps",
    "sizing",
    "mc",
    "small_signal",
    "leakage",
    "bias_generator",
    "output",
}
TECH_KEYS = {
    "n", "m", "isq_ref", "t_ref", "isq_m1_ref", "isq_bm_ref", "isq_mirror_ref", "vt0",
    "vt0_tempco", "body_factor_linear", "body_factor_sqrt", "fermi_2phi", "fermi_2phi_tempco",
}
DESIGN_KEYS = {"alpha", "k_ptat", "delta_vt", "n_ratio", "m_ratio", "j_ratio", "k_ratio", "i_ref_target"}


@dataclass
class RunConfig:
    tech: TechProfile
    family: str
    design: DesignPoint
    grid_k: np.ndarray
    delta_vt_table: Optional[DeltaVtProfile] = None
    sweeps: dict = field(default_factory=dict)
    sizing: dict = field(default_factory=dict)
    mc: dict = field(default_factory=dict)
    small_signal: Optional[dict] = None
    leakage: Optional[LeakagePerturbation] = None
    bias_generator: Optional[dict] = None
    supply_grid: Optional[np.ndarray] = None
    output_dir: str = "out"
    fmt: str = "csv"
    base_dir: str = "."

    def resolve(self, path):
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)


def _num(value, where):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    return v


def _section(raw, name):
    value = raw.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return value


def _strict(section, allowed, name):
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {name}: {', '.join(sorted(extra))}")


def parse_range(spec, where, log=False):
    """A list of numbers, or a mapping {start, stop, num} / {start, stop, step}."""
    if isinstance(spec, (list, tuple)):
        values = np.array([_num(v, where) for v in spec])
    elif isinstance(spec, dict):
        _strict(spec, {"start", "stop", "num", "step", "log"}, where)
        try:
            start, stop = _num(spec["start"], where), _num(spec["stop"], where)
        except KeyError:
            raise ConfigError(f"{where}: range needs start and stop") from None
        if "step" in spec:
            step = _num(spec["step"], where)
            if not step > 0:
                raise ConfigError(f"{where}: step must be > 0")
            values = np.arange(start, stop + 0.5 * step, step)
        else:
            num = int(_num(spec.get("num", 0), where))
            if spec.get("log", log):
                if not (start > 0 and stop > 0):
                    raise ConfigError(f"{where}: log range needs positive bounds")
                values = np.geomspace(start, stop, num)
            else:
                values = np.linspace(start, stop, num)
    else:
        values = np.array([_num(spec, where)])
    if values.size == 0:
        raise ConfigError(f"{where}: empty range")
    return values


def _grid(raw):
    sec = _section(raw, "temperature")
    _strict(sec, {"grid_c"}, "temperature")
    grid_c = parse_range(sec["grid_c"], "temperature.grid_c") if "grid_c" in sec else DEFAULT_GRID_C
    if grid_c.size < 2 or np.any(np.diff(grid_c) <= 0):
        raise ConfigError("temperature.grid_c must be strictly increasing with >= 2 points")
    if np.any(grid_c + ZERO_CELSIUS <= 0):
        raise ConfigError("temperature.grid_c must stay above absolute zero")
    return grid_c + ZERO_CELSIUS


def _tech(raw):
    sec = dict(_section(raw, "tech"))
    family = sec.pop("family", "bulk")
    if family not in ("bulk", "fdsoi"):
        raise ConfigError(f"tech.family must be 'bulk' or 'fdsoi', got {family!r}")
    flavors_raw = sec.pop("flavors", {}) or {}
    _strict(sec, TECH_KEYS, "tech")
    kwargs = {k: _num(v, f"tech.{k}") for k, v in sec.items() if v is not None}
    flavors = {}
    for name, fl in flavors_raw.items():
        if not isinstance(fl, dict):
            raise ConfigError(f"tech.flavors.{name} must be a mapping")
        _strict(fl, {"vt0", "vt0_tempco", "isq_ref", "n", "m"}, f"tech.flavors.{name}")
        try:
            flavors[name] = DeviceFlavor(
                name=name, t_ref=kwargs.get("t_ref", 298.15), **{k: _num(v, f"tech.flavors.{name}.{k}") for k, v in fl.items()}
            )
        except (TypeError, DomainError) as exc:
            raise ConfigError(f"tech.flavors.{name}: {exc}") from exc
    try:
        tech = TechProfile(flavors=flavors, **kwargs)
    except DomainError as exc:
        raise ConfigError(f"tech: {exc}") from exc
    return tech, family


def _design(raw, tech):
    sec = dict(_section(raw, "design"))
    table = sec.pop("delta_vt_table", None)
    _strict(sec, DESIGN_KEYS, "design")
    for key in ("alpha", "k_ptat"):
        if key not in sec:
            raise ConfigError(f"design.{key} is required")
    kwargs = {k: (None if v is None else _num(v, f"design.{k}")) for k, v in sec.items()}
    profile = None
    if table is not None:
        if not isinstance(table, dict) or "temperatures_c" not in table or "values_v" not in table:
            raise ConfigError("design.delta_vt_table needs temperatures_c and values_v lists")
        t = np.array([_num(v, "delta_vt_table") for v in table["temperatures_c"]]) + ZERO_CELSIUS
        v = np.array([_num(x, "delta_vt_table") for x in table["values_v"]])
        try:
            profile = DeltaVtProfile(t, v)
        except DomainError as exc:
            raise ConfigError(f"design.delta_vt_table: {exc}") from exc
        kwargs.setdefault("delta_vt", float(profile(tech.t_ref)))
    try:
        design = DesignPoint(delta_vt_profile=profile, **kwargs)
    except DomainError as exc:
        raise ConfigError(f"design: {exc}") from exc
    return design, profile


def _leakage(raw, base):
    sec = raw.get("leakage")
    if not sec:
        return None
    _strict(sec, {"vx_csv", "vb6_csv"}, "leakage")

    def p(key):
        v = sec.get(key)
        return None if v is None else (v if os.path.isabs(v) else os.path.join(base, v))

    return LeakagePerturbation.from_csv(p("vx_csv"), p("vb6_csv"))


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    return config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def config_from_dict(raw, base_dir=".") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _strict(raw, SECTIONS, "config")
    tech, family = _tech(raw)
    design, profile = _design(raw, tech)
    grid_k = _grid(raw)
    sweeps = _section(raw, "sweeps")
    _strict(sweeps, {"solve_temperatures_c", "alpha", "k_ptat", "delta_vt", "valley_alpha", "k_range"}, "sweeps")
    sizing = _section(raw, "sizing")
    _strict(sizing, {"mode", "lut_m1", "lut_m2", "lut_length", "i_f6", "mirror_if", "v_sg8", "bracket", "n_bracket"}, "sizing")
    if sizing.get("mode", "acm") not in ("acm", "lut"):
        raise ConfigError("sizing.mode must be 'acm' or 'lut'")
    mc = _section(raw, "mc")
    _strict(mc, {"trials", "seed", "sigma_vx", "temperature_c", "s_iref_pct_per_mv", "bins"}, "mc")
    ss = raw.get("small_signal")
    if ss is not None and not isinstance(ss, dict):
        raise ConfigError("small_signal must be a mapping")
    bg = raw.get("bias_generator")
    if bg is not None:
        if not isinstance(bg, dict):
            raise ConfigError("bias_generator must be a mapping")
        _strict(bg, {"flavor8", "flavor9", "ratios", "mode", "s8", "branch_current"}, "bias_generator")
        for key in ("flavor8", "flavor9"):
            if bg.get(key) not in tech.flavors:
                raise ConfigError(f"bias_generator.{key} must name a flavor in tech.flavors")
    out = _section(raw, "output")
    _strict(out, {"dir", "format"}, "output")
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")
    supply = raw.get("supply")
    supply_grid = None
    if supply is not None:
        supply_grid = parse_range(supply.get("grid_v", []) if isinstance(supply, dict) else supply, "supply.grid_v")
    return RunConfig(
        tech=tech,
        family=family,
        design=design,
        grid_k=grid_k,
        delta_vt_table=profile,
        sweeps=sweeps,
        sizing=sizing,
        mc=mc,
        small_signal=ss,
        leakage=_leakage(raw, base_dir),
        bias_generator=bg,
        supply_grid=supply_grid,
        output_dir=str(out.get("dir", "out")),
        fmt=fmt,
        base_dir=base_dir,
    )
