"""``scmref`` command-line front end.

Verbs: solve, valley, size, mc, smallsignal.  Outputs are assembled in
memory and committed with temp-file + rename, so a failing run leaves no
partial files.  Exit codes: 0 success, 2 config/user error, 3 numerical
failure (error JSON on stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import biasgen, explorer, metrics, model, sizing, smallsignal
from .config import RunConfig, load_config, parse_range
from .constants import ZERO_CELSIUS
from .errors import (
    ConfigError,
    DegenerateDesignError,
    DomainError,
    InfeasibleDesignError,
    SaturationError,
    ScmrefError,
    SolverError,
)

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (
    InfeasibleDesignError,
    SolverError,
    SaturationError,
    DegenerateDesignError,
    metrics.MonteCarloAbort,
    explorer.BracketError,
    biasgen.AllInfeasibleError,
)


def fmt(x):
    return format(float(x), ".9g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else None
    return obj


class Outputs:
    """Files collected in memory, written atomically by :meth:`commit`."""

    def __init__(self, directory):
        self.directory = directory
        self.files = {}

    def csv(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else ("" if v is None else fmt(v)) for v in row])
        self.files[name] = buf.getvalue()

    def json(self, name, data):
        self.files[name] = json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n"

    def commit(self):
        os.makedirs(self.directory, exist_ok=True)
        staged = []
        try:
            for name, text in self.files.items():
                fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.directory)
                with os.fdopen(fd, "w", newline="") as fh:
                    fh.write(text)
                staged.append((tmp, os.path.join(self.directory, name)))
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        for tmp, final in staged:
            os.replace(tmp, final)
        return [final for _, final in staged]


def _delta_vt(cfg: RunConfig):
    """Delta V_T used by the explorer: bias-generator profile, table, or constant."""
    bg = cfg.bias_generator
    if bg is not None:
        ratios = parse_range(bg.get("ratios", {"start": 0.1, "stop": 10, "num": 41, "log": True}), "bias_generator.ratios", log=True)
        res = biasgen.minimize_delta_vt_tc(
            ratios,
            cfg.tech,
            cfg.tech.flavors[bg["flavor8"]],
            cfg.tech.flavors[bg["flavor9"]],
            grid=cfg.grid_k,
            mode=bg.get("mode", "fdsoi"),
            s8=float(bg.get("s8", 1.0)),
            branch_current=float(bg.get("branch_current", 1.25e-9)),
        )
        return res.profile(), res
    if cfg.delta_vt_table is not None:
        return cfg.delta_vt_table, None
    return cfg.design.delta_vt, None


def _design_with(cfg, dvt):
    if isinstance(dvt, model.DeltaVtProfile):
        return cfg.design.replace(delta_vt_profile=dvt, delta_vt=float(dvt(cfg.tech.t_ref)))
    return cfg.design


def cmd_solve(cfg: RunConfig, out: Outputs):
    dvt, bg = _delta_vt(cfg)
    design = _design_with(cfg, dvt)
    grid = cfg.grid_k
    if "solve_temperatures_c" in cfg.sweeps:
        grid = parse_range(cfg.sweeps["solve_temperatures_c"], "sweeps.solve_temperatures_c") + ZERO_CELSIUS
    sweep = model.temperature_sweep(design, cfg.tech, grid, leak=cfg.leakage)
    i_ref = sweep.i_ref
    i25 = model.reference_current(design, cfg.tech, cfg.tech.t_ref)
    ptat = design.delta_vt_profile is None and design.delta_vt == 0
    law = (grid / cfg.tech.t_ref) ** (2.0 - cfg.tech.m)
    rows = [(p.temperature_c, p.i_f2, p.beta, p.v_x, p.i_ref, p.s_iref) for p in sweep.points]
    header = ("t_c", "i_f2", "beta", "v_x_v", "i_ref_a", "s_iref_per_v")
    report = {
        "ptat_mode": ptat,
        "tc_ppm_per_c": sweep.tc,
        "ptat_law_tc_ppm_per_c": metrics.box_tc((grid, law)),
        "i_ref_25c_a": i25,
        "i_ref_normalized": (i_ref / i25).tolist(),
        "t_c": (grid - ZERO_CELSIUS).tolist(),
        "design": {"alpha": design.alpha, "k_ptat": design.k_ptat, "delta_vt_25c_v": design.delta_vt_at(cfg.tech.t_ref)},
    }
    if bg is not None:
        report["bias_generator"] = {"best_ratio": bg.best_ratio, "tc_delta_vt_ppm_per_c": bg.tc_best}
    if cfg.fmt == "csv":
        out.csv("tempsweep.csv", header, rows)
    else:
        report["points"] = [dict(zip(header, r)) for r in rows]
    out.json("solve.json", report)


def _dvt_series(cfg):
    if "delta_vt" in cfg.sweeps:
        return list(parse_range(cfg.sweeps["delta_vt"], "sweeps.delta_vt"))
    return [_delta_vt(cfg)[0]]


def _label(dvt):
    if isinstance(dvt, model.DeltaVtProfile):
        return "profile"
    return f"{dvt * 1e3:g}mV"


def cmd_valley(cfg: RunConfig, out: Outputs):
    series = _dvt_series(cfg)
    alphas_v = parse_range(cfg.sweeps.get("valley_alpha", {"start": 2, "stop": 8, "num": 7}), "sweeps.valley_alpha")
    if np.any(alphas_v <= 1):
        raise ConfigError("sweeps.valley_alpha values must be > 1")
    k_range = tuple(float(v) for v in cfg.sweeps.get("k_range", explorer.DEFAULT_K_RANGE))
    if len(k_range) != 2 or not 1 <= k_range[0] < k_range[1]:
        raise ConfigError("sweeps.k_range must be [lo, hi] with 1 <= lo < hi")
    fits = []
    for dvt in series:
        suffix = "" if len(series) == 1 else "_" + _label(dvt)
        pts = explorer.valley_table(cfg.tech, dvt, alphas_v, k_range, cfg.grid_k)
        rows = [(p.alpha, p.k_ptat_opt, p.tc, p.s_iref * metrics.PER_V_TO_PCT_PER_MV) for p in pts]
        header = ("alpha", "k_ptat_opt", "tc_ppm_per_c", "s_iref_pct_per_mv")
        if cfg.fmt == "csv":
            out.csv(f"valley{suffix}.csv", header, rows)
        else:
            out.json(f"valley{suffix}.json", [dict(zip(header, r)) | {"boundary": p.boundary} for r, p in zip(rows, pts)])
        fit = explorer.fit_valley(pts)
        entry = {"slope": fit.slope, "offset": fit.offset, "r_squared": fit.r_squared, "boundary_points": sum(p.boundary for p in pts)}
        entry["delta_vt_v"] = None if isinstance(dvt, model.DeltaVtProfile) else float(dvt)
        fits.append(entry)
        if "alpha" in cfg.sweeps and "k_ptat" in cfg.sweeps:
            alphas = parse_range(cfg.sweeps["alpha"], "sweeps.alpha")
            ks = parse_range(cfg.sweeps["k_ptat"], "sweeps.k_ptat")
            if np.any(alphas <= 1) or np.any(ks < 1):
                raise ConfigError("sweeps.alpha must be > 1 and sweeps.k_ptat >= 1")
            tm = explorer.grid_tc_map(cfg.tech, dvt, alphas, ks, cfg.grid_k)
            mrows = [
                (a, k, tm.tc[i, j], tm.s_iref[i, j] * metrics.PER_V_TO_PCT_PER_MV, "1" if tm.feasible[i, j] else "0")
                for i, a in enumerate(alphas)
                for j, k in enumerate(ks)
            ]
            mheader = ("alpha", "k_ptat", "tc_ppm_per_c", "s_iref_pct_per_mv", "feasible")
            if cfg.fmt == "csv":
                out.csv(f"tcmap{suffix}.csv", mheader, mrows)
            else:
                out.json(f"tcmap{suffix}.json", [dict(zip(mheader, r)) for r in mrows])
    slopes = [f["slope"] for f in fits]
    offsets = [f["offset"] for f in fits]
    out.json(
        "valley_fit.json",
        {
            "fits": fits,
            "slopes_increasing": bool(np.all(np.diff(slopes) > 0)),
            "offsets_increasing": bool(np.all(np.diff(offsets) > 0)),
        },
    )


def _size_kwargs(cfg):
    s = cfg.sizing
    kw = {"profile": cfg.family}
    for key in ("i_f6", "mirror_if", "v_sg8"):
        if s.get(key) is not None:
            kw[key] = float(s[key])
    return kw


def cmd_size(cfg: RunConfig, out: Outputs):
    s = cfg.sizing
    mode = s.get("mode", "acm")
    luts = None
    if mode == "lut":
        # load before any heavy work so a missing file fails fast
        if "lut_m2" not in s:
            raise ConfigError("sizing.lut_m2 is required in LUT mode")
        length = float(s.get("lut_length", 1e-6))
        lut2 = sizing.DeviceLUT.from_csv(cfg.resolve(s["lut_m2"]), length=length)
        lut1 = sizing.DeviceLUT.from_csv(cfg.resolve(s["lut_m1"]), length=length) if s.get("lut_m1") else None
        luts = (lut2, lut1)
    dvt, bg = _delta_vt(cfg)
    bracket = tuple(float(v) for v in s.get("bracket", (0.7, 1.4)))
    kw = _size_kwargs(cfg)
    res = explorer.methodology_loop(
        cfg.tech,
        dvt,
        cfg.design.k_ptat,
        template=cfg.design,
        bracket=bracket,
        n_bracket=int(s.get("n_bracket", 15)),
        grid=cfg.grid_k,
        **kw,
    )
    doc = {
        "alpha_guess": res.alpha_guess,
        "alpha_sim": res.alpha_sim,
        "tc_guess_ppm_per_c": res.tc_guess,
        "tc_sim_ppm_per_c": res.tc_sim,
        "bracket_widened": res.widened,
        "valley_fit": {"slope": res.fit.slope, "offset": res.fit.offset, "r_squared": res.fit.r_squared},
        "sizing_acm": res.sizing.to_dict(),
        "v_dd_min_v": res.sizing.v_dd_min,
        "mode": mode,
    }
    if luts is not None:
        lut_res = sizing.size_lut(res.design, cfg.tech, luts[0], luts[1], **kw)
        doc["sizing_lut"] = lut_res.to_dict()
        acm_ar = res.sizing.aspect_ratios
        doc["lut_vs_acm_max_rel_diff"] = max(abs(v / acm_ar[k] - 1.0) for k, v in lut_res.aspect_ratios.items())
        doc["v_dd_min_v"] = lut_res.v_dd_min
    if bg is not None:
        doc["bias_generator"] = {"best_ratio": bg.best_ratio, "tc_delta_vt_ppm_per_c": bg.tc_best}
    out.json("size.json", doc)


def cmd_mc(cfg: RunConfig, out: Outputs, seed=None):
    mc = cfg.mc
    seed = mc.get("seed") if seed is None else seed
    if seed is None:
        raise ConfigError("mc.seed (or --seed) is required for Monte Carlo")
    try:
        seed = int(seed)
        trials = int(mc.get("trials", 1000))
        sigma_vx = float(mc.get("sigma_vx", 1e-3))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mc: {exc}") from exc
    if seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    if trials < 100:
        raise ConfigError(f"mc.trials must be >= 100, got {trials}")
    if sigma_vx < 0:
        raise ConfigError("mc.sigma_vx must be >= 0")
    dvt, _ = _delta_vt(cfg)
    design = _design_with(cfg, dvt)
    T = float(mc.get("temperature_c", 25.0)) + ZERO_CELSIUS
    res = metrics.monte_carlo_variability(design, cfg.tech, T, sigma_vx, trials, seed, bins=int(mc.get("bins", 40)))
    if mc.get("s_iref_pct_per_mv") is not None:
        s_iref = float(mc["s_iref_pct_per_mv"]) / metrics.PER_V_TO_PCT_PER_MV
        s_source = "config"
    else:
        s_iref = model.operating_point(design, cfg.tech, T).s_iref
        s_source = "model"
    first = metrics.first_order_variability(sigma_vx, s_iref)
    if cfg.fmt == "csv":
        out.csv("mc.csv", ("trial", "delta_vt_v", "i_ref_a"),
                [(str(k), d, i) for k, (d, i) in enumerate(zip(res.delta_vt, res.i_ref))])
        edges = res.hist_edges
        out.csv("mc_hist.csv", ("bin_lo_a", "bin_hi_a", "count"),
                [(edges[k], edges[k + 1], str(int(c))) for k, c in enumerate(res.hist_counts)])
    doc = {
        "seed": seed,
        "trials": trials,
        "sigma_vx_v": sigma_vx,
        "temperature_c": T - ZERO_CELSIUS,
        "sigma_over_mu_pct": res.sigma_over_mu * 100,
        "mean_i_ref_a": res.mean_i_ref,
        "failures": res.failures,
        "first_order_pct": first.sigma_over_mu * 100,
        "first_order_s_iref_pct_per_mv": s_iref * metrics.PER_V_TO_PCT_PER_MV,
        "first_order_s_iref_source": s_source,
    }
    if cfg.fmt == "json":
        doc["histogram"] = {"edges_a": res.hist_edges, "counts": res.hist_counts}
    out.json("mc.json", doc)


def cmd_smallsignal(cfg: RunConfig, out: Outputs):
    if not cfg.small_signal:
        raise ConfigError("small_signal section is required")
    sec = dict(cfg.small_signal)
    reference = sec.pop("reference_ls_iref_pct_per_v", None)
    s_override = sec.pop("s_iref_pct_per_mv", None)
    sec.setdefault("j_ratio", cfg.design.j_ratio)
    try:
        ss = smallsignal.SmallSignalSet.from_mapping(sec)
    except DomainError as exc:
        raise ConfigError(f"small_signal: {exc}") from exc
    if s_override is not None:
        s_iref = float(s_override) / metrics.PER_V_TO_PCT_PER_MV
    else:
        s_iref = model.operating_point(_design_with(cfg, _delta_vt(cfg)[0]), cfg.tech, cfg.tech.t_ref).s_iref
    i_ref = cfg.design.i_ref_target
    r = smallsignal.r_scm(i_ref, s_iref)
    basic = smallsignal.ls_vx_basic(ss)
    casc = smallsignal.ls_vx_cascoded(ss)
    exact = smallsignal.ls_vx_cascoded(ss, r, exact=True)
    doc = {
        "r_scm_ohm": r,
        "s_iref_pct_per_mv": s_iref * metrics.PER_V_TO_PCT_PER_MV,
        "ls_vx_basic_v_per_v": basic,
        "ls_vx_cascoded_v_per_v": casc,
        "ls_vx_cascoded_exact_v_per_v": exact,
        "ls_iref_basic_pct_per_v": smallsignal.ls_iref(basic, s_iref),
        "ls_iref_cascoded_pct_per_v": smallsignal.ls_iref(casc, s_iref),
        "dominant_pole_hz": smallsignal.dominant_pole(ss),
        "reference_ls_iref_pct_per_v": reference,
    }
    out.json("smallsignal.json", doc)


COMMANDS = {
    "solve": cmd_solve,
    "valley": cmd_valley,
    "size": cmd_size,
    "mc": cmd_mc,
    "smallsignal": cmd_smallsignal,
}


def build_parser():
    p = argparse.ArgumentParser(prog="scmref", description="SCM current-reference design toolkit")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in COMMANDS:
        sp = sub.add_parser(verb)
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--format", choices=("csv", "json"), help="table format (overrides output.format)")
        sp.add_argument("--seed", type=int, help="Monte Carlo seed (overrides mc.seed)")
    return p


def _fail(code, exc):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.format:
            cfg.fmt = args.format
        out_dir = args.out if args.out else cfg.resolve(cfg.output_dir)
        out = Outputs(out_dir)
        if args.verb == "mc":
            cmd_mc(cfg, out, seed=args.seed)
        else:
            COMMANDS[args.verb](cfg, out)
    except NUMERIC_ERRORS as exc:
        return _fail(EXIT_NUMERIC, exc)
    except (ConfigError, DomainError) as exc:
        return _fail(EXIT_USER, exc)
    except ScmrefError as exc:
        return _fail(EXIT_NUMERIC, exc)
    out.commit()
    for path in sorted(out.files):
        print(os.path.join(out_dir, path))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
