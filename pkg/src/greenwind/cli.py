"""Reproducible experiment runner.

One JSON config describes one experiment; the runner writes summary.json,
per-experiment CSVs and optional SVG plots into the output directory.  Exit
codes: 0 all configured checks pass, 1 a check failed, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .cauchy import fit_cauchy
from .forms import (make_form, make_weight, product_weight,
                    stratonovich_approx, green_residual)
from .impurities import (campbell_cf, empirical_cf, ImpurityExperiment,
                         level_cells, limit_cf, path_time_integral, xi_samples)
from .paths import close_path, sample_bm, sample_bridge
from .winding import (Grid, joint_tail_area, level_measures,
                      regularized_winding_integral, winding_field)

EXPERIMENTS = ("green", "werner", "lp_moments", "joint", "impurities",
               "cauchy_limit", "strat_schemes")


class ConfigError(ValueError):
    pass


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    _require(isinstance(cfg, dict), "config must be a JSON object")
    _require(cfg.get("experiment") in EXPERIMENTS,
             f"experiment must be one of {EXPERIMENTS}")
    _require("master_seed" in cfg, "master_seed is required (no entropy defaults)")
    p = cfg.setdefault("path", {})
    p.setdefault("kind", "loop")
    p.setdefault("n_steps", 1024)
    p.setdefault("horizon", 1.0)
    p.setdefault("start", [0.0, 0.0])
    p.setdefault("end", [0.0, 0.0])
    n = p["n_steps"]
    _require(isinstance(n, int) and n >= 2 and (n & (n - 1)) == 0,
             "path.n_steps must be a power of two >= 2")
    _require(p["kind"] in ("bm", "bridge", "loop"), "path.kind must be bm, bridge or loop")
    g = cfg.setdefault("grid", {})
    g.setdefault("nx", 256)
    g.setdefault("ny", 256)
    g.setdefault("padding", 2)
    cfg.setdefault("form", {"id": "area", "params": {}})
    cfg.setdefault("weight_f", {"id": "const", "params": {"c": 1.0}})
    cfg.setdefault("weight_g", {"id": "const", "params": {"c": 1.0}})
    cfg.setdefault("K_list", [4, 16, 64])
    cfg.setdefault("n_max", 64)
    cfg.setdefault("lambda_list", [10.0, 100.0])
    cfg.setdefault("alpha_list", [0.5, 1.0])
    cfg.setdefault("n_replicas", 200)
    cfg.setdefault("N_range", [10, 30])
    cfg.setdefault("p_list", [1.0, 2.0])
    cfg.setdefault("n_pairs", 10)
    cfg.setdefault("plots", False)
    cfg.setdefault("output_dir", "out")
    try:
        make_form(cfg["form"]["id"], **cfg["form"].get("params", {}))
        make_weight(cfg["weight_f"]["id"], **cfg["weight_f"].get("params", {}))
        make_weight(cfg["weight_g"]["id"], **cfg["weight_g"].get("params", {}))
    except (KeyError, TypeError) as e:
        raise ConfigError(f"unknown catalog reference: {e}")
    return cfg


def _sample_path(cfg, replica=0):
    p = cfg["path"]
    seed = cfg["master_seed"]
    if p["kind"] == "bm":
        return sample_bm(p["n_steps"], p["horizon"], p["start"], seed, replica=replica)
    end = p["start"] if p["kind"] == "loop" else p["end"]
    return sample_bridge(p["n_steps"], p["horizon"], p["start"], end, seed,
                         replica=replica)


def _grid_for(cfg, loop):
    g = cfg["grid"]
    return Grid.cover(loop, g["nx"], g["ny"], g["padding"])


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _maybe_plot(cfg, outdir, name, draw):
    """Render one decorative SVG when plots are enabled and matplotlib exists."""
    if not cfg.get("plots"):
        return None
    try:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError:
        return "matplotlib unavailable, plots skipped"
    fig, ax = plt.subplots()
    draw(ax)
    fig.savefig(os.path.join(outdir, name))
    plt.close(fig)
    return None


# ---------------------------------------------------------------------------
# experiments; each returns (checks, scalars, csv_artifacts, warnings)

def _run_green(cfg, outdir):
    path = _sample_path(cfg)
    loop = close_path(path)
    grid = _grid_for(cfg, loop)
    form = make_form(cfg["form"]["id"], **cfg["form"].get("params", {}))
    field = winding_field(loop, grid)
    checks, artifacts = [], []
    for mode in ("clamp", "zero"):
        rep = green_residual(path, form, grid, cfg["K_list"], mode, field=field)
        fn = os.path.join(outdir, f"green_{mode}.csv")
        rep.to_csv(fn)
        artifacts.append(fn)
        scale = abs(rep.strat_value) + 0.1
        tol = max(0.05 * scale, 5.0 * rep.self_convergence_gap)
        last_resid = rep.rows[-1][2]
        checks.append({"name": f"green_residual_{mode}",
                       "passed": bool(last_resid <= tol),
                       "detail": {"residual": last_resid, "tolerance": tol,
                                  "rhs": rep.rhs}})
    warn = _maybe_plot(cfg, outdir, "winding_field.svg",
                       lambda ax: ax.imshow(field.winding, origin="lower"))
    return checks, {"strat_value": rep.strat_value}, artifacts, [warn] if warn else []


def _run_werner(cfg, outdir):
    n_lo, n_hi = cfg["N_range"]
    f = make_weight(cfg["weight_f"]["id"], **cfg["weight_f"].get("params", {}))
    Ns = np.arange(n_lo, n_hi + 1)
    vals = np.zeros((cfg["n_replicas"], len(Ns)))
    for r in range(cfg["n_replicas"]):
        path = _sample_path(cfg, replica=r)
        loop = close_path(path)
        field = winding_field(loop, _grid_for(cfg, loop))
        m = level_measures(field, f, n_max=max(cfg["n_max"], n_hi))
        vals[r] = [m.tail(int(N)) for N in Ns]
    scaled = 2.0 * np.pi * Ns * vals
    mean_scaled = scaled.mean(axis=0)
    absdev = np.abs(vals - 1.0 / (2.0 * np.pi * Ns)).mean(axis=0)
    rows = [(int(N), float(ms), float(ad)) for N, ms, ad in zip(Ns, mean_scaled, absdev)]
    fn = os.path.join(outdir, "werner.csv")
    _write_csv(fn, "N,mean_2piN_DN,mean_absdev", rows)
    band_ok = bool(np.all((mean_scaled >= 0.8) & (mean_scaled <= 1.2)))
    decay_ok = bool(absdev[-1] < absdev[0])
    checks = [
        {"name": "werner_band", "passed": band_ok,
         "detail": {"min": float(mean_scaled.min()), "max": float(mean_scaled.max())}},
        {"name": "werner_absdev_decreases", "passed": decay_ok,
         "detail": {"first": float(absdev[0]), "last": float(absdev[-1])}},
    ]
    return checks, {"mean_2piN_DN_at_lo": float(mean_scaled[0])}, [fn], []


def _run_lp_moments(cfg, outdir):
    n_lo, n_hi = cfg["N_range"]
    f = make_weight(cfg["weight_f"]["id"], **cfg["weight_f"].get("params", {}))
    Ns = np.arange(n_lo, n_hi + 1)
    vals = np.zeros((cfg["n_replicas"], len(Ns)))
    for r in range(cfg["n_replicas"]):
        path = _sample_path(cfg, replica=r)
        loop = close_path(path)
        field = winding_field(loop, _grid_for(cfg, loop))
        m = level_measures(field, f, n_max=max(cfg["n_max"], n_hi))
        vals[r] = [m.tail(int(N)) for N in Ns]
    dev = np.abs(vals - 1.0 / (2.0 * np.pi * Ns))
    rows = []
    checks = []
    for p in cfg["p_list"]:
        mom = (dev ** p).mean(axis=0) ** (1.0 / p)
        rows += [(float(p), int(N), float(v)) for N, v in zip(Ns, mom)]
        checks.append({"name": f"lp_moment_decays_p{p}",
                       "passed": bool(mom[-1] < mom[0]),
                       "detail": {"first": float(mom[0]), "last": float(mom[-1])}})
    fn = os.path.join(outdir, "lp_moments.csv")
    _write_csv(fn, "p,N,lp_moment", rows)
    return checks, {}, [fn], []


def _run_joint(cfg, outdir):
    n_lo, n_hi = cfg["N_range"]
    Ns = np.arange(n_lo, n_hi + 1)
    rows = []
    ratios = []
    for pair in range(cfg["n_pairs"]):
        pa = _sample_path(cfg, replica=2 * pair)
        pb = _sample_path(cfg, replica=2 * pair + 1)
        la, lb = close_path(pa), close_path(pb)
        # one grid strictly containing both loops
        box = np.array([la.bbox(), lb.bbox()])
        xmin, xmax = box[:, 0].min(), box[:, 1].max()
        ymin, ymax = box[:, 2].min(), box[:, 3].max()
        g = cfg["grid"]
        padx = 0.02 * (xmax - xmin)
        pady = 0.02 * (ymax - ymin)
        grid = Grid((xmin - padx, xmax + padx, ymin - pady, ymax + pady),
                    g["nx"], g["ny"])
        fa = winding_field(la, grid)
        fb = winding_field(lb, grid)
        areas = np.array([joint_tail_area(fa, fb, int(N)) for N in Ns])
        scaled = Ns.astype(float) ** 2 * areas
        rows += [(pair, int(N), float(a), float(s)) for N, a, s in zip(Ns, areas, scaled)]
        med = float(np.median(scaled))
        if med > 0:
            ratios.append(float(scaled.max() / med))
    fn = os.path.join(outdir, "joint_tails.csv")
    _write_csv(fn, "pair,N,joint_area,n2_scaled", rows)
    ok = bool(all(r <= 5.0 for r in ratios)) if ratios else True
    checks = [{"name": "joint_tail_bounded", "passed": ok,
               "detail": {"max_over_median_ratios": ratios}}]
    return checks, {}, [fn], []


def _impurity_inputs(cfg):
    path = _sample_path(cfg)
    loop = close_path(path)
    grid = _grid_for(cfg, loop)
    field = winding_field(loop, grid)
    f = make_weight(cfg["weight_f"]["id"], **cfg["weight_f"].get("params", {}))
    g = make_weight(cfg["weight_g"]["id"], **cfg["weight_g"].get("params", {}))
    xmin, xmax, ymin, ymax = loop.bbox()
    padx, pady = 0.05 * (xmax - xmin), 0.05 * (ymax - ymin)
    window = (xmin - padx, xmax + padx, ymin - pady, ymax + pady)
    return path, loop, grid, field, f, g, window


def _run_impurities(cfg, outdir):
    path, loop, grid, field, f, g, window = _impurity_inputs(cfg)
    cells = level_cells(field, f, g, include_masked=True)
    measures = level_measures(field, product_weight(f, g), n_max=cfg["n_max"])
    rows, checks, warns = [], [], []
    for li, lam in enumerate(cfg["lambda_list"]):
        xi = xi_samples(loop, f, g, lam, window, cfg["n_replicas"],
                        cfg["master_seed"], stream=1000 + li)
        for alpha in cfg["alpha_list"]:
            exp = ImpurityExperiment(lam, g, f, alpha, window, cfg["n_replicas"])
            ecf, (se_re, se_im) = empirical_cf(exp, loop, cfg["master_seed"], xi=xi)
            G, ccf = campbell_cf(field, f, g, alpha / lam, lam,
                                 mode="polyline", cells=cells)
            lcf, diag = limit_cf(path, measures, f, g, alpha)
            if diag["convergence_warning"]:
                warns.append(f"regularized integral convergence warning at alpha={alpha}")
            rows.append((float(lam), float(alpha), ecf.real, ecf.imag,
                         float(np.hypot(se_re, se_im)), ccf.real, ccf.imag,
                         lcf.real, lcf.imag))
            ok = (abs(ecf.real - ccf.real) <= 3 * se_re + 1e-12
                  and abs(ecf.imag - ccf.imag) <= 3 * se_im + 1e-12)
            checks.append({"name": f"campbell_identity_l{lam}_a{alpha}",
                           "passed": bool(ok),
                           "detail": {"ecf": [ecf.real, ecf.imag],
                                      "campbell": [ccf.real, ccf.imag],
                                      "se": [se_re, se_im]}})
    fn = os.path.join(outdir, "impurities.csv")
    _write_csv(fn, "lambda,alpha,re_ecf,im_ecf,se,re_campbell,im_campbell,re_limit,im_limit",
               rows)
    warn = _maybe_plot(cfg, outdir, "cf_vs_lambda.svg", lambda ax: ax.plot(
        [r[0] for r in rows], [r[2] for r in rows], "o-"))
    if warn:
        warns.append(warn)
    return checks, {}, [fn], sorted(set(warns))


def _run_cauchy_limit(cfg, outdir):
    path, loop, grid, field, f, g, window = _impurity_inputs(cfg)
    measures = level_measures(field, product_weight(f, g), n_max=cfg["n_max"])
    lam = float(max(cfg["lambda_list"]))
    xi = xi_samples(loop, f, g, lam, window, cfg["n_replicas"],
                    cfg["master_seed"], stream=2000)
    fn = os.path.join(outdir, "xi_samples.csv")
    _write_csv(fn, "xi", [(float(v),) for v in xi])
    fitted = fit_cauchy(xi) if len(xi) >= 100 else None
    reg, diag = regularized_winding_integral(measures)
    tint = path_time_integral(path, lambda x, y: np.abs(f.value(x, y)) * g.value(x, y))
    scalars = {"target_position": reg, "target_scale": 0.5 * tint}
    checks = []
    if fitted is not None:
        scalars["fitted_position"] = fitted.position
        scalars["fitted_scale"] = fitted.scale
        tol = cfg.get("fit_tolerance", 0.25)
        checks.append({"name": "cauchy_limit_position",
                       "passed": bool(abs(fitted.position - reg) <= tol),
                       "detail": {"fitted": fitted.position, "target": reg}})
        checks.append({"name": "cauchy_limit_scale",
                       "passed": bool(abs(fitted.scale - 0.5 * tint) <= tol),
                       "detail": {"fitted": fitted.scale, "target": 0.5 * tint}})
    warns = ["regularized integral convergence warning"] if diag["convergence_warning"] else []
    return checks, scalars, [fn], warns


def _run_strat_schemes(cfg, outdir):
    path = _sample_path(cfg)
    form = make_form(cfg["form"]["id"], **cfg["form"].get("params", {}))
    max_level = int(np.log2(path.n_steps))
    rows = []
    vals = {}
    for level in range(max(0, max_level - 2), max_level + 1):
        for scheme in ("midpoint_I1", "trapezoid_I2", "chord_I3"):
            v = stratonovich_approx(form, path, level, scheme)
            vals[(level, scheme)] = v
            rows.append((level, scheme, float(v)))
    fn = os.path.join(outdir, "strat_schemes.csv")
    _write_csv(fn, "level,scheme,value", rows)
    top = max_level
    gap = max(abs(vals[(top, "chord_I3")] - vals[(top - 1, "chord_I3")]), 1e-12)
    d12 = abs(vals[(top, "midpoint_I1")] - vals[(top, "trapezoid_I2")])
    d13 = abs(vals[(top, "midpoint_I1")] - vals[(top, "chord_I3")])
    checks = [{"name": "strat_schemes_agree",
               "passed": bool(d12 <= 10 * gap and d13 <= 10 * gap),
               "detail": {"d12": d12, "d13": d13, "self_gap": gap}}]
    return checks, {"I3": vals[(top, "chord_I3")]}, [fn], []


_RUNNERS = {
    "green": _run_green,
    "werner": _run_werner,
    "lp_moments": _run_lp_moments,
    "joint": _run_joint,
    "impurities": _run_impurities,
    "cauchy_limit": _run_cauchy_limit,
    "strat_schemes": _run_strat_schemes,
}


def run_experiment(cfg: dict) -> int:
    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    checks, scalars, artifacts, warnings = _RUNNERS[cfg["experiment"]](cfg, outdir)
    all_pass = all(c["passed"] for c in checks)
    summary = {
        "experiment": cfg["experiment"],
        "config": cfg,
        "checks": checks,
        "scalars": scalars,
        "artifacts": artifacts,
        "warnings": warnings,
        "passed": bool(all_pass),
    }
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    return 0 if all_pass else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="greenwind",
        description="Run a winding/impurity experiment from a JSON config.")
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default=None, help="output dir (overrides config)")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg["output_dir"] = args.out
    except ConfigError as e:
        json.dump({"error": "config", "message": str(e)}, sys.stdout)
        sys.stdout.write("\n")
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
