"""Command-line entry point ``stablesub``.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 statistical
validation failure, 5 numerical failure.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .calibration import (DEFAULT_ALPHA_GRID, fit_copula, fit_stable, gaussian_baseline,
                          kde_density, ks_test, lognormal_cdf, pp_points,
                          standardized_residuals)
from .data_io import align_pair, atomic_write_text, drop_first_bar_of_day, load_bars
from .errors import ConfigError, DataError, DomainError, NumericalFailure
from .series import (ModelSpec, SimConfig, empirical_cf_values, min_truncation,
                     simulate_bars, simulate_segments, theoretical_cf)
from .stable import StableParams, fast_density

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_STAT, EXIT_NUMERIC = 0, 2, 3, 4, 5

# Apple / Microsoft values used as the built-in model
DEFAULT_MODEL = {
    "stable1": {"alpha": 1.62, "beta": 0.09, "sigma": 1.83e-05, "mu": 3.02e-09},
    "stable2": {"alpha": 1.64, "beta": 0.15, "sigma": 2.10e-05, "mu": 1.216e-08},
    "sub1": {"lam": 5.22, "mu_ln": 8.82, "sigma_ln": 0.73},
    "sub2": {"lam": 7.8, "mu_ln": 8.01, "sigma_ln": 0.91},
    "copula": {"delta": 1.92},
}


class StatisticalFailure(Exception):
    pass


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _fmt(x):
    return repr(float(x))


class Outputs:
    """Collects output files; every write is atomic."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.files = []
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc

    def write(self, name, text):
        path = os.path.join(self.out_dir, name)
        atomic_write_text(path, text)
        self.files.append({"name": name, "sha256": hashlib.sha256(text.encode()).hexdigest()})

    def table(self, name, columns, rows, fmt):
        """Rows of numbers as CSV or as a JSON list of records."""
        if fmt == "json":
            recs = [dict(zip(columns, r)) for r in rows]
            self.write(f"{name}.json", _dumps(recs))
        else:
            lines = [",".join(columns)]
            lines += [",".join(v if isinstance(v, str) else _fmt(v) if isinstance(v, float) else str(v)
                               for v in r) for r in rows]
            self.write(f"{name}.csv", "\n".join(lines) + "\n")

    def manifest(self, command, config, seed, timings):
        doc = {"command": command, "config": config, "seed": seed, "version": __version__,
               "outputs": self.files, "timings_seconds": timings}
        atomic_write_text(os.path.join(self.out_dir, "manifest.json"), _dumps(doc))


def load_model(path):
    if path is None:
        return ModelSpec.from_dict(DEFAULT_MODEL)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model config {path}: {exc}") from exc
    return ModelSpec.from_dict(doc)


def _interval(x):
    lo, hi = np.percentile(x, [2.5, 97.5])
    return [float(lo), float(hi)]


def path_moments(d1, d2):
    """Per-path mean, std and correlation of bar increments, shape (n_paths,)."""
    m1, m2 = d1.mean(axis=1), d2.mean(axis=1)
    s1, s2 = d1.std(axis=1, ddof=1), d2.std(axis=1, ddof=1)
    c = ((d1 - m1[:, None]) * (d2 - m2[:, None])).sum(axis=1) / (d1.shape[1] - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = c / (s1 * s2)
    return {"mean_z1": m1, "mean_z2": m2, "std_z1": s1, "std_z2": s2, "corr_z1_z2": corr}


def summarize(d1, d2):
    mom = path_moments(d1, d2)
    out = {}
    for k, v in mom.items():
        v = v[np.isfinite(v)]
        out[k] = {"mean": float(v.mean()) if len(v) else math.nan,
                  "interval_95": _interval(v) if len(v) else [math.nan, math.nan],
                  "n_paths": int(len(v))}
    return out


def cmd_simulate(args):
    model = load_model(args.model)
    if args.paths < 1:
        raise ConfigError("--paths must be >= 1")
    if args.bars < 2:
        raise ConfigError("--bars must be >= 2")
    cfg = SimConfig(n_paths=args.paths, seed=args.seed, truncation_n=args.truncation).resolved(model)
    out = Outputs(args.out_dir)
    t0 = time.perf_counter()
    d1, d2 = simulate_bars(model, args.paths, args.bars, args.seed, args.bar_duration,
                           cfg.truncation_n)
    t_sim = time.perf_counter() - t0
    z1, z2 = np.cumsum(d1, axis=1), np.cumsum(d2, axis=1)
    times = args.bar_duration * np.arange(1, args.bars + 1)
    rows = []
    for p in range(args.paths):
        rows.append((p, 0.0, 0.0, 0.0))
        rows.extend((p, float(t), float(a), float(b)) for t, a, b in zip(times, z1[p], z2[p]))
    out.table("trajectories", ["path_id", "time", "z1", "z2"], rows, args.format)
    out.write("summary.json", _dumps({"bar_duration": args.bar_duration, "n_bars": args.bars,
                                      "increments": summarize(d1, d2)}))
    config = {"model": model.to_dict(), "paths": args.paths, "bars": args.bars,
              "bar_duration": args.bar_duration, "truncation": cfg.truncation_n,
              "format": args.format}
    out.manifest("simulate", config, args.seed, {"simulate": t_sim})
    return EXIT_OK


def _alpha_grid(args):
    given = [args.grid_start, args.grid_end, args.grid_step]
    if all(g is None for g in given):
        return list(DEFAULT_ALPHA_GRID), True
    if any(g is None for g in given):
        raise ConfigError("--grid-start, --grid-end and --grid-step go together")
    if not args.grid_step > 0 or args.grid_end < args.grid_start:
        raise ConfigError("grid needs step > 0 and end >= start")
    k = int(math.floor((args.grid_end - args.grid_start) / args.grid_step + 1e-9))
    return [round(args.grid_start + i * args.grid_step, 10) for i in range(k + 1)], False


def _load_series(path, keep_first):
    bars = load_bars(path)
    return bars if keep_first else drop_first_bar_of_day(bars)


def cmd_fit_stable(args):
    grid, default = _alpha_grid(args)
    bars = _load_series(args.bars, args.keep_first_bar)
    out = Outputs(args.out_dir)
    t0 = time.perf_counter()
    try:
        res = fit_stable(bars, grid)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    best = res.best
    z = standardized_residuals(bars, best.alpha, res.mu_hat)
    zb, fb = gaussian_baseline(bars, res.mu_hat)
    emp, theo = pp_points(z, best.alpha, best.beta, best.sigma)
    empb, theob = pp_points(zb, 2.0, 0.0, fb.sigma)
    rows = [("fitted", float(e), float(t)) for e, t in zip(emp, theo)]
    rows += [("alpha2", float(e), float(t)) for e, t in zip(empb, theob)]
    out.table("pp_plot", ["model", "empirical_prob", "theoretical_prob"], rows, args.format)
    lo, hi = np.percentile(z, [0.5, 99.5])
    xs = np.linspace(lo, hi, 201)
    dens = fast_density(StableParams(best.alpha, best.beta, best.sigma), xs)
    kde = kde_density(z, xs)
    out.table("density", ["x", "stable_density", "kde"],
              [(float(a), float(b), float(c)) for a, b, c in zip(xs, dens, kde)], args.format)
    doc = res.to_dict()
    doc["pp_max_deviation"] = {"fitted": float(np.max(np.abs(emp - theo))),
                               "alpha2": float(np.max(np.abs(empb - theob)))}
    doc["alpha2_baseline"] = {"sigma": fb.sigma}
    out.write("stable_fit.json", _dumps(doc))
    config = {"bars": os.path.abspath(args.bars), "alpha_grid": grid, "default_grid": default,
              "keep_first_bar": args.keep_first_bar, "format": args.format}
    out.manifest("fit-stable", config, None, {"fit": time.perf_counter() - t0})
    return EXIT_OK


def cmd_fit_copula(args):
    a = _load_series(args.bars_a, args.keep_first_bar)
    b = _load_series(args.bars_b, args.keep_first_bar)
    pair = align_pair(a, b)
    jumps = pair.jump_pairs()
    horizon = args.horizon if args.horizon is not None else len(jumps) * args.bar_duration
    out = Outputs(args.out_dir)
    t0 = time.perf_counter()
    try:
        fit = fit_copula(jumps, horizon)
    except DomainError as exc:
        raise DataError(str(exc)) from exc
    ks = {}
    for k, (m, s) in enumerate(((fit.mu_ln1, fit.sigma_ln1), (fit.mu_ln2, fit.sigma_ln2))):
        r = ks_test(jumps[:, k], lognormal_cdf(m, s))
        ks[f"asset{k + 1}"] = r._asdict()
    doc = {"fit": fit.to_dict(), "ks": ks, "n_jumps": int(len(jumps)), "horizon": horizon,
           "dropped_rows": {"a": pair.dropped_a, "b": pair.dropped_b}}
    out.write("copula_fit.json", _dumps(doc))
    config = {"bars_a": os.path.abspath(args.bars_a), "bars_b": os.path.abspath(args.bars_b),
              "horizon": horizon, "keep_first_bar": args.keep_first_bar}
    out.manifest("fit-copula", config, None, {"fit": time.perf_counter() - t0})
    return EXIT_OK if fit.converged else EXIT_NUMERIC


def cf_scale(model, s):
    """Per-component u-scale: sigma_k (lam_k s E[J_k])^(1/alpha_k)."""
    out = []
    for st, sub in ((model.stable1, model.sub1), (model.stable2, model.sub2)):
        out.append(st.sigma * (sub.lam * s * sub.mean_jump) ** (1.0 / st.alpha))
    return out


def u_grid(model, s, points=5, reach=2.0):
    sc = cf_scale(model, s)
    ticks = np.linspace(-reach, reach, points)
    return [(float(a / sc[0]), float(b / sc[1])) for a in ticks for b in ticks]


def validate_model(model, sim_model, n_paths, seed, truncation, s_values, points=5,
                   threshold=3.0):
    """Per-point comparison rows (s, u1, u2, re, im, theory re, im, se, z, ok)."""
    z1, z2 = simulate_segments(sim_model, n_paths, 1, s_values, seed, truncation)
    rows = []
    for j, s in enumerate(s_values):
        for u in u_grid(model, s, points):
            est = empirical_cf_values(z1[:, 0, j], z2[:, 0, j], u)
            th = theoretical_cf(model, u, s)
            gap = abs(est.value - th)
            z = gap / est.se if est.se > 0 else (0.0 if gap == 0 else math.inf)
            rows.append((float(s), u[0], u[1], est.value.real, est.value.imag, th.real, th.imag,
                         est.se, float(z), bool(z <= threshold)))
    return rows


def cmd_validate(args):
    model = load_model(args.model)
    sim_model = model
    if args.sim_delta is not None:
        d = model.to_dict()
        d["copula"]["delta"] = args.sim_delta
        sim_model = ModelSpec.from_dict(d)
    if args.paths < 2:
        raise ConfigError("--paths must be >= 2")
    trunc = args.truncation or min_truncation(sim_model)
    SimConfig(n_paths=args.paths, seed=args.seed, truncation_n=trunc).resolved(sim_model)
    s_values = sorted(float(x) for x in args.s.split(","))
    if any(not 0 < s <= 1 for s in s_values):
        raise ConfigError("--s values must lie in (0, 1]")
    out = Outputs(args.out_dir)
    t0 = time.perf_counter()
    rows = validate_model(model, sim_model, args.paths, args.seed, trunc, s_values,
                          args.grid_points)
    cols = ["s", "u1", "u2", "emp_re", "emp_im", "theory_re", "theory_im", "se", "z", "pass"]
    out.table("cf_validation", cols, [r[:-1] + (int(r[-1]),) for r in rows], args.format)
    failed = sum(not r[-1] for r in rows)
    out.write("validation_summary.json", _dumps({"points": len(rows), "failed": failed,
                                                 "max_z": max(r[-2] for r in rows),
                                                 "threshold": 3.0}))
    config = {"model": model.to_dict(), "simulated_model": sim_model.to_dict(),
              "paths": args.paths, "truncation": trunc, "s": s_values,
              "grid_points": args.grid_points, "format": args.format}
    out.manifest("validate", config, args.seed, {"validate": time.perf_counter() - t0})
    if failed:
        raise StatisticalFailure(f"{failed} of {len(rows)} CF points outside 3 standard errors")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="stablesub",
                                description="Subordinated stable models: simulate, fit, validate.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seeded=True):
        sp.add_argument("--out-dir", required=True)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        if seeded:
            sp.add_argument("--seed", type=int, default=0)

    sim = sub.add_parser("simulate", help="simulate bar increments of the bivariate model")
    common(sim)
    sim.add_argument("--model", help="model JSON (default: built-in Apple/Microsoft values)")
    sim.add_argument("--paths", type=int, default=100)
    sim.add_argument("--bars", type=int, default=1657)
    sim.add_argument("--bar-duration", type=float, default=0.25)
    sim.add_argument("--truncation", type=int)
    sim.set_defaults(func=cmd_simulate)

    fs = sub.add_parser("fit-stable", help="fit stable parameters to a bar file")
    common(fs, seeded=False)
    fs.add_argument("--bars", required=True)
    fs.add_argument("--grid-start", type=float)
    fs.add_argument("--grid-end", type=float)
    fs.add_argument("--grid-step", type=float)
    fs.add_argument("--keep-first-bar", action="store_true")
    fs.set_defaults(func=cmd_fit_stable)

    fc = sub.add_parser("fit-copula", help="fit subordinator and Clayton parameters to a bar pair")
    common(fc, seeded=False)
    fc.add_argument("--bars-a", required=True)
    fc.add_argument("--bars-b", required=True)
    fc.add_argument("--horizon", type=float)
    fc.add_argument("--bar-duration", type=float, default=0.25)
    fc.add_argument("--keep-first-bar", action="store_true")
    fc.set_defaults(func=cmd_fit_copula)

    va = sub.add_parser("validate", help="empirical vs theoretical characteristic function")
    common(va)
    va.add_argument("--model")
    va.add_argument("--paths", type=int, default=100000)
    va.add_argument("--truncation", type=int)
    va.add_argument("--s", default="0.25,1")
    va.add_argument("--grid-points", type=int, default=5)
    va.add_argument("--sim-delta", type=float, help="simulate with this delta (negative control)")
    va.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except StatisticalFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_STAT
    except NumericalFailure as exc:
        print(f"numerical failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
