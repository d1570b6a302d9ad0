"""
Command line front end
======================

Subcommands: ``detect``, ``simulate``, ``evaluate``, ``analyze``, ``calibrate``.

stdout carries one JSON record per line, diagnostics go to stderr. Exit codes:
0 success, 2 bad input (files, arguments, configs), 3 runtime failure.

Parameters are resolved as flag > ``--config`` JSON file > built-in default.
The seed comes from ``--seed``, else ``$VOLFILT_SEED``, else 0.
"""
from __future__ import annotations

import argparse
import glob as globmod
import json
import logging
import os
from pathlib import Path
import sys

import numpy as np

from . import __version__
from .afcd import AfcdConfig, aligned_filters, detect_afcd
from .cafcd import CafcdConfig, detect_cafcd
from .evaluation import MatchConfig, calibrate, default_mu_grid, match_detections, pool
from .filters import fast_slow_weights
from .glr import GlrConfig, detect_glr, detect_glr_channels
from .io import (
    InputError,
    read_config,
    read_samples,
    read_truth,
    sidecar_path,
    write_json,
    write_samples,
    write_table,
    write_truth,
)
from .synth import CORRELATION_PRESETS, SynthConfig, first_difference, gen_piecewise_gaussian, gen_stationary
from .vce import VceConfig, sigma_d_series

log = logging.getLogger("volfilt")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3

# Largest mu on the calibration grid (8 per decade, rounded) whose false-alarm
# rate on 200 stationary N(0,1) series of 5000 samples stays below 0.05 per
# series, triangular weights. Use ``calibrate`` for other budgets.
DEFAULT_MU = 0.3

DEFAULTS = {
    "detector": "afcd",
    "mu": DEFAULT_MU,
    "T_s": 250,
    "T_f": 20,
    "T_d": 10,
    "gamma": 0.8,
    "rho": 0.001,
    "T_r": None,
    "T_l": None,
    "lag": None,
    "weight_scheme": "triangular",
    "renormalize": "persistent",
    "L": 250,
    "h": 5.0,
    "glr_mode": "fused",
    "preprocess": "none",
    "match_window": 300,
    "channels": None,
}


def _emit(rec, out=None):
    line = json.dumps(rec, sort_keys=True)
    (out or sys.stdout).write(line + "\n")


def resolve(args):
    """Merge flags, config file and defaults into one dict."""
    conf = read_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(conf) - set(DEFAULTS) - {"seed"}
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = dict(DEFAULTS)
    out.update(conf)
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = conf.get("seed")
    if seed is None:
        env = os.environ.get("VOLFILT_SEED")
        try:
            seed = int(env) if env else 0
        except ValueError:
            raise InputError(f"VOLFILT_SEED must be an integer, got {env!r}") from None
    out["seed"] = int(seed)
    return out


def afcd_config(p):
    try:
        return AfcdConfig(
            mu=float(p["mu"]), T_s=int(p["T_s"]), T_f=int(p["T_f"]), T_d=int(p["T_d"]),
            gamma=float(p["gamma"]), rho=float(p["rho"]), T_r=p["T_r"],
            weight_scheme=p["weight_scheme"], rng_seed=p["seed"], lag=p["lag"],
            renormalize=p["renormalize"],
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid detector parameters: {exc}") from exc


def glr_config(p):
    try:
        return GlrConfig(L=int(p["L"]), h=float(p["h"]))
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid GLR parameters: {exc}") from exc


def _vce(p):
    return VceConfig(T_l=int(p["T_l"])) if p["T_l"] else True


def preprocess(x, mode):
    if mode == "first_difference":
        return first_difference(x)
    if mode != "none":
        raise InputError(f"unknown preprocessing {mode!r}")
    return x


def run_detector(x, p):
    """Run the configured detector on an ``(n, C)`` array; returns ``(events, result or None)``."""
    det = p["detector"]
    C = x.shape[1]
    if det == "afcd":
        if C != 1:
            raise InputError(f"afcd expects 1 channel column, found {C}")
        cfg = afcd_config(p)
        res = detect_afcd(x[:, 0], cfg, vce=_vce(p))
        return res.events, res
    if det == "cafcd":
        want = p["channels"]
        if want is not None and int(want) != C:
            raise InputError(f"cafcd configured for {int(want)} channel column(s), found {C}")
        base = afcd_config(p)
        cfg = CafcdConfig.uniform(base, C, seed=p["seed"])
        res = detect_cafcd(x, cfg, vce=_vce(p))
        return res.events, res
    if det == "glr":
        cfg = glr_config(p)
        if C == 1:
            res = detect_glr(x[:, 0], cfg)
            return res.events, res
        return detect_glr_channels(x, cfg, fuse=p["glr_mode"] == "fused"), None
    raise InputError(f"unknown detector {det!r}")


# ---------------------------------------------------------------- subcommands

def cmd_detect(args):
    p = resolve(args)
    x = read_samples(args.input)
    x = preprocess(x, p["preprocess"])
    events, res = run_detector(x, p)
    if args.output:
        from .io import atomic_write
        with atomic_write(args.output) as fh:
            for ev in events:
                _emit(ev.as_record(), fh)
    else:
        for ev in events:
            _emit(ev.as_record())
    if args.plot:
        from .plotting import plot_detection_trace
        if p["detector"] == "glr" or res is None:
            from .plotting import plot_profile
            stat = res.lam if res is not None else np.full(len(x), np.nan)
            plot_profile(np.arange(len(x)), {"GLR statistic": stat}, args.plot, "sample", "statistic")
        else:
            base = afcd_config(p)
            sf, ss, _ = aligned_filters(x[:, 0], base)
            plot_detection_trace(x[:, 0], sf, ss, res.lam, args.plot, events=events, gamma=base.gamma)
        log.info("wrote %s", args.plot)
    log.info("%d event(s)", len(events))
    return EXIT_OK


def cmd_simulate(args):
    seed = resolve(args)["seed"]
    out = Path(args.output)
    count = args.count
    if count < 1:
        raise InputError("--count must be >= 1")
    for i in range(count):
        path = out if count == 1 else out.with_name(f"{out.stem}_{i:03d}{out.suffix or '.csv'}")
        s = seed + i
        if args.stationary:
            n = args.length or 5000
            sc = gen_stationary(n, args.channels, args.preset if args.channels > 1 else "identity", seed=s)
        else:
            cfg = SynthConfig(n_channels=args.channels, correlation_preset=args.preset, seed=s)
            sc = gen_piecewise_gaussian(cfg)
        try:
            write_samples(path, sc.samples, header=not args.no_header)
            write_truth(sidecar_path(path), sc, {"preset": args.preset})
        except OSError as exc:
            raise InputError(f"cannot write {path}: {exc}") from exc
        _emit({"samples": str(path), "truth": str(sidecar_path(path)), "seed": s,
               "n_samples": sc.n_samples, "n_changes": len(sc.change_times)})
    return EXIT_OK


def cmd_evaluate(args):
    p = resolve(args)
    paths = sorted(globmod.glob(args.scenarios))
    if not paths:
        raise InputError(f"no files match {args.scenarios!r}")
    mcfg = MatchConfig(int(p["match_window"]))
    reports, rows = [], []
    for path in paths:
        if path.endswith(".truth.json"):
            continue
        side = sidecar_path(path)
        if not side.exists():
            log.warning("skipping %s: no ground truth sidecar %s", path, side)
            continue
        truth = read_truth(side)
        x = preprocess(read_samples(path), p["preprocess"])
        events, _ = run_detector(x, p)
        rep = match_detections(events, truth["change_times"], mcfg)
        reports.append(rep)
        row = {"scenario": path, **rep.summary()}
        rows.append(row)
        _emit(row)
    if not reports:
        raise InputError("every scenario was skipped")
    agg = pool(reports).summary()
    agg.update({"scenario": "ALL", "n_scenarios": len(reports), "detector": p["detector"]})
    _emit(agg)
    if args.report_dir:
        d = Path(args.report_dir)
        write_table(d / "per_scenario.csv", rows)
        write_json(d / "summary.json", agg)
        lat = [v for r in reports for v in r.latencies]
        if lat:
            from .plotting import plot_profile
            counts, edges = np.histogram(lat, bins=min(30, max(5, len(lat) // 10)))
            plot_profile(0.5 * (edges[1:] + edges[:-1]), {"detections": counts}, d / "latency.svg",
                         "latency (samples)", "count")
    return EXIT_OK


def analysis_tables(p, sigma1, sigma2, n_mc, t_max=None):
    from .afcd import make_desired_weights
    from .oracles import TransitionSpec, expected_sigmaD_profile, lambda_profile

    T_l = int(p["T_l"] or p["T_f"])
    spec = TransitionSpec(sigma1, sigma2, T_f=int(p["T_f"]), T_s=int(p["T_s"]), T_l=T_l)
    schemes = {s: fast_slow_weights(s, spec.T_f, spec.T_s) for s in ("triangular", "uniform")}
    t_max = t_max or 2 * spec.T_f
    lam_rows = lambda_profile(spec, schemes, range(0, t_max + 1), int(p["T_d"]), n_mc, p["seed"], p["lag"])
    sd_rows = [
        {"k": k, "consistent": expected_sigmaD_profile(spec, k),
         "printed": expected_sigmaD_profile(spec, k, form="printed")}
        for k in range(-T_l, T_l + 1)
    ]
    return spec, schemes, lam_rows, sd_rows


def cmd_analyze(args):
    p = resolve(args)
    if args.n_mc < 1000:
        raise InputError("--n-mc must be at least 1000")
    spec, schemes, lam_rows, sd_rows = analysis_tables(p, args.sigma1, args.sigma2, args.n_mc)
    for r in lam_rows:
        _emit({"table": "lambda", **r})
    for r in sd_rows:
        _emit({"table": "sigmaD", **r})
    if args.outdir:
        from .plotting import plot_detection_trace, plot_profile, plot_sigmaD_trace, plot_weights
        d = Path(args.outdir)
        write_table(d / "lambda_profile.csv", lam_rows)
        write_table(d / "sigmaD_profile.csv", sd_rows)
        wf, ws = schemes["triangular"]
        plot_weights({"fast (triangular)": wf, "slow (triangular)": ws}, d / "weights.svg")
        t = [r["t_rel"] for r in lam_rows]
        plot_profile(t, {s: [r[s] for r in lam_rows] for s in schemes}, d / "lambda_profile.svg",
                     "post-change samples in filter window", "error-minimising weight")
        ks = [r["k"] for r in sd_rows]
        plot_profile(ks, {"consistent": [r["consistent"] for r in sd_rows],
                          "printed": [r["printed"] for r in sd_rows]},
                     d / "sigmaD_profile.svg", "offset from peak", "expected differenced volatility",
                     marker_x=0)
        # one simulated step, for the trace figures
        rng = np.random.default_rng(p["seed"])
        tau = 3000
        x = rng.standard_normal(6000) * np.where(np.arange(6000) < tau, spec.sigma1, spec.sigma2)
        plot_sigmaD_trace(sigma_d_series(x, spec.T_l), d / "sigmaD_trace.svg", tau=tau, T_l=spec.T_l)
        cfg = afcd_config(p)
        res = detect_afcd(x, cfg, vce=False)
        sf, ss, _ = aligned_filters(x, cfg)
        plot_detection_trace(x, sf, ss, res.lam, d / "detection_trace.svg", events=res.events,
                             truths=[tau], gamma=cfg.gamma)
        log.info("wrote tables and figures to %s", d)
    return EXIT_OK


def cmd_calibrate(args):
    p = resolve(args)
    n, n_series = args.length, args.n_series
    base_seed = p["seed"]
    C = args.channels or 1

    def gen(i):
        sc = gen_stationary(n, C, args.preset if C > 1 else "identity", seed=base_seed + 100_000 + i)
        return sc.samples

    target = args.target / n  # events per series -> events per sample
    if p["detector"] == "glr":
        grid = np.arange(args.h_min, args.h_max + 1e-9, args.h_step)

        def factory(h):
            cfg = GlrConfig(L=int(p["L"]), h=float(h))
            return lambda x: detect_glr_channels(x, cfg) if x.shape[1] > 1 else detect_glr(x[:, 0], cfg).events
        res = calibrate(factory, gen, target, grid, n_series, prefer="smallest")
        key = "h"
    else:
        grid = default_mu_grid(args.mu_min, args.mu_max, args.per_decade)

        def factory(mu):
            q = dict(p, mu=float(mu))
            base = afcd_config(q)
            if p["detector"] == "cafcd":
                cfg = CafcdConfig.uniform(base, C, seed=p["seed"])
                return lambda x: detect_cafcd(x, cfg, vce=False).events
            return lambda x: detect_afcd(x[:, 0], base, vce=False).events
        res = calibrate(factory, gen, target, grid, n_series, prefer="largest")
        key = "mu"
    _emit({key: res.mu, "fp_per_series": res.fp_rate * n, "met": res.met, "target_per_series": args.target,
           "detector": p["detector"], "n_series": n_series, "length": n})
    return EXIT_OK if res.met else EXIT_RUNTIME


# ---------------------------------------------------------------- parser

def _add_detector_args(ap):
    g = ap.add_argument_group("detector")
    g.add_argument("--detector", choices=("afcd", "cafcd", "glr"))
    g.add_argument("--config", help="JSON file with parameter overrides")
    g.add_argument("--mu", type=float)
    g.add_argument("--T-s", dest="T_s", type=int)
    g.add_argument("--T-f", dest="T_f", type=int)
    g.add_argument("--T-d", dest="T_d", type=int)
    g.add_argument("--T-r", dest="T_r", type=int)
    g.add_argument("--T-l", dest="T_l", type=int, help="location window (default T_f)")
    g.add_argument("--gamma", type=float)
    g.add_argument("--rho", type=float)
    g.add_argument("--lag", type=int, help="fast/slow lag behind the desired window (default T_d+1)")
    g.add_argument("--weight-scheme", choices=("triangular", "uniform"))
    g.add_argument("--renormalize", choices=("persistent", "refractory"))
    g.add_argument("--channels", type=int, help="expected channel count for cafcd")
    g.add_argument("--L", dest="L", type=int, help="GLR half window")
    g.add_argument("--h", dest="h", type=float, help="GLR threshold")
    g.add_argument("--glr-mode", choices=("fused", "per-channel"))
    g.add_argument("--preprocess", choices=("none", "first_difference"))
    g.add_argument("--first-difference", dest="preprocess", action="store_const", const="first_difference")
    g.add_argument("--seed", type=int)


def build_parser():
    ap = argparse.ArgumentParser(prog="volfilt", description="Volatility change detection toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="run a detector on a CSV file")
    d.add_argument("input")
    d.add_argument("-o", "--output", help="write event records here instead of stdout")
    d.add_argument("--plot", help="write a trace figure (.svg/.pdf/.png)")
    _add_detector_args(d)
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("simulate", help="generate synthetic scenarios")
    s.add_argument("output")
    s.add_argument("--channels", type=int, default=1)
    s.add_argument("--preset", choices=(*CORRELATION_PRESETS, "identity"), default="low")
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--stationary", action="store_true", help="constant variance, no changes")
    s.add_argument("--length", type=int, help="length for --stationary (default 5000)")
    s.add_argument("--no-header", action="store_true")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="score a detector against scenario sidecars")
    e.add_argument("scenarios", help="glob of sample CSV files")
    e.add_argument("--match-window", type=int)
    e.add_argument("--report-dir")
    _add_detector_args(e)
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("analyze", help="theory tables and figures")
    a.add_argument("--sigma1", type=float, default=1.0)
    a.add_argument("--sigma2", type=float, default=2.0)
    a.add_argument("--n-mc", type=int, default=10_000)
    a.add_argument("--outdir")
    _add_detector_args(a)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("calibrate", help="pick mu (or GLR h) for a false-alarm budget")
    c.add_argument("--target", type=float, default=0.05, help="false alarms per stationary series")
    c.add_argument("--n-series", type=int, default=200)
    c.add_argument("--length", type=int, default=5000)
    c.add_argument("--preset", choices=(*CORRELATION_PRESETS, "identity"), default="low")
    c.add_argument("--mu-min", type=float, default=0.01)
    c.add_argument("--mu-max", type=float, default=100.0)
    c.add_argument("--per-decade", type=int, default=8)
    c.add_argument("--h-min", type=float, default=5.0)
    c.add_argument("--h-max", type=float, default=20.0)
    c.add_argument("--h-step", type=float, default=0.5)
    _add_detector_args(c)
    c.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - reported, not handled
        log.debug("traceback", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
