"""Command-line entry point.

Exit codes: 0 success, 1 failed check, 2 usage or config error,
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DegenerateTrajectoryError, DivergenceError, InvalidInputError
from .experiments import (
    REGIMES,
    BenchmarkConfig,
    SweepConfig,
    export_sphere_trajectory,
    generate_benchmark_signal,
    regime_hyperparams,
    sweep_snr,
)
from .io import (
    load_config,
    read_rows_csv,
    read_signal_csv,
    write_json,
    write_rows_csv,
    write_signal_csv,
    write_sphere_csv,
    write_stokes_csv,
    write_trace_csv,
)
from .objectives import Hyperparams, make_objective
from .optimizer import AdamConfig, adam_minimize
from .signal import BivariateSignal, analytic_signal, stokes
from .stats import NoiseModel, add_noise, snr_db, validation_report

EXIT_CHECK = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

SWEEP_HEADER = ["regime", "sigma", "seed", "snr_in_db", "snr_out_db", "iterations", "wall_time_s"]
STATS_DEFAULTS = dict(sigmas=[0.05, 0.5, 2.0], n_trials=100000, n_repeats=50, ks_trials=1000,
                      s0x=1.0, n_samples=256, seed=0)


class UsageError(Exception):
    pass


def _coerce(key, value, kind):
    try:
        if kind is bool:
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes")
            return bool(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind is float:
            return float(value)
        if kind is tuple:
            return tuple(value) if isinstance(value, (list, tuple)) else (value,)
        return kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r} has invalid value {value!r}") from None


_FIELD_KINDS = {"int": int, "float": float, "str": str, "bool": bool, "tuple": tuple}


def _typed(cls, cfg: dict, what: str) -> dict:
    known = {f.name: f for f in fields(cls)}
    out = {}
    for key, val in cfg.items():
        if key not in known:
            raise UsageError(f"unknown {what} config key {key!r}")
        ann = str(known[key].type).split("|")[0].strip()
        out[key] = _coerce(key, val, _FIELD_KINDS.get(ann, lambda v: v))
    return out


def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        return load_config(path)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None


def _manifest(path, command, config, seed, outputs, started):
    write_json(path, {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
        "outputs": [str(p) for p in outputs],
    })


def _stem(path: Path) -> Path:
    return path.with_suffix("")


def cmd_generate(args):
    started = time.perf_counter()
    cfg = _typed(BenchmarkConfig, _read_config(args.config), "benchmark")
    if args.n is not None:
        cfg["n_samples"] = args.n
    bench = BenchmarkConfig(**cfg)
    out = Path(args.output)
    write_signal_csv(out, generate_benchmark_signal(bench))
    _manifest(_stem(out).with_suffix(".manifest.json"), "generate", bench.to_dict(), None, [out], started)
    print(f"wrote {bench.n_samples} samples to {out}")
    return 0


def cmd_noise(args):
    started = time.perf_counter()
    sig = read_signal_csv(args.input)
    noisy = add_noise(sig, NoiseModel(args.sigma, args.seed))
    out = Path(args.output)
    write_signal_csv(out, noisy)
    _manifest(_stem(out).with_suffix(".manifest.json"), "noise",
              {"input": str(args.input), "sigma": args.sigma}, args.seed, [out], started)
    print(f"input SNR {snr_db(sig, noisy):.3f} dB")
    return 0


_ADAM_KEYS = {f.name for f in fields(AdamConfig)}
_HYPER_KEYS = {f.name for f in fields(Hyperparams)}


def cmd_denoise(args):
    started = time.perf_counter()
    raw = _read_config(args.config)
    for key, val in (("sigma", args.sigma), ("max_iters", args.max_iters), ("step_size", args.step_size)):
        if val is not None:
            raw[key] = val
    unknown = set(raw) - _ADAM_KEYS - _HYPER_KEYS - {"regime", "method"}
    if unknown:
        raise UsageError(f"unknown denoise config key(s): {', '.join(sorted(unknown))}")
    if "sigma" not in raw:
        raise UsageError("missing required key 'sigma' (config or --sigma)")
    method = args.method or raw.get("method", "mixed")
    regime = args.regime or raw.get("regime") or ("kernel" if method == "kernel" else "both")
    if regime not in REGIMES:
        raise UsageError(f"unknown regime {regime!r}")
    hyper_cfg = _typed(Hyperparams, {k: v for k, v in raw.items() if k in _HYPER_KEYS}, "hyperparameter")
    adam_cfg = _typed(AdamConfig, {k: v for k, v in raw.items() if k in _ADAM_KEYS}, "optimizer")
    sigma = hyper_cfg.pop("sigma")
    try:
        h = regime_hyperparams(regime, sigma, **hyper_cfg)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    if method == "mixed" and h.alpha:
        h = h.replace(alpha=0.0)
    adam = AdamConfig(**{"step_size": 2e-2, "max_iters": 2000, "cosine_decay": True, **adam_cfg})

    y = read_signal_csv(args.input)
    out = Path(args.output)
    stem = _stem(out)
    trace_path = stem.with_suffix(".trace.csv")
    config_snapshot = {"method": method, "regime": regime, "hyper": h.to_dict(), "adam": adam.to_dict()}
    try:
        res = adam_minimize(make_objective(method, y, h), y, adam)
    except DivergenceError as exc:
        write_trace_csv(trace_path, exc.objective_trace, exc.grad_norm_trace)
        _manifest(stem.with_suffix(".manifest.json"), "denoise", config_snapshot, None, [trace_path], started)
        raise
    outputs = [out, trace_path, stem.with_suffix(".sphere_y.csv"), stem.with_suffix(".sphere_x.csv")]
    write_signal_csv(out, res.x_star)
    write_trace_csv(trace_path, res.objective_trace, res.grad_norm_trace)
    write_sphere_csv(outputs[2], export_sphere_trajectory(y))
    write_sphere_csv(outputs[3], export_sphere_trajectory(res.x_star))
    _manifest(stem.with_suffix(".manifest.json"), "denoise", config_snapshot, None, outputs, started)
    print(f"{method}/{regime}: {res.iterations} iterations, objective {res.objective_trace[-1]:.6g}")
    if args.truth:
        truth = read_signal_csv(args.truth)
        print(f"input SNR {snr_db(truth, y):.3f} dB, output SNR {snr_db(truth, res.x_star):.3f} dB")
    return 0


def _sweep_config(args) -> SweepConfig:
    raw = _read_config(args.config)
    bench_keys = {f.name for f in fields(BenchmarkConfig)}
    sweep_raw = {k: v for k, v in raw.items() if k not in bench_keys}
    bench = BenchmarkConfig(**_typed(BenchmarkConfig, {k: v for k, v in raw.items() if k in bench_keys}, "benchmark"))
    try:
        cfg = SweepConfig(**_typed(SweepConfig, sweep_raw, "sweep"))
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    if args.seed is not None:
        cfg = SweepConfig(**{**cfg.to_dict(), "seed_base": args.seed})
    return cfg, bench


def cmd_sweep(args):
    started = time.perf_counter()
    cfg, bench = _sweep_config(args)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    result, tuned = sweep_snr(cfg, bench, jobs=args.jobs)
    rows = [(r.regime, r.sigma, r.seed, r.snr_in_db, r.snr_out_db, r.iterations,
             r.wall_time_s if args.timing else "") for r in result.rows]
    csv_path = write_rows_csv(outdir / "sweep.csv", SWEEP_HEADER, rows)
    tuned_path = write_json(outdir / "tuned.json", [
        {"regime": reg, "sigma": sig, **h.to_dict()} for (reg, sig), h in tuned.items()
    ])
    for r in result.rows:
        if r.error:
            print(f"row failed: {r.regime} sigma={r.sigma} seed={r.seed}: {r.error}", file=sys.stderr)
    _manifest(outdir / "manifest.json", "sweep", {"sweep": cfg.to_dict(), "benchmark": bench.to_dict()},
              cfg.seed_base, [csv_path, tuned_path], started)
    for (reg, sig), (sin, sout, n) in sorted(result.mean_snr().items(), key=lambda kv: (kv[0][1], kv[0][0])):
        print(f"sigma={sig:<8g} {reg:<10s} in {sin:7.3f} dB  out {sout:7.3f} dB  (n={n})")
    return 0 if result.success_fraction() >= 0.9 else EXIT_NUMERIC


def _load_sweep_means(path):
    header, rows = read_rows_csv(path)
    idx = {h: i for i, h in enumerate(header)}
    groups = {}
    for r in rows:
        out = float(r[idx["snr_out_db"]])
        if not np.isfinite(out):
            continue
        key = (r[idx["regime"]], float(r[idx["sigma"]]))
        groups.setdefault(key, []).append((float(r[idx["snr_in_db"]]), out))
    return {k: (np.mean([a for a, _ in v]), np.mean([b for _, b in v])) for k, v in groups.items()}


def cmd_check_sweep(args):
    """Check the regime ordering in a sweep CSV."""
    means = _load_sweep_means(args.input)
    sigmas = sorted({s for _, s in means if s >= args.min_sigma})
    ok = True
    for s in sigmas:
        both, comp = means.get(("both", s)), means.get(("component", s))
        if both and comp:
            passed = both[1] >= comp[1]
            ok &= passed
            print(f"sigma={s:g}: both {both[1]:.3f} >= component {comp[1]:.3f}: {'PASS' if passed else 'FAIL'}")
        ker = means.get(("kernel", s))
        if ker:
            passed = ker[1] > ker[0]
            ok &= passed
            print(f"sigma={s:g}: kernel {ker[1]:.3f} > input {ker[0]:.3f}: {'PASS' if passed else 'FAIL'}")
    gaps = [means[("both", s)][1] - means[("kernel", s)][1]
            for s in sigmas if ("both", s) in means and ("kernel", s) in means]
    if gaps:
        passed = float(np.mean(gaps)) <= 1.0
        ok &= passed
        print(f"mean gap both - kernel {np.mean(gaps):.3f} dB <= 1: {'PASS' if passed else 'FAIL'}")
    return 0 if ok else EXIT_CHECK


def _stats_signal(n, s0x):
    k = np.arange(n)
    amp = np.sqrt(s0x / 2.0)
    f = max(1, n // 32)
    return BivariateSignal(amp * np.cos(2 * np.pi * f * k / n), amp * np.sin(2 * np.pi * f * k / n))


def cmd_validate_stats(args):
    started = time.perf_counter()
    raw = _read_config(args.config)
    unknown = set(raw) - set(STATS_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown validate-stats config key(s): {', '.join(sorted(unknown))}")
    cfg = {**STATS_DEFAULTS, **raw}
    if args.seed is not None:
        cfg["seed"] = args.seed
    for key in ("n_trials", "n_repeats", "ks_trials", "n_samples", "seed"):
        cfg[key] = _coerce(key, cfg[key], int)
    cfg["s0x"] = _coerce("s0x", cfg["s0x"], float)
    cfg["sigmas"] = [_coerce("sigmas", s, float) for s in _coerce("sigmas", cfg["sigmas"], tuple)]
    sig = _stats_signal(cfg["n_samples"], cfg["s0x"])
    reports = []
    for i, sigma in enumerate(cfg["sigmas"]):
        rep = validation_report(sig, sigma, cfg["n_trials"], seed=cfg["seed"] + 100003 * i,
                                n_repeats=cfg["n_repeats"], ks_trials=cfg["ks_trials"])
        reports.append(rep)
        winner = "gauss" if rep["gauss_wins"] * 2 > rep["n_repeats"] else "laplace"
        print(f"sigma={sigma:g}: mean_S0 {rep['mean_S0']:.5g} (expected {rep['S0x'] + 4 * sigma**2:.5g}), "
              f"var_S1 {rep['var_S1']:.5g} (expected {4 * sigma**2 * rep['S0x'] + 8 * sigma**4:.5g}), "
              f"better fit: {winner} ({rep['gauss_wins']}/{rep['n_repeats']} gauss)")
    out = Path(args.output)
    write_json(out, {"config": cfg, "reports": reports})
    _manifest(_stem(out).with_suffix(".manifest.json"), "validate-stats", cfg, cfg["seed"], [out], started)
    return 0


def cmd_sphere_export(args):
    sig = read_signal_csv(args.input)
    write_sphere_csv(args.output, export_sphere_trajectory(sig))
    if args.stokes:
        write_stokes_csv(args.stokes, sig.t, stokes(analytic_signal(sig)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polarden", description="Denoise bivariate signals with polarization priors.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write the synthetic AM-FM benchmark signal")
    g.add_argument("--config")
    g.add_argument("--n", type=int, help="number of samples")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    n = sub.add_parser("noise", help="add white Gaussian noise to a signal file")
    n.add_argument("input")
    n.add_argument("--sigma", type=float, required=True)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("-o", "--output", required=True)
    n.set_defaults(func=cmd_noise)

    d = sub.add_parser("denoise", help="solve the mixed or kernel objective")
    d.add_argument("input")
    d.add_argument("--config")
    d.add_argument("--method", choices=["mixed", "kernel"])
    d.add_argument("--regime", choices=sorted(REGIMES), help="weight preset (default: both / kernel)")
    d.add_argument("--sigma", type=float)
    d.add_argument("--max-iters", type=int)
    d.add_argument("--step-size", type=float)
    d.add_argument("--truth", help="clean signal file; prints input/output SNR")
    d.add_argument("-o", "--output", required=True)
    d.set_defaults(func=cmd_denoise)

    s = sub.add_parser("sweep", help="input vs output SNR over noise levels and regimes")
    s.add_argument("--config")
    s.add_argument("-o", "--output-dir", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, help="seed base")
    s.add_argument("--timing", action="store_true", help="fill wall_time_s (makes output run-dependent)")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check-sweep", help="check regime ordering in a sweep CSV")
    c.add_argument("input")
    c.add_argument("--min-sigma", type=float, default=0.05)
    c.set_defaults(func=cmd_check_sweep)

    v = sub.add_parser("validate-stats", help="Monte-Carlo check of the Stokes noise statistics")
    v.add_argument("--config")
    v.add_argument("--seed", type=int)
    v.add_argument("-o", "--output", required=True)
    v.set_defaults(func=cmd_validate_stats)

    e = sub.add_parser("sphere-export", help="normalized Stokes trajectory of a signal file")
    e.add_argument("input")
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--stokes", help="also write t,S0,S1,S2,S3 to this path")
    e.set_defaults(func=cmd_sphere_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"polarden {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, DegenerateTrajectoryError) as exc:
        print(f"polarden {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidInputError as exc:
        print(f"polarden {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"polarden {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
