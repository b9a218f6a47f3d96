"""Command-line entry point: ``qmpemba {quench,sweep,hydro,analyze,validate}``.

Every subcommand accepts ``--config FILE`` (JSON); explicit flags override
values from the file.  Relative output paths are placed under
``$QMPEMBA_OUTPUT_ROOT`` when it is set.

Exit codes: 0 success, 1 configuration or validation error, 2 runtime
failure, 3 validation-suite failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from itertools import combinations
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, analysis, hydro, validation
from ._backend import BACKEND
from .persistence import (
    SchemaError,
    read_csv,
    read_manifest,
    resolve_output,
    sha256_file,
    write_columns,
    write_csv,
    write_manifest,
)
from .quench import WITNESS_COLUMNS, ConfigError, QuenchConfig, WitnessSeries, run_quench

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_SUITE = 0, 1, 2, 3

# flag name -> (config key, type); nested keys use a dot
QUENCH_FLAGS = {
    "model": ("model", str),
    "N": ("N", int),
    "l": ("l", int),
    "a": ("a", float),
    "theta": ("theta", float),
    "t_max": ("t_max", float),
    "sample_every": ("sample_every", int),
    "subsystem_start": ("subsystem_start", int),
    "seed": ("seed", int),
    "output": ("output", str),
    "alpha": ("floquet.alpha", float),
    "beta": ("floquet.beta", float),
    "gamma": ("floquet.gamma", float),
    "J": ("mfi.J", float),
    "h_x": ("mfi.h_x", float),
    "h_z": ("mfi.h_z", float),
    "dt": ("mfi.dt", float),
}
HYDRO_TYPES = {f.name: f.type for f in fields(hydro.HydroConfig)}
GRID_AXES = ("a", "theta", "N")


class UsageError(Exception):
    """Bad input to a subcommand; mapped to exit code 1."""


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def _set_nested(d: dict, key: str, value) -> None:
    head, _, rest = key.partition(".")
    if rest:
        sub = d.setdefault(head, {})
        if not isinstance(sub, dict):
            sub = dict(_dataclass_dict(sub))
            d[head] = sub
        sub[rest] = value
    else:
        d[head] = value


def _dataclass_dict(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def _quench_dict(args) -> dict:
    data = _load_config_file(args.config)
    data.pop("grid", None)
    data.pop("workers", None)
    for flag, (key, _) in QUENCH_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            _set_nested(data, key, value)
    return data


def _quench_config(data: dict) -> QuenchConfig:
    try:
        return QuenchConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError({"config": str(exc)}) from exc


def _manifest(kind: str, config: dict, files: dict[str, str], checks: dict, wall: float, **extra) -> dict:
    out = {
        "kind": kind,
        "version": __version__,
        "backend": BACKEND,
        "config": config,
        "wall_time_s": round(wall, 3),
        "checks": checks,
        "files": files,
    }
    out.update(extra)
    return out


def quench_checks(series: WitnessSeries) -> dict:
    norm = float(np.max(series.column("norm_err")))
    checks = {"norm_error": {"value": norm, "passed": norm < 1e-10}}
    q = series.column("q_mean")
    drift = float(np.max(np.abs(q - q[0])))
    name = "magnetization_drift" if series.config.model == "floquet" else "energy_drift"
    checks[name] = {"value": drift, "passed": drift < 1e-9 if series.config.model == "floquet" else True}
    return checks


def write_quench(series: WitnessSeries, out_dir: Path, wall: float) -> dict:
    digest = write_csv(out_dir / "witness.csv", WITNESS_COLUMNS, series.rows)
    checks = quench_checks(series)
    manifest = _manifest("quench", series.config.to_dict(), {"witness.csv": digest}, checks, wall)
    write_manifest(out_dir / "manifest.json", manifest)
    return manifest


# ---------------------------------------------------------------------------
# quench


def cmd_quench(args) -> int:
    cfg = _quench_config(_quench_dict(args))
    out_dir = resolve_output(cfg.output)
    t0 = time.perf_counter()
    series = run_quench(cfg)
    manifest = write_quench(series, out_dir, time.perf_counter() - t0)
    last = series.rows[-1]
    print(f"wrote {out_dir / 'witness.csv'} ({len(series.rows)} rows); "
          f"final D_A={last[2]:.6g} dS_A={last[3]:.6g} asym={last[4]:.6g}")
    failed = [k for k, v in manifest["checks"].items() if not v["passed"]]
    if failed:
        print(f"run checks failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def derive_seed(master: int, coords: dict) -> int:
    """Per-point seed from a hash of the master seed and the grid coordinates."""
    blob = json.dumps({"seed": master, "coords": coords}, sort_keys=True).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


def _parse_grid(text: str, axis: str) -> list:
    conv = int if axis == "N" else float
    try:
        values = [conv(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"grid over {axis}: {exc}") from exc
    return values


def _fit_window_points(t: np.ndarray, t_min: float, t_max: float) -> tuple[float, float, bool]:
    """Widen ``t_max`` until the window holds enough samples for a fit."""
    inside = (t >= t_min) & (t <= t_max)
    if inside.sum() >= analysis.MIN_FIT_POINTS:
        return t_min, t_max, False
    after = t[t >= t_min]
    if after.size < analysis.MIN_FIT_POINTS:
        raise ValueError(f"fewer than {analysis.MIN_FIT_POINTS} samples after t={t_min:g}")
    return t_min, float(after[analysis.MIN_FIT_POINTS - 1]), True


def summarize(series: WitnessSeries, column: str = "D_A") -> dict:
    s = analysis.Series.positive_times(column, series.column("t"), series.column(column))
    row: dict = {}
    t_min, t_max = analysis.default_fit_window(series.config.N)
    try:
        lo, hi, widened = _fit_window_points(s.times, t_min, t_max)
        fit = analysis.fit_power_law(s, lo, hi)
        row.update(exponent=fit.exponent, exponent_stderr=fit.exponent_stderr,
                   r_squared=fit.r_squared, fit_t_min=lo, fit_t_max=hi, fit_widened=int(widened))
    except ValueError:
        row.update(exponent=math.nan, exponent_stderr=math.nan, r_squared=math.nan,
                   fit_t_min=t_min, fit_t_max=t_max, fit_widened=0)
    try:
        row["plateau"], row["plateau_std"] = analysis.plateau_estimate(s)
    except ValueError:
        row["plateau"], row["plateau_std"] = math.nan, math.nan
    return row


SUMMARY_COLUMNS = ("point", "axis", "value", "N", "seed", "status", "exponent", "exponent_stderr",
                   "r_squared", "fit_t_min", "fit_t_max", "fit_widened", "plateau", "plateau_std")


def cmd_sweep(args) -> int:
    data = _quench_dict(args)
    file_cfg = _load_config_file(args.config)
    grids = dict(file_cfg.get("grid", {}))
    for axis in GRID_AXES:
        text = getattr(args, f"grid_{axis}")
        if text is not None:
            grids[axis] = _parse_grid(text, axis)
    grids = {k: v for k, v in grids.items() if v}
    if len(grids) != 1:
        raise UsageError("sweep needs exactly one nonempty grid (--grid-a, --grid-theta or --grid-N)")
    (axis, values), = grids.items()
    if axis not in GRID_AXES:
        raise UsageError(f"unknown grid axis {axis!r}")
    workers = args.workers or int(file_cfg.get("workers", 1))
    base = _quench_config(data)
    out_root = resolve_output(base.output)

    points = []
    for k, value in enumerate(values):
        coords = {axis: value}
        name = f"{k:03d}_{axis}={value:g}"
        try:
            cfg = _quench_config({**base.to_dict(), axis: value,
                                  "seed": derive_seed(base.seed, coords), "output": str(out_root / name)})
        except ConfigError as exc:
            cfg = exc
        points.append((name, value, cfg))

    def run_point(point):
        name, value, cfg = point
        if isinstance(cfg, ConfigError):
            return {"status": "config_error", "message": str(cfg)}
        t0 = time.perf_counter()
        try:
            series = run_quench(cfg)
            manifest = write_quench(series, Path(cfg.output), time.perf_counter() - t0)
            ok = all(v["passed"] for v in manifest["checks"].values())
            return {"status": "ok" if ok else "check_failed", **summarize(series)}
        except Exception as exc:
            return {"status": "runtime_error", "message": f"{type(exc).__name__}: {exc}"}

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run_point, points))

    rows = []
    for (name, value, cfg), res in zip(points, results):
        n_sites = cfg.N if isinstance(cfg, QuenchConfig) else (value if axis == "N" else base.N)
        seed = cfg.seed if isinstance(cfg, QuenchConfig) else derive_seed(base.seed, {axis: value})
        row = {"point": name, "axis": axis, "value": float(value), "N": n_sites, "seed": seed}
        row.update(res)
        rows.append(tuple(row.get(c, math.nan) for c in SUMMARY_COLUMNS))
    digest = write_csv(out_root / "summary.csv", SUMMARY_COLUMNS, rows)
    failures = {p[0]: r.get("message", r["status"]) for p, r in zip(points, results) if r["status"] != "ok"}
    manifest = _manifest("sweep", base.to_dict(), {"summary.csv": digest},
                         {"points_ok": {"value": len(points) - len(failures), "passed": not failures}},
                         time.perf_counter() - t0, grid={axis: values}, failures=failures)
    write_manifest(out_root / "manifest.json", manifest)
    print(f"wrote {len(points)} runs and {out_root / 'summary.csv'}")
    for name, message in failures.items():
        print(f"point {name} failed: {message}", file=sys.stderr)
    if any(r["status"] == "config_error" for r in results):
        return EXIT_CONFIG
    return EXIT_RUNTIME if failures else EXIT_OK


# ---------------------------------------------------------------------------
# hydro


def _hydro_config(args) -> hydro.HydroConfig:
    data = _load_config_file(args.config)
    data.pop("workers", None)
    output = data.pop("output", None)
    for name in HYDRO_TYPES:
        value = getattr(args, f"h_{name}", None)
        if value is not None:
            data[name] = value
    unknown = set(data) - set(HYDRO_TYPES)
    if unknown:
        raise ConfigError({k: "unknown field" for k in sorted(unknown)})
    try:
        cfg = hydro.HydroConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError({"hydro": str(exc)}) from exc
    args.output = args.output or output or "runs/hydro"
    return cfg


def cmd_hydro(args) -> int:
    cfg = _hydro_config(args)
    workers = args.workers or int(_load_config_file(args.config).get("workers", 1))
    out_dir = resolve_output(args.output)
    t0 = time.perf_counter()
    ms = hydro.run_ensemble(cfg, workers=workers)
    wall = time.perf_counter() - t0
    digest = write_columns(out_dir / "moments.csv", ms.columns())
    checks = {"sum_conservation": {"value": ms.max_sum_drift, "passed": ms.max_sum_drift < 1e-9}}
    extra = {"chi_stationary": ms.chi_stationary, "grad_stationary": ms.grad_stationary}
    try:
        extra["predicted_exponent"] = hydro.classify_tail(cfg)
    except ValueError as exc:
        extra["predicted_exponent"] = str(exc)
    try:
        s = analysis.Series.positive_times("var_excess", ms.times, ms.var_excess)
        fit = analysis.fit_power_law(s, 10.0, cfg.t_max / 10)
        extra["fit"] = {"exponent": fit.exponent, "stderr": fit.exponent_stderr, "window": fit.window}
    except ValueError as exc:
        extra["fit"] = str(exc)
    manifest = _manifest("hydro", cfg.to_dict(), {"moments.csv": digest}, checks, wall, **extra)
    write_manifest(out_dir / "manifest.json", manifest)
    fit = extra["fit"]
    fit_text = f"var_excess exponent {fit['exponent']:.3f}" if isinstance(fit, dict) else f"no fit ({fit})"
    print(f"wrote {out_dir / 'moments.csv'}; {fit_text}")
    return EXIT_OK if checks["sum_conservation"]["passed"] else EXIT_RUNTIME


# ---------------------------------------------------------------------------
# analyze


def _labels(paths: Sequence[Path]) -> list[str]:
    labels = []
    for p in paths:
        base = p.parent.name if p.stem in ("witness", "moments") and p.parent.name else p.stem
        label, k = base, 1
        while label in labels:
            k += 1
            label = f"{base}_{k}"
        labels.append(label)
    return labels


def load_series_files(paths: Sequence[Path]) -> list[dict[str, np.ndarray]]:
    tables = []
    for p in paths:
        try:
            tables.append(read_csv(p))
        except OSError as exc:
            raise UsageError(f"cannot read {p}: {exc}") from exc
    ref = list(tables[0])
    for p, table in zip(paths[1:], tables[1:]):
        cols = list(table)
        missing = [c for c in ref if c not in cols]
        extra = [c for c in cols if c not in ref]
        if missing:
            raise SchemaError(f"{p}: missing column {missing[0]!r} (present in {paths[0]})")
        if extra:
            raise SchemaError(f"{p}: unexpected column {extra[0]!r} (absent from {paths[0]})")
    return tables


def _manifest_status(path: Path) -> str:
    mpath = path.parent / "manifest.json"
    if not mpath.exists():
        return "no manifest"
    digest = read_manifest(mpath).get("files", {}).get(path.name)
    if digest is None:
        return "not listed in manifest"
    return "checksum ok" if digest == sha256_file(path) else "checksum MISMATCH"


def _window_for(path: Path, args) -> tuple[Optional[float], Optional[float]]:
    lo, hi = args.t_min, args.t_max
    if lo is None or hi is None:
        mpath = path.parent / "manifest.json"
        n = None
        if mpath.exists():
            n = read_manifest(mpath).get("config", {}).get("N")
        if isinstance(n, int):
            d_lo, d_hi = analysis.default_fit_window(n)
            lo = d_lo if lo is None else lo
            hi = d_hi if hi is None else hi
    return lo, hi


def _write_dat(path: Path, x: np.ndarray, y: np.ndarray, header: str) -> None:
    from .persistence import atomic_write_bytes

    lines = [f"# {header}"] + [f"{a:.17g} {b:.17g}" for a, b in zip(x, y)]
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def cmd_analyze(args) -> int:
    file_cfg = _load_config_file(args.config)
    for key in ("column", "t_min", "t_max", "persistence", "local_window", "output"):
        if getattr(args, key, None) is None and key in file_cfg:
            setattr(args, key, file_cfg[key])
    names = list(args.files) or list(file_cfg.get("files", []))
    if not names:
        raise UsageError("analyze needs at least one series file")
    paths = [Path(f) for f in names]
    tables = load_series_files(paths)
    column = args.column or ("D_A" if "D_A" in tables[0] else "var_excess")
    if column not in tables[0]:
        raise SchemaError(f"{paths[0]}: no column {column!r}")
    if "t" not in tables[0]:
        raise SchemaError(f"{paths[0]}: missing column 't'")
    persistence = args.persistence or 3
    local_window = args.local_window or 7
    out_dir = resolve_output(args.output or "analysis")
    labels = _labels(paths)

    series, report = [], {"column": column, "files": [], "crossings": None}
    for path, label, table in zip(paths, labels, tables):
        s = analysis.Series.positive_times(label, table["t"], table[column])
        series.append(s)
        entry = {"label": label, "path": str(path), "manifest": _manifest_status(path), "n_samples": len(s)}
        lo, hi = _window_for(path, args)
        lo = s.times[0] if lo is None else lo
        hi = s.times[-1] if hi is None else hi
        try:
            lo, hi, widened = _fit_window_points(s.times, lo, hi)
            fit = analysis.fit_power_law(s, lo, hi)
            entry["fit"] = {"exponent": fit.exponent, "stderr": fit.exponent_stderr, "amplitude": fit.amplitude,
                            "r_squared": fit.r_squared, "window": list(fit.window), "n_points": fit.n_points,
                            "n_excluded": fit.n_excluded, "widened": widened}
        except ValueError as exc:
            entry["fit"] = {"error": str(exc)}
        _write_dat(out_dir / f"{label}.dat", s.times, s.values, f"t {column}")
        try:
            le = analysis.local_exponent(s, min(local_window, len(s)))
            _write_dat(out_dir / f"{label}.local_exponent.dat", le.times, le.values, "t local_exponent")
            entry["local_exponent_file"] = f"{label}.local_exponent.dat"
        except ValueError as exc:
            entry["local_exponent_file"] = None
            entry["local_exponent_error"] = str(exc)
        try:
            entry["plateau"] = list(analysis.plateau_estimate(s))
        except ValueError:
            entry["plateau"] = None
        report["files"].append(entry)

    if len(series) > 1:
        report["crossings"] = []
        for s1, s2 in combinations(series, 2):
            times = analysis.detect_crossings(s1, s2, persistence=persistence)
            lo = max(s1.times[0], s2.times[0])
            hi = min(s1.times[-1], s2.times[-1])
            report["crossings"].append({"pair": [s1.label, s2.label], "t_M": times,
                                        "persistence": persistence, "window": [lo, hi]})

    out_dir.mkdir(parents=True, exist_ok=True)
    from .persistence import atomic_write_bytes

    atomic_write_bytes(out_dir / "report.json",
                       (json.dumps(report, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    text = render_report(report)
    atomic_write_bytes(out_dir / "report.txt", text.encode("utf-8"))
    print(text, end="")
    return EXIT_OK


def render_report(report: dict) -> str:
    lines = [f"column: {report['column']}", "", "fits:"]
    for e in report["files"]:
        fit = e["fit"]
        if "error" in fit:
            lines.append(f"  {e['label']}: no fit ({fit['error']})")
        else:
            lines.append(f"  {e['label']}: exponent {fit['exponent']:.4f} +- {fit['stderr']:.4f} "
                         f"over [{fit['window'][0]:g}, {fit['window'][1]:g}] ({fit['n_points']} points, "
                         f"r^2={fit['r_squared']:.4f}); {e['manifest']}")
        if e.get("plateau"):
            lines.append(f"    plateau {e['plateau'][0]:.6g} +- {e['plateau'][1]:.2g}")
    if report["crossings"] is not None:
        lines += ["", "crossings:"]
        for c in report["crossings"]:
            t = ", ".join(f"{x:.6g}" for x in c["t_M"]) or "none"
            lines.append(f"  {c['pair'][0]} vs {c['pair'][1]}: t_M = {t}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    file_cfg = _load_config_file(args.config)
    scale = args.scale or file_cfg.get("scale", "quick")
    if scale not in ("quick", "full"):
        raise UsageError(f"scale must be quick or full, got {scale!r}")
    results = []
    for name, fn in validation.suite(scale):
        res = validation._check(name, fn)
        print(res.line(), flush=True)
        results.append(res)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed ({scale}, backend {BACKEND})")
    if args.output:
        out = resolve_output(args.output)
        payload = {"scale": scale, "backend": BACKEND, "version": __version__,
                   "checks": [r.__dict__ for r in results]}
        write_manifest(out / "validate.json", payload)
    return EXIT_SUITE if n_fail else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_quench_flags(p: argparse.ArgumentParser) -> None:
    for flag, (_, typ) in QUENCH_FLAGS.items():
        p.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=typ, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmpemba", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quench", help="evolve one initial state and record witnesses")
    q.add_argument("--config")
    _add_quench_flags(q)
    q.set_defaults(func=cmd_quench)

    s = sub.add_parser("sweep", help="run a grid of quenches in parallel")
    s.add_argument("--config")
    _add_quench_flags(s)
    for axis in GRID_AXES:
        s.add_argument(f"--grid-{axis}", dest=f"grid_{axis}", default=None,
                       help=f"comma-separated values of {axis}")
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    h = sub.add_parser("hydro", help="fluctuating-hydrodynamics ensemble")
    h.add_argument("--config")
    for name, typ in HYDRO_TYPES.items():
        conv = int if typ in (int, "int") else float
        h.add_argument(f"--{name.replace('_', '-')}", dest=f"h_{name}", type=conv, default=None)
    h.add_argument("--workers", type=int, default=None)
    h.add_argument("--output", default=None)
    h.set_defaults(func=cmd_hydro)

    a = sub.add_parser("analyze", help="fits, local exponents and crossings of series files")
    a.add_argument("files", nargs="*")
    a.add_argument("--config")
    a.add_argument("--column", default=None)
    a.add_argument("--t-min", dest="t_min", type=float, default=None)
    a.add_argument("--t-max", dest="t_max", type=float, default=None)
    a.add_argument("--persistence", type=int, default=None)
    a.add_argument("--local-window", dest="local_window", type=int, default=None)
    a.add_argument("--output", default=None)
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate", help="run the invariant suites")
    v.add_argument("--config")
    v.add_argument("--scale", choices=("quick", "full"), default=None)
    v.add_argument("--output", default=None)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        for key, msg in exc.errors.items():
            print(f"config error: {key}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (UsageError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
