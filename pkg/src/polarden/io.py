"""CSV and JSON readers/writers for signals, Stokes exports, traces and configs.

Floats are written with ``repr`` precision so files round-trip exactly
and reruns produce byte-identical output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .signal import BivariateSignal, StokesTrajectory

__all__ = [
    "write_signal_csv",
    "read_signal_csv",
    "write_stokes_csv",
    "write_sphere_csv",
    "write_trace_csv",
    "write_rows_csv",
    "read_rows_csv",
    "load_config",
    "write_json",
]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_rows_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_rows_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty file") from None
        return header, [r for r in reader if r]


def write_signal_csv(path, sig: BivariateSignal) -> Path:
    return write_rows_csv(path, ["t", "u", "v"], zip(sig.t, sig.u, sig.v))


def read_signal_csv(path) -> BivariateSignal:
    """Read a ``t,u,v`` file. The time column must be uniformly spaced."""
    header, rows = read_rows_csv(path)
    if [h.strip() for h in header] != ["t", "u", "v"]:
        raise InvalidInputError(f"{path}: expected header t,u,v, got {','.join(header)}")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 3 or data.shape[0] < 4:
        raise InvalidInputError(f"{path}: need at least 4 rows of 3 columns")
    t = data[:, 0]
    steps = np.diff(t)
    dt = (t[-1] - t[0]) / (t.size - 1)
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-6 * abs(dt):
        raise InvalidInputError(f"{path}: time column is not uniformly increasing")
    return BivariateSignal(data[:, 1], data[:, 2], dt=dt, t0=t[0])


def write_stokes_csv(path, t, S: StokesTrajectory) -> Path:
    return write_rows_csv(path, ["t", "S0", "S1", "S2", "S3"], zip(t, S.S0, S.S1, S.S2, S.S3))


def write_sphere_csv(path, traj) -> Path:
    """Write a sphere trajectory (see :func:`polarden.experiments.export_sphere_trajectory`)."""
    s = np.where(traj.valid[:, None], traj.s, 0.0)
    return write_rows_csv(
        path, ["t", "s1", "s2", "s3", "valid"],
        zip(traj.t, s[:, 0], s[:, 1], s[:, 2], traj.valid.astype(int)),
    )


def write_trace_csv(path, objective_trace, grad_norm_trace) -> Path:
    rows = ((k, f, g) for k, (f, g) in enumerate(zip(objective_trace, grad_norm_trace)))
    return write_rows_csv(path, ["iter", "objective", "grad_norm"], rows)


def load_config(path) -> dict:
    """Read a flat JSON object of settings."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: malformed config ({exc})") from None
    if not isinstance(cfg, dict):
        raise InvalidInputError(f"{path}: config must be a JSON object")
    for key, val in cfg.items():
        if isinstance(val, dict):
            raise InvalidInputError(f"{path}: config key {key!r} must not be nested")
    return cfg


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
