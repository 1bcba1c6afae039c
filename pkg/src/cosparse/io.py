"""CSV matrices with JSON sidecars.

Matrices are stored one row per line with ``%.17g`` formatting (vectors one
entry per line); metadata goes to a sidecar with the same stem and a
``.json`` suffix.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .frames import Frame, make_frame

FMT = "%.17g"


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def save_matrix(path, a, meta: dict | None = None) -> None:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    np.savetxt(path, a, fmt=FMT, delimiter=",")
    if meta is not None:
        write_json(sidecar_path(path), meta)


def load_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def load_vector(path) -> np.ndarray:
    return load_matrix(path).reshape(-1)


def read_sidecar(path) -> dict | None:
    side = sidecar_path(path)
    if not side.exists():
        return None
    return json.loads(side.read_text())


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=False, allow_nan=False)


def _clean(obj):
    # NaN/inf are not JSON; numpy scalars are not serializable
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def frame_meta(frame: Frame) -> dict:
    return {"p": frame.p, "d": frame.d, "A": frame.lower_bound, "B": frame.upper_bound,
            "seed": frame.seed}


def save_frame(path, frame: Frame) -> None:
    save_matrix(path, frame.omega, frame_meta(frame))


def load_frame(path) -> Frame:
    meta = read_sidecar(path) or {}
    return make_frame(load_matrix(path), meta.get("seed"))


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FMT % v
    return "" if v is None else str(v)


def write_rows(path_or_file, header, rows) -> None:
    """Write `rows` under `header` as CSV with ``%.17g`` floats."""
    def _write(f):
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_cell(v) for v in row])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as f:
            _write(f)
