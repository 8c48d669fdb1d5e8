"""Plot-ready output files: profile CSVs with JSON sidecars, reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .wavesolve import DecayFit, Profile


def fmt(x):
    """Round-trip float formatting shared by every writer."""
    return "%.17g" % x


def jsonable(obj):
    """Recursively convert numpy scalars, infinities and dataclass-like values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, DecayFit):
        return {"rate": jsonable(obj.rate), "r2": jsonable(obj.r2), "npoints": obj.npoints}
    return obj


def write_json(path, data):
    Path(path).write_text(json.dumps(jsonable(data), indent=2, sort_keys=True) + "\n")


def profile_meta(prof, **extra):
    meta = {
        "c": prof.c,
        "beta": prof.beta,
        "anchor": prof.anchor,
        "sup": prof.sup,
        "decay_fit": prof.decay_fit,
        "iterations": prof.iterations,
        "residual": prof.residual,
        "status": prof.status,
        "h": prof.h,
        "left_rate": prof.left_rate,
    }
    meta.update(prof.meta)
    meta.update(extra)
    return meta


def write_profile(out_dir, name, prof, **extra):
    """Write ``profile_<name>.csv`` (columns t, phi) and ``profile_<name>.meta.json``."""
    out_dir = Path(out_dir)
    csv_path = out_dir / f"profile_{name}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "phi"])
        for t, y in zip(prof.t.tolist(), prof.phi.tolist()):
            w.writerow([fmt(t), fmt(y)])
    write_json(out_dir / f"profile_{name}.meta.json", profile_meta(prof, **extra))
    return csv_path


def read_profile(csv_path):
    """Load a profile written by :func:`write_profile` (sidecar optional)."""
    csv_path = Path(csv_path)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    meta_path = csv_path.with_suffix("").with_suffix(".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    left = meta.get("left_rate", "inf")
    left_rate = math.inf if left == "inf" else float(left)
    fit = meta.get("decay_fit")
    prof = Profile(data[:, 0], data[:, 1], float(meta.get("c", math.nan)), meta.get("beta"),
                   meta.get("anchor", {}), DecayFit(**fit) if fit else None,
                   meta.get("iterations", 0), meta.get("residual"), left_rate,
                   meta.get("status", "Converged"))
    return prof


def write_rows_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if v is None else (fmt(v) if isinstance(v, float) else v) for v in row])
