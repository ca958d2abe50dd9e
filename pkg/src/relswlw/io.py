"""Diagnostics CSV, raw snapshots with text sidecars, and the run manifest."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import astuple, dataclass
from pathlib import Path

import numpy as np

DIAGNOSTIC_COLUMNS = (
    "time",
    "total_mass",
    "momentum_x",
    "momentum_y",
    "momentum_z",
    "charge",
    "density_residual",
    "wave_residual",
    "picard_distance",
)


@dataclass
class DiagnosticsRow:
    time: float
    total_mass: float = math.nan
    momentum_x: float = math.nan
    momentum_y: float = math.nan
    momentum_z: float = math.nan
    charge: float = math.nan
    density_residual: float = math.nan
    wave_residual: float = math.nan
    picard_distance: float = math.nan


def format_rows(rows):
    lines = [",".join(DIAGNOSTIC_COLUMNS)]
    last = -math.inf
    for row in rows:
        if row.time < last:
            raise ValueError("diagnostics rows must have monotone time stamps")
        last = row.time
        lines.append(",".join(repr(float(v)) for v in astuple(row)))
    return "\n".join(lines) + "\n"


def write_diagnostics(path, rows):
    Path(path).write_text(format_rows(rows))


def read_diagnostics(path):
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, (float(v) for v in line.split(",")))) for line in lines[1:]]


def write_snapshot(stem, grid, time, fields):
    """Write ``stem.bin`` (little-endian float64) and the ``stem.txt`` header.

    ``fields`` maps names to arrays of the grid shape; the payload runs
    field by field, then z, then y, with x fastest.
    """
    stem = Path(stem)
    names = list(fields)
    data = np.stack([np.asarray(fields[n], dtype=float) for n in names])
    grid.check(data)
    payload = np.ascontiguousarray(np.transpose(data, (0, 3, 2, 1))).astype("<f8")
    stem.with_suffix(".bin").write_bytes(payload.tobytes())
    h = grid.spacing
    n = grid.shape
    header = (
        f"dims={n[0]},{n[1]},{n[2]} spacing={h[0]!r},{h[1]!r},{h[2]!r} "
        f"time={float(time)!r} fields={','.join(names)}\n"
    )
    stem.with_suffix(".txt").write_text(header)
    return stem.with_suffix(".bin"), stem.with_suffix(".txt")


def read_snapshot(stem):
    """Return ``(header, fields)`` with ``fields`` a dict of (N1, N2, N3) arrays."""
    stem = Path(stem)
    header = {}
    for token in stem.with_suffix(".txt").read_text().split():
        key, value = token.split("=", 1)
        header[key] = value
    dims = tuple(int(v) for v in header["dims"].split(","))
    names = header["fields"].split(",")
    raw = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype="<f8")
    data = raw.reshape((len(names), dims[2], dims[1], dims[0])).transpose(0, 3, 2, 1)
    parsed = {
        "dims": dims,
        "spacing": tuple(float(v) for v in header["spacing"].split(",")),
        "time": float(header["time"]),
        "fields": names,
    }
    return parsed, {n: data[i] for i, n in enumerate(names)}


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, config_text, config_hash, version, artifacts, status="ok", extra=None):
    out_dir = Path(out_dir)
    manifest = {
        "code_version": version,
        "config_sha256": config_hash,
        "config": config_text,
        "status": status,
        "artifacts": [
            {"path": str(Path(p).relative_to(out_dir)), "sha256": sha256_file(p)} for p in sorted(artifacts)
        ],
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
