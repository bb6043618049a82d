"""Standalone readers for the schema=1 artifacts.

The figure scripts consume only the documented CSV/JSON files; nothing here
imports the simulation package or recomputes diagnostics.
"""
from __future__ import annotations

import json
import warnings

import numpy as np

SCHEMA = 1


class SchemaError(ValueError):
    pass


def read_trajectory(path) -> dict[str, np.ndarray]:
    """Trajectory CSV -> column dict.  Validates the schema comment line."""
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# schema={SCHEMA}":
            raise SchemaError(f"{path}: expected '# schema={SCHEMA}', got {first!r}")
        names = fh.readline().strip().split(",")
        required = {"t", "loss", "K", "norm_a", "norm_W", "w2_rel"}
        missing = required - set(names)
        if missing:
            raise SchemaError(f"{path}: missing columns {sorted(missing)}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty input is our own error below
            body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if body.size == 0:
        raise SchemaError(f"{path}: trajectory has no records")
    if body.shape[1] != len(names):
        raise SchemaError(f"{path}: row width does not match the header")
    return {name: body[:, i] for i, name in enumerate(names)}


def read_milestones(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA:
        raise SchemaError(f"{path}: expected schema={SCHEMA}")
    return doc


def read_sweep(path) -> list[dict]:
    """Sweep CSV -> list of typed row dicts."""
    rows = []
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# schema={SCHEMA}":
            raise SchemaError(f"{path}: expected '# schema={SCHEMA}', got {first!r}")
        names = fh.readline().strip().split(",")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            row = dict(zip(names, parts))
            for key in ("m", "seed", "n"):
                if key in row:
                    row[key] = int(row[key])
            if "alpha" in row:
                row["alpha"] = float(row["alpha"])
            for key, val in list(row.items()):
                if isinstance(val, str) and key not in ("target", "stop_reason", "status"):
                    row[key] = float(val) if val != "" else None
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: sweep file has no rows")
    return rows
