"""Artifact export: schema-versioned trajectory CSV and milestone/summary JSON.

All numeric output uses 12 significant digits.  Exports are byte-stable:
identical inputs produce identical files, which is asserted by the
determinism tests.  CSV files start with a `# schema=1` comment line; JSON
documents carry a "schema" field.

Trajectory CSV column order (d = input dimension):
    t, loss, K, Kprime, q_max, norm_a, norm_W,
    dir_sum_1 .. dir_sum_d,
    w2_rel, condensation_ratio, grad_inf_norm, theta_inf_norm
"""
from __future__ import annotations

import dataclasses
import json
import math
import warnings

import numpy as np

from .dynamics import Trajectory

SCHEMA = 1


def _fmt(x: float) -> str:
    return f"{x:.11e}"


def _round12(x):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(_fmt(x))


def trajectory_columns(d: int) -> list[str]:
    return (["t", "loss", "K", "Kprime", "q_max", "norm_a", "norm_W"]
            + [f"dir_sum_{i + 1}" for i in range(d)]
            + ["w2_rel", "condensation_ratio", "grad_inf_norm", "theta_inf_norm"])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    d = traj.config.d
    head = [traj.t, traj.loss, traj.K, traj.Kprime, traj.q_max, traj.norm_a, traj.norm_W]
    tail = [traj.w2_rel, traj.condensation_ratio, traj.grad_inf_norm, traj.theta_inf_norm]
    columns = head + [traj.dir_sums[:, i] for i in range(d)] + tail
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={SCHEMA}\n")
        fh.write(",".join(trajectory_columns(d)) + "\n")
        for r in range(traj.n_records):
            fh.write(",".join(_fmt(col[r]) for col in columns) + "\n")


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Load a schema=1 trajectory CSV as a column dict (no Trajectory rebuild)."""
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# schema={SCHEMA}":
            raise ValueError(f"{path}: expected '# schema={SCHEMA}' header, got {first!r}")
        names = fh.readline().strip().split(",")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty input is our own error below
            body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if body.size == 0:
        raise ValueError(f"{path}: trajectory has no records")
    if body.shape[1] != len(names):
        raise ValueError(f"{path}: column count mismatch")
    return {name: body[:, i] for i, name in enumerate(names)}


def _config_echo(traj: Trajectory) -> dict:
    out = dataclasses.asdict(traj.config)
    out["seed"] = int(out["seed"])
    return out


def trajectory_summary(traj: Trajectory, milestones=None) -> dict:
    """JSON-ready run summary: config echo, terminal stats, milestones."""
    last = traj.n_records - 1
    doc = {
        "schema": SCHEMA,
        "config": _config_echo(traj),
        "stop_reason": traj.stop_reason,
        "n_records": traj.n_records,
        "terminal": {
            "t": _round12(traj.t[last]),
            "loss": _round12(traj.loss[last]),
            "K": _round12(traj.K[last]),
            "Kprime": _round12(traj.Kprime[last]),
            "q_max": _round12(traj.q_max[last]),
            "norm_a": _round12(traj.norm_a[last]),
            "norm_W": _round12(traj.norm_W[last]),
            "w2_rel": _round12(traj.w2_rel[last]),
        },
        "milestones": milestone_dict(milestones) if milestones is not None else None,
    }
    return doc


def milestone_dict(report) -> dict:
    return {key: (_round12(val) if isinstance(val, float) else val)
            for key, val in report.to_dict().items()}


def write_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
