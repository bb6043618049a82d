"""Parameter sweeps over (m, alpha, target, seed) cells and descent-time fits.

Cells execute in a spawned process pool (workers inherit nothing from the
parent, so the numba threading layer stays healthy); every cell writes its
own trajectory/milestone artifacts, and a single aggregation step emits a
sweep CSV sorted by cell key, so the aggregate is independent of execution
order.  Seeded runs are deterministic, hence so is the whole sweep.
"""
from __future__ import annotations

import math
import multiprocessing
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .activations import tanh_activation
from .datasets import make_dataset
from .diagnostics import detect_milestones, predict_milestones
from .dynamics import MilestoneStop, run
from .io import SCHEMA, milestone_dict, trajectory_summary, write_json, write_trajectory_csv, _fmt
from .model import RunConfig

SWEEP_COLUMNS = (
    "m", "alpha", "target", "seed", "n",
    "T_p_emp", "T_d_emp", "T_sp_emp",
    "T_p_pred", "T_d_pred", "T_sp_pred",
    "loss_initial", "loss_final", "stop_reason", "status",
)

CELL_COLUMNS = (
    "m", "alpha", "target", "n_seeds",
    "T_p_emp_mean", "T_p_emp_min", "T_p_emp_max",
    "T_d_emp_mean", "T_d_emp_min", "T_d_emp_max",
    "T_sp_emp_mean", "T_sp_emp_min", "T_sp_emp_max",
)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of runs: every combination of ms x alphas x targets x seeds."""

    ms: tuple[int, ...]
    alphas: tuple[float, ...]
    targets: tuple[str, ...] = ("f1",)
    seeds: tuple[int, ...] = (0, 1, 2)
    out_dir: str = "sweep_out"
    n: int = 250
    lo: float = -15.0
    hi: float = 15.0
    normalize: bool = True
    step_size: float = 1e-3
    record_stride: int = 10
    beta: float = 0.05
    plateau_eps: float = 0.05
    integrator: str = "euler"
    max_time: float | None = None  # default per cell: T_d_pred + 6
    stop_at: str = "T_d"  # one of T_d, T_sp, max_time
    workers: int | None = None

    def __post_init__(self):
        if not (self.ms and self.alphas and self.targets and self.seeds):
            raise ValueError("sweep grids must be nonempty")
        if self.stop_at not in ("T_d", "T_sp", "max_time"):
            raise ValueError("stop_at must be one of T_d, T_sp, max_time")
        for m in self.ms:
            for alpha in self.alphas:
                for seed in self.seeds:
                    self.cell_config(m, alpha, seed)  # raises ConfigError if invalid

    def cell_config(self, m: int, alpha: float, seed: int) -> RunConfig:
        max_time = self.max_time
        if max_time is None:
            # generous cap past the predicted descent time; the run normally
            # stops at its milestone well before this
            max_time = predict_milestones(alpha, m, self.beta).T_d + 6.0
        return RunConfig(m=m, d=1, alpha=alpha, seed=seed,
                         step_size=self.step_size, max_time=max_time,
                         record_stride=self.record_stride, beta=self.beta,
                         plateau_eps=self.plateau_eps, integrator=self.integrator)

    def cells(self) -> list[tuple[int, float, str, int]]:
        return [(m, alpha, target, seed)
                for m in self.ms for alpha in self.alphas
                for target in self.targets for seed in self.seeds]


def cell_key(m: int, alpha: float, target: str, seed: int) -> str:
    return f"m{m}_a{alpha:g}_{target}_s{seed}"


def _run_cell(spec: SweepSpec, m: int, alpha: float, target: str, seed: int) -> dict:
    config = spec.cell_config(m, alpha, seed)
    data = make_dataset(target, n=spec.n, lo=spec.lo, hi=spec.hi, normalize=spec.normalize)
    act = tanh_activation()
    stop = None
    if spec.stop_at == "T_d":
        stop = MilestoneStop(("T_d",))
    elif spec.stop_at == "T_sp":
        stop = MilestoneStop(("T_d", "T_sp"))
    traj = run(config, data, act, stop=stop)
    report = detect_milestones(traj)

    cell_dir = Path(spec.out_dir) / "cells"
    cell_dir.mkdir(parents=True, exist_ok=True)
    key = cell_key(m, alpha, target, seed)
    write_trajectory_csv(traj, cell_dir / f"{key}.trajectory.csv")
    write_json(trajectory_summary(traj, report), cell_dir / f"{key}.summary.json")
    write_json({"schema": SCHEMA, **milestone_dict(report)},
               cell_dir / f"{key}.milestones.json")

    return {
        "m": m, "alpha": alpha, "target": target, "seed": seed, "n": spec.n,
        "T_p_emp": report.T_p_emp, "T_d_emp": report.T_d_emp, "T_sp_emp": report.T_sp_emp,
        "T_p_pred": report.T_p_pred, "T_d_pred": report.T_d_pred,
        "T_sp_pred": report.T_sp_pred,
        "loss_initial": report.loss_initial, "loss_final": float(traj.loss[-1]),
        "stop_reason": traj.stop_reason, "status": "ok",
    }


def _cell_worker(args):
    spec, m, alpha, target, seed = args
    try:
        return _run_cell(spec, m, alpha, target, seed)
    except Exception as exc:  # noqa: BLE001 - reported as a failed cell
        return {
            "m": m, "alpha": alpha, "target": target, "seed": seed, "n": spec.n,
            "T_p_emp": None, "T_d_emp": None, "T_sp_emp": None,
            "T_p_pred": None, "T_d_pred": None, "T_sp_pred": None,
            "loss_initial": None, "loss_final": None, "stop_reason": "error",
            "status": f"failed: {type(exc).__name__}: {exc}",
            "_traceback": traceback.format_exc(),
        }


@dataclass
class SweepResult:
    rows: list[dict]
    failures: list[dict] = field(default_factory=list)
    sweep_csv: Path | None = None
    cells_csv: Path | None = None


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return _fmt(value)
    return str(value)


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Execute every cell, write per-cell artifacts plus aggregate CSVs."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = spec.cells()
    workers = spec.workers or min(len(cells), os.cpu_count() or 1)
    args = [(spec, m, alpha, target, seed) for (m, alpha, target, seed) in cells]
    if workers <= 1:
        rows = [_cell_worker(a) for a in args]
    else:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            rows = list(pool.map(_cell_worker, args))

    rows.sort(key=lambda r: (r["m"], r["alpha"], r["target"], r["seed"]))
    failures = [r for r in rows if r["status"] != "ok"]

    sweep_csv = out / "sweep.csv"
    with open(sweep_csv, "w") as fh:
        fh.write(f"# schema={SCHEMA}\n")
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(_csv_cell(r[c]) for c in SWEEP_COLUMNS) + "\n")

    cells_csv = out / "sweep_cells.csv"
    with open(cells_csv, "w") as fh:
        fh.write(f"# schema={SCHEMA}\n")
        fh.write(",".join(CELL_COLUMNS) + "\n")
        for (m, alpha, target), group in _group_cells(rows):
            entries = [m, alpha, target, len(group)]
            for name in ("T_p_emp", "T_d_emp", "T_sp_emp"):
                vals = [r[name] for r in group if r[name] is not None]
                if vals:
                    entries += [float(np.mean(vals)), min(vals), max(vals)]
                else:
                    entries += [None, None, None]
            fh.write(",".join(_csv_cell(v) for v in entries) + "\n")

    return SweepResult(rows=rows, failures=failures, sweep_csv=sweep_csv, cells_csv=cells_csv)


def _group_cells(rows):
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["m"], r["alpha"], r["target"]), []).append(r)
    return sorted(groups.items())


def load_sweep_csv(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# schema={SCHEMA}":
            raise ValueError(f"{path}: expected '# schema={SCHEMA}' header")
        names = fh.readline().strip().split(",")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            row = dict(zip(names, parts))
            for key in ("m", "seed", "n"):
                row[key] = int(row[key])
            row["alpha"] = float(row["alpha"])
            for key in ("T_p_emp", "T_d_emp", "T_sp_emp", "T_p_pred", "T_d_pred",
                        "T_sp_pred", "loss_initial", "loss_final"):
                row[key] = float(row[key]) if row[key] != "" else None
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Descent-time regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """OLS fit of descent time against a covariate within one factor group."""

    covariate: str  # "log_m" or "alpha"
    group: str
    slope: float
    intercept: float
    r2: float
    n_points: int
    residuals: tuple[float, ...]
    pooled: bool = False

    def to_dict(self) -> dict:
        return {
            "covariate": self.covariate, "group": self.group,
            "slope": self.slope, "intercept": self.intercept, "r2": self.r2,
            "n_points": self.n_points, "residuals": list(self.residuals),
            "pooled": self.pooled,
        }


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, np.ndarray]:
    xm, ym = x.mean(), y.mean()
    var = float(np.sum((x - xm) ** 2))
    if var == 0.0:
        raise ValueError("rank-deficient design: covariate has no variation")
    slope = float(np.sum((x - xm) * (y - ym)) / var)
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return slope, float(intercept), r2, resid


def fit_descent_time(rows: list[dict], covariate: str) -> list[FitResult]:
    """Per-group OLS of T_d_emp on log m or alpha.

    Groups hold the other factors fixed; within a group the seeds of each
    cell are averaged first (per-cell means), and a pooled per-seed fit is
    emitted alongside.  Requires >= 3 distinct covariate values per group.
    """
    if covariate not in ("log_m", "alpha"):
        raise ValueError("covariate must be 'log_m' or 'alpha'")
    ok = [r for r in rows if r["status"] == "ok" and r["T_d_emp"] is not None]
    if not ok:
        raise ValueError("no successful rows with a detected T_d")

    def group_of(r):
        if covariate == "log_m":
            return f"alpha={r['alpha']:g},target={r['target']}"
        return f"m={r['m']},target={r['target']}"

    def x_of(r):
        return math.log(r["m"]) if covariate == "log_m" else r["alpha"]

    results = []
    groups: dict[str, list[dict]] = {}
    for r in ok:
        groups.setdefault(group_of(r), []).append(r)
    for name, members in sorted(groups.items()):
        cells: dict[float, list[float]] = {}
        for r in members:
            cells.setdefault(x_of(r), []).append(r["T_d_emp"])
        if len(cells) < 3:
            raise ValueError(f"group {name}: need >= 3 distinct covariate values, "
                             f"got {len(cells)}")
        xs = np.array(sorted(cells))
        ys = np.array([np.mean(cells[x]) for x in xs])
        slope, intercept, r2, resid = _ols(xs, ys)
        results.append(FitResult(covariate=covariate, group=name, slope=slope,
                                 intercept=intercept, r2=r2, n_points=len(xs),
                                 residuals=tuple(float(v) for v in resid)))
        xs_pooled = np.array([x_of(r) for r in members])
        ys_pooled = np.array([r["T_d_emp"] for r in members])
        slope_p, intercept_p, r2_p, resid_p = _ols(xs_pooled, ys_pooled)
        results.append(FitResult(covariate=covariate, group=name, slope=slope_p,
                                 intercept=intercept_p, r2=r2_p,
                                 n_points=len(members),
                                 residuals=tuple(float(v) for v in resid_p),
                                 pooled=True))
    return results
