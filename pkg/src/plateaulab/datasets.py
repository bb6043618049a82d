"""Datasets: weighted sample clouds with moment diagnostics and normalization.

The risk is a weighted empirical sum over (point, target) pairs.  The
analysis behind the milestone predictions assumes unit second moments
(sum_s rho_s x_s x_s^T = I) and a unit leading target moment
(sum_s rho_s f(x_s) x_s = e_1).  Every dataset carries a report of how far
it deviates from those conditions; normalize_dataset produces an exactly
conforming dataset via whitening, rotation, and target rescaling.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

WEIGHT_SUM_TOL = 1e-12


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class MomentReport:
    """Deviation of a dataset from the symmetric-sampling and leading-term conditions.

    second_moment_dev: max_{i,j} |sum_s rho_s x_s^i x_s^j - delta_ij|
    leading_term_dev:  || sum_s rho_s f(x_s) x_s - e_1 ||_2
    """

    second_moment_dev: float
    leading_term_dev: float


@dataclass(frozen=True)
class AffineMap:
    """x -> input_map @ x together with target rescaling f -> f / target_scale."""

    input_map: np.ndarray
    target_scale: float

    def is_identity(self, tol: float = 1e-10) -> bool:
        d = self.input_map.shape[0]
        return (np.max(np.abs(self.input_map - np.eye(d))) <= tol
                and abs(self.target_scale - 1.0) <= tol)


@dataclass(frozen=True)
class Dataset:
    """Immutable weighted sample set.

    points:  (n, d) sample locations
    weights: (n,) nonnegative, summing to 1 (the empirical density)
    targets: (n,) target values f(x_s)
    transform: the affine map that produced this dataset from its source,
        if it came out of normalize_dataset.
    """

    points: np.ndarray
    weights: np.ndarray
    targets: np.ndarray
    transform: AffineMap | None = None
    moments: MomentReport = field(init=False, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        pts = np.atleast_2d(pts.T).T if pts.ndim == 1 else pts
        if pts.ndim != 2:
            raise DatasetError("points must be an (n, d) array")
        w = np.array(self.weights, dtype=float, copy=True).ravel()
        y = np.array(self.targets, dtype=float, copy=True).ravel()
        n = pts.shape[0]
        if n < 1:
            raise DatasetError("dataset needs at least one sample")
        if w.shape[0] != n or y.shape[0] != n:
            raise DatasetError(f"weights/targets length must match n={n}")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w)) and np.all(np.isfinite(y))):
            raise DatasetError("dataset entries must be finite")
        if np.any(w < 0):
            raise DatasetError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise DatasetError(f"weights must sum to 1 (got {w.sum():.15f})")
        for arr in (pts, w, y):
            arr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "moments", _moment_report(pts, w, y))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _moment_report(pts, w, y) -> MomentReport:
    d = pts.shape[1]
    second = np.einsum("s,si,sj->ij", w, pts, pts)
    dev1 = float(np.max(np.abs(second - np.eye(d))))
    lead = np.einsum("s,s,si->i", w, y, pts)
    e1 = np.zeros(d)
    e1[0] = 1.0
    dev2 = float(np.linalg.norm(lead - e1))
    return MomentReport(second_moment_dev=dev1, leading_term_dev=dev2)


@dataclass(frozen=True)
class AssumptionCheck:
    second_moment_dev: float
    leading_term_dev: float
    tol: float
    symmetric_sampling_ok: bool
    leading_term_ok: bool


def check_assumptions(data: Dataset, tol: float = 1e-8) -> AssumptionCheck:
    """Report moment deviations and pass/fail at `tol`; does not mutate data."""
    rep = data.moments
    return AssumptionCheck(
        second_moment_dev=rep.second_moment_dev,
        leading_term_dev=rep.leading_term_dev,
        tol=tol,
        symmetric_sampling_ok=rep.second_moment_dev <= tol,
        leading_term_ok=rep.leading_term_dev <= tol,
    )


def normalize_dataset(data: Dataset) -> Dataset:
    """Return a dataset satisfying the moment conditions exactly.

    Inputs are whitened against the second-moment matrix, rotated so the
    leading target moment points along e_1, and targets rescaled so that
    moment equals e_1.  Raises DatasetError on a singular second-moment
    matrix or a vanishing leading term.  Idempotent up to roundoff.
    """
    pts, w, y = data.points, data.weights, data.targets
    d = data.d
    second = np.einsum("s,si,sj->ij", w, pts, pts)
    try:
        chol = np.linalg.cholesky(second)
    except np.linalg.LinAlgError:
        raise DatasetError("singular second-moment matrix; cannot whiten") from None
    # x1 = L^{-1} x  =>  E[x1 x1^T] = I
    white = np.linalg.solve(chol, pts.T).T
    lead = np.einsum("s,s,si->i", w, y, white)
    scale = float(np.linalg.norm(lead))
    if scale <= 1e-12:
        raise DatasetError("vanishing leading term; no condensation direction")
    # Householder reflection sending lead/|lead| to e1 (identity if aligned).
    unit = lead / scale
    e1 = np.zeros(d)
    e1[0] = 1.0
    u = unit - e1
    un = np.linalg.norm(u)
    if un < 1e-14:
        rot = np.eye(d)
    else:
        u = u / un
        rot = np.eye(d) - 2.0 * np.outer(u, u)
    mapped = white @ rot.T
    amap = AffineMap(input_map=rot @ np.linalg.inv(chol), target_scale=scale)
    return Dataset(points=mapped, weights=w.copy(), targets=y / scale, transform=amap)


# ---------------------------------------------------------------------------
# Built-in generators
# ---------------------------------------------------------------------------

def _f1(x):
    return np.tanh(x + 7.5) + np.tanh(x) + np.tanh(x - 7.5)


def _f2(x):
    return np.tanh(x)


def _f3(x):
    return np.sin(x)


TARGET_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "f1": _f1,
    "f2": _f2,
    "f3": _f3,
}


def make_dataset(target_id: str, n: int = 1000,
                 lo: float = -15.0, hi: float = 15.0,
                 normalize: bool = False) -> Dataset:
    """Equidistant 1-D grid with uniform weights and a built-in target.

    Targets: f1 = tanh(x+7.5)+tanh(x)+tanh(x-7.5), f2 = tanh(x), f3 = sin(x).
    """
    if target_id not in TARGET_FUNCTIONS:
        raise DatasetError(f"unknown target id {target_id!r}; expected one of "
                           f"{sorted(TARGET_FUNCTIONS)}")
    if n < 2:
        raise DatasetError("need n >= 2 grid points")
    if not lo < hi:
        raise DatasetError("need lo < hi")
    x = np.linspace(lo, hi, n)
    data = Dataset(points=x[:, None], weights=np.full(n, 1.0 / n),
                   targets=TARGET_FUNCTIONS[target_id](x))
    return normalize_dataset(data) if normalize else data


def pad_dataset(data: Dataset, extra_dims: int, seed: int = 0) -> Dataset:
    """Append `extra_dims` seeded standard-normal coordinates to every point.

    The padded directions carry no target signal; after normalize_dataset
    they become exactly unit-variance, zero-moment directions, which is the
    setting for the condensation diagnostics with d > 1.
    """
    if extra_dims < 1:
        raise DatasetError("extra_dims must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    pad = rng.standard_normal((data.n, extra_dims))
    return Dataset(points=np.hstack([data.points, pad]),
                   weights=data.weights.copy(), targets=data.targets.copy())


# ---------------------------------------------------------------------------
# CSV interface: columns x_1..x_d, weight, target
# ---------------------------------------------------------------------------

def save_dataset_csv(data: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{i + 1}" for i in range(data.d)] + ["weight", "target"])
        for s in range(data.n):
            row = [f"{v:.17g}" for v in data.points[s]]
            row.append(f"{data.weights[s]:.17g}")
            row.append(f"{data.targets[s]:.17g}")
            writer.writerow(row)


def load_dataset_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise DatasetError(f"{path}: empty dataset file")
    header = rows[0]
    try:
        wi = header.index("weight")
        ti = header.index("target")
    except ValueError:
        raise DatasetError(f"{path}: header must contain x_1..x_d, weight, target") from None
    xcols = [i for i, name in enumerate(header) if name.startswith("x_")]
    if not xcols:
        raise DatasetError(f"{path}: no x_* columns found")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    return Dataset(points=body[:, xcols], weights=body[:, wi], targets=body[:, ti])
