"""Macroscopic quantities, distribution metrics, milestone prediction/detection.

The loss curve of a small-initialization run passes through three stages:
an initial plateau (linear warm-up), an initial descent (logistic growth of
the order parameter K toward 1), and a secondary plateau near the resulting
approximate critical point.  This module computes the scalar diagnostics
tracked along a trajectory, the theory-side milestone predictions from
(alpha, m, beta) alone, and the empirical milestone detectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import TYPE_CHECKING

import numpy as np

from .activations import Activation
from .datasets import Dataset
from .model import NetworkState, evaluate

if TYPE_CHECKING:  # pragma: no cover
    from .dynamics import Trajectory


# ---------------------------------------------------------------------------
# State-level quantities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MacroQuantities:
    """K = sum a_k w_k^1, K' = sum (a_k^2 + (w_k^1)^2), and norm telemetry."""

    K: float
    Kprime: float
    q_max: float
    norm_a: float
    norm_W: float
    dir_sums: np.ndarray  # (d,), entry i is sum_k (w_k^i)^2


def macro_quantities(state: NetworkState) -> MacroQuantities:
    a, W = state.a, state.W
    w1 = W[:, 0]
    return MacroQuantities(
        K=float(a @ w1),
        Kprime=float(a @ a + w1 @ w1),
        q_max=float(max(np.abs(a).max(), np.abs(W).max())),
        norm_a=float(np.linalg.norm(a)),
        norm_W=float(np.linalg.norm(W)),
        dir_sums=np.einsum("kd,kd->d", W, W),
    )


def q_max(state: NetworkState) -> float:
    """Neuron-wise L-infinity norm: the largest single parameter magnitude."""
    return float(max(np.abs(state.a).max(), np.abs(state.W).max()))


@dataclass(frozen=True)
class AmplitudeDistributions:
    """Sorted atoms of the outer-amplitude and inner-row-norm empirical measures."""

    outer: np.ndarray  # sorted |a_k|
    inner: np.ndarray  # sorted ||w_k||_2


def amplitude_distributions(state: NetworkState) -> AmplitudeDistributions:
    return AmplitudeDistributions(
        outer=np.sort(np.abs(state.a)),
        inner=np.sort(np.linalg.norm(state.W, axis=1)),
    )


def wasserstein_1d(A: np.ndarray, B: np.ndarray) -> float:
    """Quadratic Wasserstein distance between two equal-size empirical measures.

    For equal atom counts the optimal coupling is the monotone rearrangement,
    so the distance is the root-mean-square gap of the sorted samples.
    """
    A = np.asarray(A, dtype=float).ravel()
    B = np.asarray(B, dtype=float).ravel()
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"empirical measures must have equal atom counts "
                         f"({A.shape[0]} vs {B.shape[0]})")
    diff = np.sort(A) - np.sort(B)
    return math.sqrt(float(diff @ diff) / A.shape[0])


def relative_w2(state: NetworkState) -> float:
    """W2 between |a_k| and ||w_k|| atoms, over the RMS of the |a_k| atoms."""
    dist = amplitude_distributions(state)
    denom = math.sqrt(float(state.a @ state.a) / state.m)
    if denom == 0.0:
        raise ValueError("relative_w2 undefined for a = 0")
    return wasserstein_1d(dist.outer, dist.inner) / denom


def condensation_ratio(state: NetworkState) -> float:
    """sum ||w_k||^2 over sum (w_k^1)^2; equals 1 when all inner weight
    mass lies along the first coordinate direction."""
    w1 = state.W[:, 0]
    denom = float(w1 @ w1)
    if denom == 0.0:
        raise ValueError("condensation_ratio undefined: first-direction mass is zero")
    return float(np.sum(state.W * state.W)) / denom


def critical_point_ratio(state: NetworkState, data: Dataset, act: Activation) -> float:
    """|grad R|_inf over |theta|_inf; small values mean a relative critical point."""
    theta_inf = q_max(state)
    if theta_inf == 0.0:
        raise ValueError("critical_point_ratio undefined for theta = 0")
    ev = evaluate(state, data, act)
    grad_inf = max(np.abs(ev.grad_a).max(), np.abs(ev.grad_W).max())
    return float(grad_inf) / theta_inf


@dataclass(frozen=True)
class DepartureDiagnostic:
    """Data moments and layer asymmetry that govern the secondary-plateau exit.

    c4 and b3 are the fourth input moment and the third target moment; the
    layer_rate_ratio is d(sum a_k^2)/dt over d(sum w_k^2)/dt from the exact
    gradient.  On the secondary plateau the ratio leaving 1 signals that the
    two layers have stopped playing symmetric roles.
    """

    c4: float
    b3: float
    layer_rate_ratio: float


def departure_diagnostic(state: NetworkState, data: Dataset, act: Activation,
                         ) -> DepartureDiagnostic:
    if data.d != 1 or state.d != 1:
        raise ValueError("departure_diagnostic is defined for d = 1 only")
    x = data.points[:, 0]
    c4 = float(np.sum(data.weights * x ** 4))
    b3 = float(np.sum(data.weights * data.targets * x ** 3))
    ev = evaluate(state, data, act)
    da2 = -2.0 * float(state.a @ ev.grad_a)
    dw2 = -2.0 * float(state.W[:, 0] @ ev.grad_W[:, 0])
    ratio = math.inf if dw2 == 0.0 else da2 / dw2
    return DepartureDiagnostic(c4=c4, b3=b3, layer_rate_ratio=ratio)


# ---------------------------------------------------------------------------
# Trajectory-level quantities
# ---------------------------------------------------------------------------

def conservation_residual(traj: "Trajectory", window: tuple[float, float],
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Normalized residual |4 K dK/dt - K' dK'/dt| / K'^2 on a time window.

    Derivatives are centered finite differences on the recorded grid; the
    residual is reported at the window's interior records.  Along the exact
    reduced dynamics 4K dK/dt = K' dK'/dt, so the residual measures how far
    the run is from the two-macroscopic-variable conservation law.
    """
    lo, hi = window
    idx = np.where((traj.t >= lo - 1e-12) & (traj.t <= hi + 1e-12))[0]
    if idx.size < 3:
        raise ValueError("window must contain at least 3 records")
    t = traj.t[idx]
    K = traj.K[idx]
    Kp = traj.Kprime[idx]
    h = t[1] - t[0]
    dK = (K[2:] - K[:-2]) / (2.0 * h)
    dKp = (Kp[2:] - Kp[:-2]) / (2.0 * h)
    resid = np.abs(4.0 * K[1:-1] * dK - Kp[1:-1] * dKp) / Kp[1:-1] ** 2
    return t[1:-1], resid


# ---------------------------------------------------------------------------
# Milestone prediction (theory side)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MilestonePrediction:
    T_p: float
    T_d: float
    T_sp: float
    alpha1: float
    gamma1: float


def predict_milestones(alpha: float, m: int, beta: float) -> MilestonePrediction:
    """Stage milestones from (alpha, m, beta) alone, natural logarithm.

    For 1/2 < alpha <= 3/2: alpha1 = alpha/2 + 1/4, gamma1 = 3*alpha/2 - 1/4,
    T_p = (2*alpha - 1)/4 * log m; for alpha > 3/2: alpha1 = 1, gamma1 = 2,
    T_p = (alpha - 1) * log m.  T_d = (2*alpha - 1)/2 * log m and
    T_sp = T_d + (1/40) * (1/beta) * log m.
    """
    if not alpha > 0.5:
        raise ValueError("alpha must exceed 1/2")
    if m < 2:
        raise ValueError("m must be at least 2")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    lnm = math.log(m)
    if alpha <= 1.5:
        alpha1 = 0.5 * alpha + 0.25
        gamma1 = 1.5 * alpha - 0.25
        T_p = (2.0 * alpha - 1.0) / 4.0 * lnm
    else:
        alpha1 = 1.0
        gamma1 = 2.0
        T_p = (alpha - 1.0) * lnm
    T_d = (2.0 * alpha - 1.0) / 2.0 * lnm
    T_sp = T_d + (1.0 / 40.0) * (1.0 / beta) * lnm
    return MilestonePrediction(T_p=T_p, T_d=T_d, T_sp=T_sp, alpha1=alpha1, gamma1=gamma1)


# ---------------------------------------------------------------------------
# Milestone detection (empirical side)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MilestoneReport:
    """Empirical stage milestones with detector metadata and stage rates.

    Detectors (evaluated on recorded samples):
      T_d: first record with K >= 1 - beta.
      T_p: last record at or before T_d whose cumulative loss drop from t=0
           is at most plateau_eps * (R(0) - R(T_d)).
      T_sp: first record after T_d with R < (1 - plateau_eps) * R(T_d).
    Any milestone is None if its condition never fires.

    Stage rates: `rate_*` is the centered-difference |dR/dt| at the record
    closest to the stage's temporal midpoint, which characterizes the stage
    away from its endpoints; mean_rate_* (secant slope of R) and log_rate_*
    (secant slope of ln R) are reported alongside.  The headline ratios are
    midpoint-rate ratios.
    """

    T_p_emp: float | None
    T_d_emp: float | None
    T_sp_emp: float | None
    T_p_pred: float
    T_d_pred: float
    T_sp_pred: float
    alpha1: float
    gamma1: float
    beta: float
    plateau_eps: float
    idx_p: int | None
    idx_d: int | None
    idx_sp: int | None
    loss_initial: float
    loss_at_p: float | None
    loss_at_d: float | None
    loss_at_sp: float | None
    rate_plateau: float | None
    rate_descent: float | None
    rate_secondary: float | None
    rate_ratio_descent_plateau: float | None
    rate_ratio_secondary_descent: float | None
    mean_rate_plateau: float | None
    mean_rate_descent: float | None
    mean_rate_secondary: float | None
    log_rate_plateau: float | None
    log_rate_descent: float | None
    log_rate_secondary: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _midpoint_rate(t: np.ndarray, loss: np.ndarray, i0: int, i1: int) -> float | None:
    """Centered |dR/dt| at the record nearest the midpoint of [t[i0], t[i1]]."""
    if i1 - i0 < 2:
        if i1 <= i0:
            return None
        return abs(loss[i1] - loss[i0]) / (t[i1] - t[i0])
    mid = int(np.argmin(np.abs(t[i0:i1 + 1] - 0.5 * (t[i0] + t[i1])))) + i0
    mid = min(max(mid, i0 + 1), i1 - 1)
    return abs(loss[mid + 1] - loss[mid - 1]) / (t[mid + 1] - t[mid - 1])


def _mean_rate(t, loss, i0, i1):
    if i1 <= i0:
        return None
    return abs(loss[i1] - loss[i0]) / (t[i1] - t[i0])


def _log_rate(t, loss, i0, i1):
    if i1 <= i0 or loss[i0] <= 0.0 or loss[i1] <= 0.0:
        return None
    return abs(math.log(loss[i1]) - math.log(loss[i0])) / (t[i1] - t[i0])


def _ratio(num, den):
    if num is None or den is None or den == 0.0:
        return None
    return num / den


def detect_milestones(traj: "Trajectory", beta: float | None = None,
                      plateau_eps: float | None = None) -> MilestoneReport:
    """Locate the stage milestones on a recorded trajectory.

    beta and plateau_eps default to the trajectory's run configuration.
    Requires at least 10 records and a strictly increasing time axis.
    """
    cfg = traj.config
    beta = cfg.beta if beta is None else beta
    plateau_eps = cfg.plateau_eps if plateau_eps is None else plateau_eps
    t, loss, K = traj.t, traj.loss, traj.K
    if t.shape[0] < 10:
        raise ValueError(f"need at least 10 records to detect milestones, got {t.shape[0]}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("trajectory time axis must be strictly increasing")

    pred = predict_milestones(cfg.alpha, cfg.m, beta)

    idx_d = idx_p = idx_sp = None
    hits = np.nonzero(K >= 1.0 - beta)[0]
    if hits.size:
        idx_d = int(hits[0])
        total_drop = loss[0] - loss[idx_d]
        below = np.nonzero(loss[0] - loss[: idx_d + 1] <= plateau_eps * total_drop)[0]
        if below.size:
            idx_p = int(below[-1])
        after = np.nonzero(loss[idx_d + 1:] < (1.0 - plateau_eps) * loss[idx_d])[0]
        if after.size:
            idx_sp = idx_d + 1 + int(after[0])

    rate_p = _midpoint_rate(t, loss, 0, idx_p) if idx_p is not None else None
    rate_d = _midpoint_rate(t, loss, idx_p, idx_d) if idx_p is not None and idx_d is not None else None
    rate_s = _midpoint_rate(t, loss, idx_d, idx_sp) if idx_d is not None and idx_sp is not None else None

    return MilestoneReport(
        T_p_emp=float(t[idx_p]) if idx_p is not None else None,
        T_d_emp=float(t[idx_d]) if idx_d is not None else None,
        T_sp_emp=float(t[idx_sp]) if idx_sp is not None else None,
        T_p_pred=pred.T_p, T_d_pred=pred.T_d, T_sp_pred=pred.T_sp,
        alpha1=pred.alpha1, gamma1=pred.gamma1,
        beta=beta, plateau_eps=plateau_eps,
        idx_p=idx_p, idx_d=idx_d, idx_sp=idx_sp,
        loss_initial=float(loss[0]),
        loss_at_p=float(loss[idx_p]) if idx_p is not None else None,
        loss_at_d=float(loss[idx_d]) if idx_d is not None else None,
        loss_at_sp=float(loss[idx_sp]) if idx_sp is not None else None,
        rate_plateau=rate_p, rate_descent=rate_d, rate_secondary=rate_s,
        rate_ratio_descent_plateau=_ratio(rate_d, rate_p),
        rate_ratio_secondary_descent=_ratio(rate_s, rate_d),
        mean_rate_plateau=_mean_rate(t, loss, 0, idx_p) if idx_p is not None else None,
        mean_rate_descent=_mean_rate(t, loss, idx_p, idx_d) if idx_p is not None and idx_d is not None else None,
        mean_rate_secondary=_mean_rate(t, loss, idx_d, idx_sp) if idx_d is not None and idx_sp is not None else None,
        log_rate_plateau=_log_rate(t, loss, 0, idx_p) if idx_p is not None else None,
        log_rate_descent=_log_rate(t, loss, idx_p, idx_d) if idx_p is not None and idx_d is not None else None,
        log_rate_secondary=_log_rate(t, loss, idx_d, idx_sp) if idx_d is not None and idx_sp is not None else None,
    )
