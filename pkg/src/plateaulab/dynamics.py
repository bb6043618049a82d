"""Gradient-flow integration, update decomposition, and reference solutions.

The full dynamics is d(theta)/dt = -grad R(theta), integrated by explicit
Euler (the default, matching gradient descent with the step size as learning
rate) or classical RK4.  The update decomposes into the leading linear terms
of the condensation analysis plus higher-order residuals; the residuals are
computed as the exact remainder (full gradient minus leading terms), which
is identical to the Taylor-remainder form and exactly partitions the update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .activations import Activation
from .datasets import Dataset
from .diagnostics import macro_quantities, relative_w2
from .model import NetworkState, RunConfig, RiskEval, evaluate, init_params


class DivergenceError(RuntimeError):
    """Simulation left the regime of interest; carries the offending time."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t = {t:.6f})")
        self.t = t


DIVERGENCE_QMAX = 1e3
# Recorded risk may not increase beyond this relative slack.
MONOTONE_SLACK = 1e-9


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------

def _apply(state: NetworkState, da: np.ndarray, dW: np.ndarray, dt: float) -> NetworkState:
    try:
        return NetworkState(a=state.a + da, W=state.W + dW, t=state.t + dt)
    except ValueError as exc:
        raise DivergenceError(f"non-finite state after step: {exc}", state.t + dt) from None


def step(state: NetworkState, data: Dataset, act: Activation, step_size: float,
         integrator: str = "euler") -> NetworkState:
    """One integration step of d(theta)/dt = -grad R(theta)."""
    if step_size <= 0.0:
        raise ValueError("step_size must be positive")
    if integrator == "euler":
        ev = evaluate(state, data, act)
        return _apply(state, -step_size * ev.grad_a, -step_size * ev.grad_W, step_size)
    if integrator == "rk4":
        return _rk4_step(state, data, act, step_size, evaluate(state, data, act))
    raise ValueError(f"unknown integrator {integrator!r}")


def _rk4_step(state: NetworkState, data: Dataset, act: Activation, h: float,
              ev1: RiskEval) -> NetworkState:
    def grad_at(da, dW):
        probe = NetworkState(a=state.a + da, W=state.W + dW, t=state.t)
        return evaluate(probe, data, act)

    k1a, k1W = -ev1.grad_a, -ev1.grad_W
    ev2 = grad_at(0.5 * h * k1a, 0.5 * h * k1W)
    k2a, k2W = -ev2.grad_a, -ev2.grad_W
    ev3 = grad_at(0.5 * h * k2a, 0.5 * h * k2W)
    k3a, k3W = -ev3.grad_a, -ev3.grad_W
    ev4 = grad_at(h * k3a, h * k3W)
    k4a, k4W = -ev4.grad_a, -ev4.grad_W
    da = (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    dW = (h / 6.0) * (k1W + 2.0 * k2W + 2.0 * k3W + k4W)
    return _apply(state, da, dW, h)


# ---------------------------------------------------------------------------
# Trajectory recording
# ---------------------------------------------------------------------------

TRAJECTORY_SCALAR_COLUMNS = (
    "t", "loss", "K", "Kprime", "q_max", "norm_a", "norm_W",
)
TRAJECTORY_TAIL_COLUMNS = (
    "w2_rel", "condensation_ratio", "grad_inf_norm", "theta_inf_norm",
)


@dataclass(frozen=True)
class Trajectory:
    """Columnar telemetry of one run, recorded every record_stride steps.

    dir_sums[r, i] is sum_k (w_k^i)^2 at record r.  terminal_state is the
    parameter state at the moment the run stopped.
    """

    config: RunConfig
    t: np.ndarray
    loss: np.ndarray
    K: np.ndarray
    Kprime: np.ndarray
    q_max: np.ndarray
    norm_a: np.ndarray
    norm_W: np.ndarray
    dir_sums: np.ndarray
    w2_rel: np.ndarray
    condensation_ratio: np.ndarray
    grad_inf_norm: np.ndarray
    theta_inf_norm: np.ndarray
    terminal_state: NetworkState
    stop_reason: str

    @property
    def n_records(self) -> int:
        return self.t.shape[0]

    @property
    def record_interval(self) -> float:
        return self.config.record_stride * self.config.step_size


# Stop conditions beyond the always-active max_time cap.

@dataclass(frozen=True)
class LossBelow:
    threshold: float


@dataclass(frozen=True)
class MilestoneStop:
    """Stop once the requested milestones are detectable on the record stream.

    'T_d' waits for the descent crossing K >= 1 - beta; 'T_sp' additionally
    waits for the secondary-plateau exit. T_p needs no waiting beyond T_d.
    """

    milestones: tuple[str, ...] = ("T_d",)

    def __post_init__(self):
        bad = set(self.milestones) - {"T_p", "T_d", "T_sp"}
        if bad:
            raise ValueError(f"unknown milestones {sorted(bad)}")


def run(config: RunConfig, data: Dataset, act: Activation,
        stop: LossBelow | MilestoneStop | None = None,
        initial_state: NetworkState | None = None) -> Trajectory:
    """Integrate from the seeded initialization, recording telemetry.

    Stops at config.max_time, or earlier when `stop` is satisfied at a
    record.  Aborts with DivergenceError if q_max exceeds 1e3, parameters
    go non-finite, or the recorded risk increases (the flow must descend).
    """
    if data.d != config.d:
        raise ValueError(f"dataset dimension {data.d} does not match config.d = {config.d}")
    state = init_params(config) if initial_state is None else initial_state
    h = config.step_size
    cols: dict[str, list] = {name: [] for name in
                             TRAJECTORY_SCALAR_COLUMNS + TRAJECTORY_TAIL_COLUMNS}
    dir_rows: list[np.ndarray] = []

    want_td = want_tsp = False
    if isinstance(stop, MilestoneStop):
        want_td = True
        want_tsp = "T_sp" in stop.milestones
    loss_at_td: float | None = None

    stop_reason = "max_time"
    step_idx = 0
    prev_loss = math.inf
    while True:
        ev = evaluate(state, data, act)
        if not math.isfinite(ev.loss):
            raise DivergenceError("risk is non-finite", state.t)
        if step_idx % config.record_stride == 0:
            mq = macro_quantities(state)
            if mq.q_max > DIVERGENCE_QMAX:
                raise DivergenceError(
                    f"q_max = {mq.q_max:.3e} exceeded divergence guard {DIVERGENCE_QMAX:.0e}",
                    state.t)
            if ev.loss > prev_loss * (1.0 + MONOTONE_SLACK):
                raise DivergenceError(
                    f"recorded risk increased ({prev_loss:.6e} -> {ev.loss:.6e}); "
                    f"step size too large for descent", state.t)
            prev_loss = ev.loss
            cols["t"].append(state.t)
            cols["loss"].append(ev.loss)
            cols["K"].append(mq.K)
            cols["Kprime"].append(mq.Kprime)
            cols["q_max"].append(mq.q_max)
            cols["norm_a"].append(mq.norm_a)
            cols["norm_W"].append(mq.norm_W)
            dir_rows.append(mq.dir_sums)
            cols["w2_rel"].append(relative_w2(state) if mq.norm_a > 0.0 else math.nan)
            dir1 = mq.dir_sums[0]
            cols["condensation_ratio"].append(
                mq.norm_W ** 2 / dir1 if dir1 > 0.0 else math.nan)
            cols["grad_inf_norm"].append(
                float(max(np.abs(ev.grad_a).max(), np.abs(ev.grad_W).max())))
            cols["theta_inf_norm"].append(mq.q_max)

            if isinstance(stop, LossBelow) and ev.loss <= stop.threshold:
                stop_reason = "loss_below"
                break
            if want_td and loss_at_td is None and mq.K >= 1.0 - config.beta:
                loss_at_td = ev.loss
                if not want_tsp:
                    stop_reason = "milestones"
                    break
            if (want_tsp and loss_at_td is not None
                    and ev.loss < (1.0 - config.plateau_eps) * loss_at_td):
                stop_reason = "milestones"
                break
        if state.t >= config.max_time - 1e-12:
            break
        if config.integrator == "euler":
            state = _apply(state, -h * ev.grad_a, -h * ev.grad_W, h)
        else:
            state = _rk4_step(state, data, act, h, ev)
        step_idx += 1

    return Trajectory(
        config=config,
        t=np.array(cols["t"]),
        loss=np.array(cols["loss"]),
        K=np.array(cols["K"]),
        Kprime=np.array(cols["Kprime"]),
        q_max=np.array(cols["q_max"]),
        norm_a=np.array(cols["norm_a"]),
        norm_W=np.array(cols["norm_W"]),
        dir_sums=np.vstack(dir_rows),
        w2_rel=np.array(cols["w2_rel"]),
        condensation_ratio=np.array(cols["condensation_ratio"]),
        grad_inf_norm=np.array(cols["grad_inf_norm"]),
        theta_inf_norm=np.array(cols["theta_inf_norm"]),
        terminal_state=state,
        stop_reason=stop_reason,
    )


# ---------------------------------------------------------------------------
# Update decomposition: leading linear terms + exact higher-order remainder
# ---------------------------------------------------------------------------

NORMALIZED_DATA_TOL = 1e-8


@dataclass(frozen=True)
class UpdateDecomposition:
    """Partition of the update d(theta)/dt = -grad R into leading + residual.

    leading_a[k] = w_k^1 - sum_i (sum_l a_l w_l^i) w_k^i
    leading_W[k, 0] = (1 - K) a_k, leading_W[k, i] = -(sum_l a_l w_l^i) a_k
    residual = (-gradient) - leading, exactly.
    """

    leading_a: np.ndarray
    leading_W: np.ndarray
    residual_a: np.ndarray
    residual_W: np.ndarray


def decompose_update(state: NetworkState, data: Dataset, act: Activation,
                     ) -> UpdateDecomposition:
    """Split the exact update into leading linear terms and the remainder.

    The leading-term form assumes unit moments, so datasets must satisfy
    them to within NORMALIZED_DATA_TOL (run normalize_dataset first).
    """
    rep = data.moments
    if rep.second_moment_dev > NORMALIZED_DATA_TOL or rep.leading_term_dev > NORMALIZED_DATA_TOL:
        raise ValueError(
            f"decompose_update requires a normalized dataset "
            f"(moment deviations {rep.second_moment_dev:.2e}, {rep.leading_term_dev:.2e} "
            f"exceed {NORMALIZED_DATA_TOL:.0e}); apply normalize_dataset first")
    a, W = state.a, state.W
    proj = a @ W  # (d,), entry i = sum_l a_l w_l^i
    leading_a = W[:, 0] - W @ proj
    leading_W = np.empty_like(W)
    leading_W[:, 0] = (1.0 - proj[0]) * a
    if state.d > 1:
        leading_W[:, 1:] = -np.outer(a, proj[1:])
    ev = evaluate(state, data, act)
    return UpdateDecomposition(
        leading_a=leading_a,
        leading_W=leading_W,
        residual_a=-ev.grad_a - leading_a,
        residual_W=-ev.grad_W - leading_W,
    )


# ---------------------------------------------------------------------------
# Closed-form references
# ---------------------------------------------------------------------------

def linearized_solution(state0: NetworkState, t: float) -> NetworkState:
    """Closed-form solution of the linearized warm-up dynamics from state0.

    With delta = t - state0.t:
      a~(t)   = (a0 + w0^1)/2 e^delta + (a0 - w0^1)/2 e^-delta
      w~^1(t) = (a0 + w0^1)/2 e^delta - (a0 - w0^1)/2 e^-delta
      w~^i(t) = w0^i for i >= 2.
    """
    delta = t - state0.t
    if delta < 0.0:
        raise ValueError(f"t = {t} precedes the initial state's time {state0.t}")
    grow = 0.5 * (state0.a + state0.W[:, 0]) * math.exp(delta)
    decay = 0.5 * (state0.a - state0.W[:, 0]) * math.exp(-delta)
    W = np.array(state0.W, copy=True)
    W[:, 0] = grow - decay
    return NetworkState(a=grow + decay, W=W, t=t)


def r_max(state: NetworkState, state0: NetworkState) -> float:
    """Largest per-neuron deviation of `state` from the linearized solution.

    max_k |a_k - a~_k| + |w_k^1 - w~_k^1|, with the tilde solution evolved
    from state0 to state.t.
    """
    if state.a.shape != state0.a.shape or state.W.shape != state0.W.shape:
        raise ValueError("states must have identical shapes")
    ref = linearized_solution(state0, state.t)
    dev = np.abs(state.a - ref.a) + np.abs(state.W[:, 0] - ref.W[:, 0])
    return float(dev.max())


def logistic_K(K0: float, t0: float, t: float) -> float:
    """Closed-form logistic solution of dK/dt = 2 K (1 - K) from K(t0) = K0."""
    if K0 == 1.0:
        raise ValueError("K0 = 1 is the degenerate fixed point; the logistic "
                         "form K = C e^{2 dt} / (1 + C e^{2 dt}) is undefined")
    delta = t - t0
    C = K0 / (1.0 - K0)
    if C > 0.0:
        # algebraically identical, stable for large delta
        return 1.0 / (1.0 + math.exp(-2.0 * delta) / C)
    e = math.exp(2.0 * delta)
    return C * e / (1.0 + C * e)
