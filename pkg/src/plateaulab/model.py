"""Two-layer network state, seeded initialization, risk and exact gradient.

The network is f(x) = sum_k a_k sigma(w_k . x) with m hidden units.  Both
layers are initialized i.i.d. N(0, m^(-2*alpha)); alpha > 1/2 puts training
in the small-initialization regime this lab studies.

Reproducibility: parameters are drawn from a Philox4x32-10 counter-based
generator keyed by the seed, outer weights first (m draws) then the inner
weight matrix row-major (m*d draws).  Identical seeds give bit-identical
states on any platform numpy supports.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .activations import Activation
from .datasets import Dataset

try:
    from ._kernels import eval_tanh_d1, eval_tanh_nd
    _HAVE_KERNELS = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _HAVE_KERNELS = False


class ConfigError(ValueError):
    pass


MAX_STEP_SIZE = 0.1


@dataclass(frozen=True)
class RunConfig:
    """Simulation configuration; validated on construction.

    step_size is the Euler step (equals the gradient-descent learning rate),
    record_stride the number of steps between telemetry records, beta the
    descent-milestone threshold on K, plateau_eps the relative loss-drop
    threshold used by the plateau detectors.
    """

    m: int
    d: int = 1
    alpha: float = 1.0
    seed: int = 0
    step_size: float = 1e-3
    max_time: float = 10.0
    record_stride: int = 10
    beta: float = 0.05
    plateau_eps: float = 0.05
    integrator: str = "euler"

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if not self.alpha > 0.5:
            raise ConfigError(f"alpha must exceed 1/2 (small-initialization regime), got {self.alpha}")
        if not 0.0 < self.step_size <= MAX_STEP_SIZE:
            raise ConfigError(f"step_size must be in (0, {MAX_STEP_SIZE}]")
        if self.max_time < 0.0:
            raise ConfigError("max_time must be nonnegative")
        if self.record_stride < 1:
            raise ConfigError("record_stride must be a positive integer")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError("beta must lie in (0, 1)")
        if not 0.0 < self.plateau_eps < 1.0:
            raise ConfigError("plateau_eps must lie in (0, 1)")
        if self.integrator not in ("euler", "rk4"):
            raise ConfigError(f"integrator must be 'euler' or 'rk4', got {self.integrator!r}")
        if not isinstance(self.seed, (int, np.integer)):
            raise ConfigError("seed must be an integer")


@dataclass(frozen=True)
class NetworkState:
    """Immutable parameter snapshot: outer weights a (m,), inner weights W (m, d)."""

    a: np.ndarray
    W: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        a = np.array(self.a, dtype=float, copy=True).ravel()
        W = np.atleast_2d(np.array(self.W, dtype=float, copy=True))
        if a.shape[0] != W.shape[0] or a.shape[0] < 1:
            raise ValueError(f"length(a)={a.shape[0]} must equal rows(W)={W.shape[0]} and be >= 1")
        if self.t < 0.0 or not np.isfinite(self.t):
            raise ValueError("t must be a finite nonnegative time")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(W))):
            raise ValueError("state entries must be finite")
        a.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "W", W)

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def with_time(self, t: float) -> "NetworkState":
        return replace(self, t=t)


def init_params(config: RunConfig) -> NetworkState:
    """Draw a fresh state at t=0 with scale m^(-alpha) on every parameter."""
    rng = np.random.Generator(np.random.Philox(key=config.seed))
    scale = config.m ** (-config.alpha)
    a = rng.standard_normal(config.m) * scale
    W = rng.standard_normal((config.m, config.d)) * scale
    return NetworkState(a=a, W=W, t=0.0)


class RiskEval(NamedTuple):
    loss: float
    grad_a: np.ndarray
    grad_W: np.ndarray


def _check_dims(state: NetworkState, data: Dataset) -> None:
    if state.d != data.d:
        raise ValueError(f"state dimension d={state.d} does not match dataset d={data.d}")


def evaluate(state: NetworkState, data: Dataset, act: Activation) -> RiskEval:
    """Risk and its exact gradient in one pass.

    Dispatches to the fused numba kernel for the built-in tanh (the hot
    path); any other activation goes through the reference numpy path.
    """
    _check_dims(state, data)
    if _HAVE_KERNELS and act.fused_kernel == "tanh":
        if state.d == 1:
            x = data.points[:, 0]
            loss, ga, gw = eval_tanh_d1(state.a, state.W[:, 0], x, data.weights,
                                        data.targets, float(np.abs(x).max()))
            return RiskEval(float(loss), ga, gw[:, None])
        col_max = np.abs(data.points).max(axis=0)
        loss, ga, gW = eval_tanh_nd(state.a, state.W, data.points, data.weights,
                                    data.targets, col_max)
        return RiskEval(float(loss), ga, gW)
    return _evaluate_numpy(state, data, act)


def _evaluate_numpy(state: NetworkState, data: Dataset, act: Activation) -> RiskEval:
    # Reference path; einsum keeps reductions in a fixed order.
    Z = state.W @ data.points.T  # (m, n)
    S = act.value(Z)
    pred = np.einsum("kn,k->n", S, state.a)
    resid = pred - data.targets
    rw = data.weights * resid
    loss = 0.5 * float(np.einsum("n,n->", rw, resid))
    grad_a = np.einsum("kn,n->k", S, rw)
    grad_W = state.a[:, None] * np.einsum("kn,nd->kd", act.d1(Z) * rw[None, :], data.points)
    return RiskEval(loss, grad_a, grad_W)


def forward(state: NetworkState, x: np.ndarray, act: Activation) -> float:
    """Network output sum_k a_k sigma(w_k . x) at a single input point."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != state.d:
        raise ValueError(f"input dimension {x.shape[0]} does not match d={state.d}")
    return float(state.a @ act.value(state.W @ x))


def risk(state: NetworkState, data: Dataset, act: Activation) -> float:
    """Weighted half-sum of squared residuals over the dataset."""
    return evaluate(state, data, act).loss


def gradient(state: NetworkState, data: Dataset, act: Activation) -> tuple[np.ndarray, np.ndarray]:
    """Exact analytic gradient of the risk: (dR/da, dR/dW)."""
    ev = evaluate(state, data, act)
    return ev.grad_a, ev.grad_W
