"""Activation functions with the calibration the dynamics relies on.

Admissible activations are odd-like at the origin: sigma(0) = 0,
sigma'(0) = 1, sigma''(0) = 0, with a global bound on |sigma'''|.
These properties are what make the first-order dynamics linear in the
condensation direction, so they are validated at construction time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_ORIGIN_TOL = 1e-8
# one step per derivative order: higher differences need larger steps to
# keep float cancellation below truncation error
_FD_STEP_D1 = 1e-5
_FD_STEP_D2 = 1e-3
_FD_STEP_D3 = 2e-3


class ActivationError(ValueError):
    """Activation fails the origin calibration or the third-derivative bound."""


@dataclass(frozen=True)
class Activation:
    """Scalar activation with derivative evaluators (all numpy-vectorized).

    lipschitz_third bounds |sigma'''| globally (tanh: 2, identity: 0;
    estimated on a grid for user-supplied functions).
    """

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    d3: Callable[[np.ndarray], np.ndarray]
    lipschitz_third: float
    fused_kernel: str | None = field(default=None, compare=False)

    def __post_init__(self):
        z0 = np.float64(0.0)
        v0 = float(self.value(z0))
        d10 = float(self.d1(z0))
        d20 = float(self.d2(z0))
        if abs(v0) > _ORIGIN_TOL:
            raise ActivationError(f"{self.name}: sigma(0) = {v0:.3e}, expected 0")
        if abs(d10 - 1.0) > _ORIGIN_TOL:
            raise ActivationError(f"{self.name}: sigma'(0) = {d10:.6f}, expected 1")
        if abs(d20) > _ORIGIN_TOL:
            raise ActivationError(f"{self.name}: sigma''(0) = {d20:.3e}, expected 0")
        if not self.lipschitz_third >= 0.0:
            raise ActivationError(f"{self.name}: lipschitz_third must be nonnegative")

    def third_derivative_bound_holds(self, lo: float, hi: float, n: int = 2001,
                                     slack: float = 1e-9) -> bool:
        """Check |sigma'''| <= lipschitz_third on a grid spanning the data range."""
        grid = np.linspace(lo, hi, n)
        return bool(np.max(np.abs(self.d3(grid))) <= self.lipschitz_third + slack)


def _tanh_d1(z):
    t = np.tanh(z)
    return 1.0 - t * t


def _tanh_d2(z):
    t = np.tanh(z)
    return -2.0 * t * (1.0 - t * t)


def _tanh_d3(z):
    t2 = np.tanh(z) ** 2
    return -2.0 * (1.0 - t2) * (1.0 - 3.0 * t2)


def tanh_activation() -> Activation:
    """Built-in tanh; |sigma'''| attains its maximum 2 at the origin."""
    return Activation(
        name="tanh",
        value=np.tanh,
        d1=_tanh_d1,
        d2=_tanh_d2,
        d3=_tanh_d3,
        lipschitz_third=2.0,
        fused_kernel="tanh",
    )


def identity_activation() -> Activation:
    """Linear activation; degenerate (no higher-order terms) but admissible."""
    return Activation(
        name="identity",
        value=lambda z: np.asarray(z, dtype=float) + 0.0,
        d1=lambda z: np.ones_like(np.asarray(z, dtype=float)),
        d2=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
        d3=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
        lipschitz_third=0.0,
    )


def activation_from_callable(fn: Callable[[np.ndarray], np.ndarray], name: str = "custom",
                             lipschitz_third: float | None = None,
                             grid: tuple[float, float, int] = (-20.0, 20.0, 4001),
                             ) -> Activation:
    """Wrap a user-supplied scalar function, derivatives by central differences.

    The origin calibration is validated numerically; lipschitz_third defaults
    to the max of |sigma'''| sampled on `grid`, padded by 5%.
    """
    def d1(z):
        h = _FD_STEP_D1
        z = np.asarray(z, dtype=float)
        return (fn(z + h) - fn(z - h)) / (2.0 * h)

    def d2(z):
        h = _FD_STEP_D2
        z = np.asarray(z, dtype=float)
        return (fn(z + h) - 2.0 * fn(z) + fn(z - h)) / (h * h)

    def d3(z):
        h = _FD_STEP_D3
        z = np.asarray(z, dtype=float)
        return (fn(z + 2 * h) - 2.0 * fn(z + h) + 2.0 * fn(z - h) - fn(z - 2 * h)) / (2.0 * h ** 3)

    if lipschitz_third is None:
        zs = np.linspace(*grid)
        lipschitz_third = float(1.05 * np.max(np.abs(d3(zs))))
    return Activation(name=name, value=fn, d1=d1, d2=d2, d3=d3,
                      lipschitz_third=lipschitz_third)
