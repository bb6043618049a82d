"""Fused numba kernels for the tanh-network risk/gradient evaluation.

The simulation spends essentially all of its time evaluating the empirical
risk and its exact gradient, so this is the one place we hand-optimize.
Layout of the computation (see model.evaluate for the reference numpy path):

    z_ks   = w_k . x_s
    pred_s = sum_k a_k tanh(z_ks)
    rw_s   = weight_s * (pred_s - target_s)
    loss   = 0.5 * sum_s rw_s * (pred_s - target_s)
    ga_k   = sum_s tanh(z_ks) rw_s
    gw_kj  = a_k * sum_s (1 - tanh(z_ks)^2) rw_s x_sj

Determinism contract: all cross-neuron reductions are chunked over a fixed
number of neuron blocks (NCHUNKS) and combined in fixed block order, so the
result is bit-identical regardless of how many threads execute the prange.
fastmath is restricted to reassociation/contraction, which is baked into the
compiled artifact -- repeated calls and separate processes on the same build
produce identical bits.

tanh is evaluated by an odd degree-21 Taylor polynomial for |z| <= 0.25
(absolute error < 3e-17 there, verified in tests) and by math.tanh outside.
The small-argument branch is hoisted to per-neuron level (|w_k|_1 * max|x|
bound) so the common small-weight regime runs branch-free and vectorizes.
"""
import math
import warnings

import numpy as np

# numba probes TBB at import; the version gate warning is noise for us
warnings.filterwarnings("ignore", message=".*TBB.*")
from numba import njit, prange  # noqa: E402

# Fixed neuron partition for deterministic parallel reductions.
NCHUNKS = 64

# Radius within which the polynomial is used instead of math.tanh.
POLY_RADIUS = 0.25

# Taylor coefficients of tanh for odd powers z^1 .. z^21.
_C0 = 1.0
_C1 = -1.0 / 3.0
_C2 = 2.0 / 15.0
_C3 = -17.0 / 315.0
_C4 = 62.0 / 2835.0
_C5 = -1382.0 / 155925.0
_C6 = 21844.0 / 6081075.0
_C7 = -929569.0 / 638512875.0
_C8 = 6404582.0 / 10854718875.0
_C9 = -443861162.0 / 1856156927625.0
_C10 = 18888466084.0 / 194896477400625.0

_FASTMATH = {"reassoc", "contract"}


@njit(inline="always")
def _poly(u):
    # Estrin evaluation of the even polynomial p(u) with t = z * p(z^2).
    u2 = u * u
    u4 = u2 * u2
    u8 = u4 * u4
    pa = (_C0 + _C1 * u) + (_C2 + _C3 * u) * u2
    pb = (_C4 + _C5 * u) + (_C6 + _C7 * u) * u2
    pc = (_C8 + _C9 * u) + _C10 * u2
    return pa + pb * u4 + pc * u8


@njit(cache=True)
def kernel_tanh(z):
    """Scalar tanh exactly as the fused kernels compute it."""
    if abs(z) <= POLY_RADIUS:
        return z * _poly(z * z)
    return math.tanh(z)


@njit(parallel=True, fastmath=_FASTMATH, cache=True)
def eval_tanh_d1(a, w, x, xw, y, xabs_max):
    """loss, grad_a, grad_w for d=1. w and x are 1-D views."""
    m = a.shape[0]
    n = x.shape[0]
    partial = np.zeros((NCHUNKS, n))
    for c in prange(NCHUNKS):
        lo = c * m // NCHUNKS
        hi = (c + 1) * m // NCHUNKS
        for k in range(lo, hi):
            ak = a[k]
            wk = w[k]
            if abs(wk) * xabs_max <= POLY_RADIUS:
                for s in range(n):
                    z = wk * x[s]
                    partial[c, s] += ak * (z * _poly(z * z))
            else:
                for s in range(n):
                    z = wk * x[s]
                    if abs(z) <= POLY_RADIUS:
                        t = z * _poly(z * z)
                    else:
                        t = math.tanh(z)
                    partial[c, s] += ak * t
    pred = np.zeros(n)
    for c in range(NCHUNKS):
        for s in range(n):
            pred[s] += partial[c, s]
    rw = np.empty(n)
    q = np.empty(n)
    loss = 0.0
    qsum = 0.0
    for s in range(n):
        r = pred[s] - y[s]
        rw[s] = xw[s] * r
        q[s] = rw[s] * x[s]
        qsum += q[s]
        loss += rw[s] * r
    loss *= 0.5
    grad_a = np.empty(m)
    grad_w = np.empty(m)
    for c in prange(NCHUNKS):
        lo = c * m // NCHUNKS
        hi = (c + 1) * m // NCHUNKS
        for k in range(lo, hi):
            ak = a[k]
            wk = w[k]
            ga = 0.0
            tq = 0.0
            if abs(wk) * xabs_max <= POLY_RADIUS:
                for s in range(n):
                    z = wk * x[s]
                    t = z * _poly(z * z)
                    ga += t * rw[s]
                    tq += (t * t) * q[s]
            else:
                for s in range(n):
                    z = wk * x[s]
                    if abs(z) <= POLY_RADIUS:
                        t = z * _poly(z * z)
                    else:
                        t = math.tanh(z)
                    ga += t * rw[s]
                    tq += (t * t) * q[s]
            grad_a[k] = ga
            # sum_s (1 - t^2) rw x = qsum - sum_s t^2 q
            grad_w[k] = ak * (qsum - tq)
    return loss, grad_a, grad_w


@njit(parallel=True, fastmath=_FASTMATH, cache=True)
def eval_tanh_nd(a, W, X, xw, y, col_abs_max):
    """loss, grad_a, grad_W for general d. col_abs_max[j] = max_s |X[s, j]|."""
    m, d = W.shape
    n = X.shape[0]
    partial = np.zeros((NCHUNKS, n))
    for c in prange(NCHUNKS):
        lo = c * m // NCHUNKS
        hi = (c + 1) * m // NCHUNKS
        for k in range(lo, hi):
            ak = a[k]
            bound = 0.0
            for j in range(d):
                bound += abs(W[k, j]) * col_abs_max[j]
            if bound <= POLY_RADIUS:
                for s in range(n):
                    z = 0.0
                    for j in range(d):
                        z += W[k, j] * X[s, j]
                    partial[c, s] += ak * (z * _poly(z * z))
            else:
                for s in range(n):
                    z = 0.0
                    for j in range(d):
                        z += W[k, j] * X[s, j]
                    if abs(z) <= POLY_RADIUS:
                        t = z * _poly(z * z)
                    else:
                        t = math.tanh(z)
                    partial[c, s] += ak * t
    pred = np.zeros(n)
    for c in range(NCHUNKS):
        for s in range(n):
            pred[s] += partial[c, s]
    rw = np.empty(n)
    loss = 0.0
    for s in range(n):
        r = pred[s] - y[s]
        rw[s] = xw[s] * r
        loss += rw[s] * r
    loss *= 0.5
    grad_a = np.empty(m)
    grad_W = np.empty((m, d))
    for c in prange(NCHUNKS):
        lo = c * m // NCHUNKS
        hi = (c + 1) * m // NCHUNKS
        gw = np.empty(d)
        for k in range(lo, hi):
            ak = a[k]
            bound = 0.0
            for j in range(d):
                bound += abs(W[k, j]) * col_abs_max[j]
            ga = 0.0
            for j in range(d):
                gw[j] = 0.0
            if bound <= POLY_RADIUS:
                for s in range(n):
                    z = 0.0
                    for j in range(d):
                        z += W[k, j] * X[s, j]
                    t = z * _poly(z * z)
                    ga += t * rw[s]
                    coef = (1.0 - t * t) * rw[s]
                    for j in range(d):
                        gw[j] += coef * X[s, j]
            else:
                for s in range(n):
                    z = 0.0
                    for j in range(d):
                        z += W[k, j] * X[s, j]
                    if abs(z) <= POLY_RADIUS:
                        t = z * _poly(z * z)
                    else:
                        t = math.tanh(z)
                    ga += t * rw[s]
                    coef = (1.0 - t * t) * rw[s]
                    for j in range(d):
                        gw[j] += coef * X[s, j]
            grad_a[k] = ga
            for j in range(d):
                grad_W[k, j] = ak * gw[j]
    return loss, grad_a, grad_W
