"""Compiled inner loops for integration and Monte Carlo batches.

The public operations in `dynamics` are the readable reference; the
kernels here repeat the same arithmetic in the same order so that results
are bit-identical (asserted in the test suite). Termination kinds are
encoded as integers: 0 max_time, 1 converged, 2 cycle_suspected.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TERM_MAX_TIME = 0
TERM_CONVERGED = 1
TERM_CYCLE = 2


@njit(cache=True)
def field_eval(f1, g1, f2, g2, kappa, qc, x, a):
    h1 = (1.0 - x) * f1 + x * g1
    h2 = (1.0 - x) * f2 + x * g2
    acc = 0.0
    for i in range(len(qc) - 1, -1, -1):
        acc = acc * x + qc[i]
    dx = -(x * (1.0 - x)) * ((1.0 - a) * h1 + a * h2)
    da = kappa * (a * (1.0 - a)) * acc
    return dx, da


@njit(cache=True)
def rk4_step(f1, g1, f2, g2, kappa, qc, x, a, dt):
    k1x, k1a = field_eval(f1, g1, f2, g2, kappa, qc, x, a)
    k2x, k2a = field_eval(f1, g1, f2, g2, kappa, qc, x + 0.5 * dt * k1x, a + 0.5 * dt * k1a)
    k3x, k3a = field_eval(f1, g1, f2, g2, kappa, qc, x + 0.5 * dt * k2x, a + 0.5 * dt * k2a)
    k4x, k4a = field_eval(f1, g1, f2, g2, kappa, qc, x + dt * k3x, a + dt * k3a)
    nx = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    na = a + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    if nx < 0.0:
        nx = 0.0
    elif nx > 1.0:
        nx = 1.0
    if na < 0.0:
        na = 0.0
    elif na > 1.0:
        na = 1.0
    return nx, na


@njit(cache=True)
def _target_hit(targets, eps, x, a):
    for j in range(targets.shape[0]):
        if abs(x - targets[j, 0]) <= eps and abs(a - targets[j, 1]) <= eps:
            return j
    return -1


@njit(cache=True)
def integrate_trajectory(f1, g1, f2, g2, kappa, qc, x0, a0, dt, n_steps,
                         sample_every, lag_n, targets, eps,
                         out_t, out_x, out_a):
    """Integrate one trajectory, recording every sample_every-th state.

    Returns (n_recorded, kind, target_index, t_end, x_end, a_end). The
    initial state is sample 0 and the terminal state is always the last
    sample. The cycle test compares each new sample against the one
    lag_n samples earlier (at least t_max/100 elapsed).
    """
    x = x0
    a = a0
    out_t[0] = 0.0
    out_x[0] = x
    out_a[0] = a
    n_rec = 1
    j = _target_hit(targets, eps, x, a)
    if j >= 0:
        return n_rec, TERM_CONVERGED, j, 0.0, x, a
    kind = TERM_MAX_TIME
    tgt = -1
    t = 0.0
    for k in range(1, n_steps + 1):
        x, a = rk4_step(f1, g1, f2, g2, kappa, qc, x, a, dt)
        t = k * dt
        j = _target_hit(targets, eps, x, a)
        if j >= 0:
            kind = TERM_CONVERGED
            tgt = j
            break
        if k % sample_every == 0:
            s_idx = k // sample_every
            if s_idx >= lag_n:
                px = out_x[s_idx - lag_n]
                pa = out_a[s_idx - lag_n]
                if abs(x - px) <= eps / 10.0 and abs(a - pa) <= eps / 10.0:
                    out_t[n_rec] = t
                    out_x[n_rec] = x
                    out_a[n_rec] = a
                    n_rec += 1
                    return n_rec, TERM_CYCLE, -1, t, x, a
            out_t[n_rec] = t
            out_x[n_rec] = x
            out_a[n_rec] = a
            n_rec += 1
    if n_rec == 0 or out_t[n_rec - 1] != t:
        out_t[n_rec] = t
        out_x[n_rec] = x
        out_a[n_rec] = a
        n_rec += 1
    return n_rec, kind, tgt, t, x, a


@njit(cache=True)
def _run_one(f1, g1, f2, g2, kappa, qc, x0, a0, dt, n_steps,
             sample_every, lag_n, targets, eps, ring):
    """Same stepping and termination logic as integrate_trajectory but
    with an O(lag_n) ring buffer instead of a full sample record."""
    x = x0
    a = a0
    j = _target_hit(targets, eps, x, a)
    if j >= 0:
        return TERM_CONVERGED, j, 0.0, x, a
    ring[0, 0] = x
    ring[0, 1] = a
    t = 0.0
    for k in range(1, n_steps + 1):
        x, a = rk4_step(f1, g1, f2, g2, kappa, qc, x, a, dt)
        t = k * dt
        j = _target_hit(targets, eps, x, a)
        if j >= 0:
            return TERM_CONVERGED, j, t, x, a
        if k % sample_every == 0:
            s_idx = k // sample_every
            if s_idx >= lag_n:
                old = (s_idx - lag_n) % (lag_n + 1)
                if abs(x - ring[old, 0]) <= eps / 10.0 and abs(a - ring[old, 1]) <= eps / 10.0:
                    return TERM_CYCLE, -1, t, x, a
            slot = s_idx % (lag_n + 1)
            ring[slot, 0] = x
            ring[slot, 1] = a
    return TERM_MAX_TIME, -1, t, x, a


@njit(cache=True)
def basin_batch(f1, g1, f2, g2, kappa, qc, x0s, a0s, dt, n_steps,
                sample_every, lag_n, targets, eps,
                out_kind, out_tgt, out_t, out_x, out_a):
    ring = np.empty((lag_n + 1, 2), dtype=np.float64)
    for i in range(x0s.shape[0]):
        kind, tgt, t, x, a = _run_one(f1, g1, f2, g2, kappa, qc,
                                      x0s[i], a0s[i], dt, n_steps,
                                      sample_every, lag_n, targets, eps, ring)
        out_kind[i] = kind
        out_tgt[i] = tgt
        out_t[i] = t
        out_x[i] = x
        out_a[i] = a
