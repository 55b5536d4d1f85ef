"""Coupled mean-field dynamics on the unit square.

State is (x, alpha): cooperator fraction and mean perception. The flow is

    dx/dt     = -x(1-x) [(1-alpha) h1(x) + alpha h2(x)]
    dalpha/dt = kappa alpha (1-alpha) q(x)

with h_g the per-game incentive to defect. Integration is classical
fixed-step RK4 with post-step clamping to [0,1]^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from . import _kernels
from .games import DrunkGame, fear_greed

TerminationKind = Literal["converged", "max_time", "cycle_suspected"]

_KIND_NAMES = {
    _kernels.TERM_MAX_TIME: "max_time",
    _kernels.TERM_CONVERGED: "converged",
    _kernels.TERM_CYCLE: "cycle_suspected",
}

DEFAULT_DT = 0.01
DEFAULT_T_MAX = 1e4
DEFAULT_EPS = 1e-3
DEFAULT_SAMPLE_EVERY = 10


@dataclass(frozen=True)
class State:
    """Point (x, alpha) in the closed unit square."""

    x: float
    alpha: float

    def __post_init__(self):
        for name in ("x", "alpha"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    target: State | None = None
    time: float = 0.0


@dataclass(frozen=True)
class Trajectory:
    """Sampled time course of one integration.

    t, x and alpha are parallel arrays; the initial state is row 0 and the
    terminal state is always the last row.
    """

    dt: float
    t: np.ndarray
    x: np.ndarray
    alpha: np.ndarray
    termination: Termination

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> State:
        return State(float(self.x[i]), float(self.alpha[i]))

    @property
    def final_state(self) -> State:
        return self.state(len(self.t) - 1)

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


def _game_params(dg: DrunkGame):
    fg1 = fear_greed(dg.g1)
    fg2 = fear_greed(dg.g2)
    qc = np.asarray(dg.q.coefficients, dtype=np.float64)
    return fg1.fear, fg1.greed, fg2.fear, fg2.greed, dg.kappa, qc


def expected_payoffs(dg: DrunkGame, s: State) -> tuple[float, float]:
    """Expected payoff of a cooperator and of a defector at (x, alpha).

    Each perception's payoff entries are paired with that perception's
    weight (g1 with 1-alpha, g2 with alpha). The replicator term in
    vector_field is computed from the incentive form instead, which
    coincides with this pairing under the R=1, P=0 normalization.
    """
    x, a = s.x, s.alpha
    g1, g2 = dg.g1, dg.g2
    pi_c = (1.0 - a) * (x * g1.R + (1.0 - x) * g1.S) + a * (x * g2.R + (1.0 - x) * g2.S)
    pi_d = (1.0 - a) * (x * g1.T + (1.0 - x) * g1.P) + a * (x * g2.T + (1.0 - x) * g2.P)
    return pi_c, pi_d


def raw_field(dg: DrunkGame, x: float, a: float) -> tuple[float, float]:
    """Field value at raw coordinates, without State validation.

    The field is polynomial, so evaluation slightly outside the unit
    square is exact; finite-difference Jacobians rely on this.
    """
    fg1 = fear_greed(dg.g1)
    fg2 = fear_greed(dg.g2)
    h1 = (1.0 - x) * fg1.fear + x * fg1.greed
    h2 = (1.0 - x) * fg2.fear + x * fg2.greed
    q = dg.q(x)
    dx = -(x * (1.0 - x)) * ((1.0 - a) * h1 + a * h2)
    da = dg.kappa * (a * (1.0 - a)) * q
    return dx, da


def vector_field(dg: DrunkGame, s: State) -> tuple[float, float]:
    """(dx/dt, dalpha/dt) at a state."""
    return raw_field(dg, s.x, s.alpha)


def _clamp01(v: float) -> float:
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


def step_rk4(dg: DrunkGame, s: State, dt: float) -> State:
    """One classical RK4 step, clamped back to the unit square."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    x, a = s.x, s.alpha
    k1x, k1a = raw_field(dg, x, a)
    k2x, k2a = raw_field(dg, x + 0.5 * dt * k1x, a + 0.5 * dt * k1a)
    k3x, k3a = raw_field(dg, x + 0.5 * dt * k2x, a + 0.5 * dt * k2a)
    k4x, k4a = raw_field(dg, x + dt * k3x, a + dt * k3a)
    nx = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    na = a + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    return State(_clamp01(nx), _clamp01(na))


def _plan_steps(dt: float, t_max: float, sample_every: int) -> tuple[int, int]:
    if dt <= 0.0 or t_max <= 0.0:
        raise ValueError("dt and t_max must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be a positive integer")
    n_steps = max(1, int(round(t_max / dt)))
    lag_n = max(1, math.ceil((t_max / 100.0) / (dt * sample_every)))
    return n_steps, lag_n


def integrate(dg: DrunkGame, s0: State, dt: float = DEFAULT_DT,
              t_max: float = DEFAULT_T_MAX, targets: Sequence[State] = (),
              eps: float = DEFAULT_EPS,
              sample_every: int = DEFAULT_SAMPLE_EVERY) -> Trajectory:
    """Integrate until a target is reached, a revisit is detected, or t_max.

    Convergence means L-inf distance to a target at most eps, checked after
    every step. The revisit test (termination `cycle_suspected`) compares
    each sampled state against the sample from t_max/100 earlier with
    tolerance eps/10; it labels settled or cyclic runs and never alters
    the dynamics.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    n_steps, lag_n = _plan_steps(dt, t_max, sample_every)
    tarr = np.array([(t.x, t.alpha) for t in targets], dtype=np.float64).reshape(-1, 2)
    max_rec = n_steps // sample_every + 2
    out_t = np.empty(max_rec, dtype=np.float64)
    out_x = np.empty(max_rec, dtype=np.float64)
    out_a = np.empty(max_rec, dtype=np.float64)
    f1, g1, f2, g2, kappa, qc = _game_params(dg)
    n_rec, kind, tgt, t_end, _, _ = _kernels.integrate_trajectory(
        f1, g1, f2, g2, kappa, qc, s0.x, s0.alpha, dt, n_steps,
        sample_every, lag_n, tarr, eps, out_t, out_x, out_a)
    target = targets[tgt] if kind == _kernels.TERM_CONVERGED else None
    term = Termination(kind=_KIND_NAMES[kind], target=target, time=float(t_end))
    return Trajectory(dt=dt, t=out_t[:n_rec].copy(), x=out_x[:n_rec].copy(),
                      alpha=out_a[:n_rec].copy(), termination=term)


def field_grid(dg: DrunkGame, n: int) -> list[tuple[State, float, float]]:
    """Vector field sampled on the n-by-n uniform lattice over the unit
    square, row-major in x then alpha."""
    if n < 2:
        raise ValueError(f"grid resolution must be at least 2, got {n}")
    out = []
    for i in range(n):
        x = i / (n - 1)
        for j in range(n):
            a = j / (n - 1)
            s = State(x, a)
            dx, da = vector_field(dg, s)
            out.append((s, dx, da))
    return out


def _open_text(path, mode="w"):
    if hasattr(path, "write"):
        return path, False
    return open(path, mode, encoding="utf-8", newline=""), True


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Columns t,x,alpha at full round-trip precision."""
    fh, owned = _open_text(path)
    try:
        fh.write("t,x,alpha\n")
        for t, x, a in zip(traj.t, traj.x, traj.alpha):
            fh.write(f"{float(t)!r},{float(x)!r},{float(a)!r}\n")
    finally:
        if owned:
            fh.close()


def write_field_grid_csv(grid: Iterable[tuple[State, float, float]], path) -> None:
    """Columns x,alpha,dx,dalpha at full round-trip precision."""
    fh, owned = _open_text(path)
    try:
        fh.write("x,alpha,dx,dalpha\n")
        for s, dx, da in grid:
            fh.write(f"{s.x!r},{s.alpha!r},{dx!r},{da!r}\n")
    finally:
        if owned:
            fh.close()
