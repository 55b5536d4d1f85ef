"""Monte Carlo estimation of the cooperation basin and parameter sweeps.

Every sample's random stream is derived from (seed, sample index) and
every sweep cell's seed from (master seed, cell indices), so results are
bit-identical no matter how work is split across processes.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .dynamics import DEFAULT_DT, DEFAULT_EPS, DEFAULT_SAMPLE_EVERY, DEFAULT_T_MAX, _plan_steps
from .games import DrunkGame, PayoffMatrix, QPoly, normalized, preset

DEFAULT_SEED = 42
COOPERATION_TARGET = (1.0, 1.0)

_KIND_NAMES = {
    _kernels.TERM_MAX_TIME: "max_time",
    _kernels.TERM_CONVERGED: "converged",
    _kernels.TERM_CYCLE: "cycle_suspected",
}


@dataclass(frozen=True)
class MonteCarloParams:
    n_samples: int = 1000
    eps: float = DEFAULT_EPS
    t_max: float = DEFAULT_T_MAX
    dt: float = DEFAULT_DT


@dataclass(frozen=True)
class SampleRecord:
    x0: float
    alpha0: float
    termination: str
    time: float


@dataclass(frozen=True)
class BasinResult:
    """Fraction of uniform random starts that converge to full cooperation."""

    attractiveness: float
    n_samples: int
    n_cooperative: int
    seed: int
    eps: float
    t_max: float
    dt: float
    records: tuple[SampleRecord, ...] | None = None

    def to_dict(self) -> dict:
        d = {
            "attractiveness": self.attractiveness,
            "n_samples": self.n_samples,
            "n_cooperative": self.n_cooperative,
            "seed": self.seed,
            "eps": self.eps,
            "t_max": self.t_max,
            "dt": self.dt,
        }
        if self.records is not None:
            d["samples"] = [
                {"x0": r.x0, "alpha0": r.alpha0, "termination": r.termination, "t": r.time}
                for r in self.records
            ]
        return d


def _validate_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def initial_conditions(seed: int, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform (x0, alpha0) draws for sample indices [start, stop); the
    stream for sample i depends only on (seed, i)."""
    n = stop - start
    x0 = np.empty(n)
    a0 = np.empty(n)
    for k, i in enumerate(range(start, stop)):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        x0[k] = rng.random()
        a0[k] = rng.random()
    return x0, a0


def _run_range(dg: DrunkGame, seed: int, start: int, stop: int,
               eps: float, t_max: float, dt: float):
    from .dynamics import _game_params

    x0, a0 = initial_conditions(seed, start, stop)
    n = stop - start
    n_steps, lag_n = _plan_steps(dt, t_max, DEFAULT_SAMPLE_EVERY)
    targets = np.array([COOPERATION_TARGET], dtype=np.float64)
    kinds = np.empty(n, dtype=np.int64)
    tgts = np.empty(n, dtype=np.int64)
    t_end = np.empty(n)
    xe = np.empty(n)
    ae = np.empty(n)
    f1, g1, f2, g2, kappa, qc = _game_params(dg)
    _kernels.basin_batch(f1, g1, f2, g2, kappa, qc, x0, a0, dt, n_steps,
                         DEFAULT_SAMPLE_EVERY, lag_n, targets, eps,
                         kinds, tgts, t_end, xe, ae)
    return x0, a0, kinds, tgts, t_end


def estimate_attractiveness(dg: DrunkGame, n_samples: int = 1000,
                            seed: int = DEFAULT_SEED, eps: float = DEFAULT_EPS,
                            t_max: float = DEFAULT_T_MAX, dt: float = DEFAULT_DT,
                            record_samples: bool = False, jobs: int = 1) -> BasinResult:
    """Integrate n_samples uniform random starts toward the (1,1) target.

    Cycle and max-time terminations count as non-cooperative. Splitting
    across jobs does not change the result: per-sample streams are
    index-based.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    seed = _validate_seed(seed)
    jobs = max(1, int(jobs))
    bounds = np.linspace(0, n_samples, min(jobs, n_samples) + 1).astype(int)
    chunks = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    if len(chunks) > 1:
        warm_kernels()
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_range_worker,
                                  [(dg, seed, lo, hi, eps, t_max, dt) for lo, hi in chunks]))
    else:
        parts = [_run_range(dg, seed, 0, n_samples, eps, t_max, dt)]
    x0 = np.concatenate([p[0] for p in parts])
    a0 = np.concatenate([p[1] for p in parts])
    kinds = np.concatenate([p[2] for p in parts])
    tgts = np.concatenate([p[3] for p in parts])
    t_end = np.concatenate([p[4] for p in parts])
    coop = int(np.sum((kinds == _kernels.TERM_CONVERGED) & (tgts == 0)))
    records = None
    if record_samples:
        records = tuple(
            SampleRecord(float(x0[i]), float(a0[i]), _KIND_NAMES[int(kinds[i])], float(t_end[i]))
            for i in range(n_samples)
        )
    return BasinResult(attractiveness=coop / n_samples, n_samples=n_samples,
                       n_cooperative=coop, seed=seed, eps=eps, t_max=t_max, dt=dt,
                       records=records)


def _range_worker(args):
    return _run_range(*args)


def warm_kernels() -> None:
    """Force kernel compilation in this process (children inherit it)."""
    dg = preset("pub_dilemma")
    _run_range(dg, 0, 0, 1, DEFAULT_EPS, 1.0, DEFAULT_DT)


@dataclass(frozen=True)
class SweepCell:
    params: tuple[float, ...]
    kappa: float
    result: BasinResult


@dataclass(frozen=True)
class SweepDataset:
    """Attractiveness estimates over a parameter grid times a kappa list."""

    param_names: tuple[str, ...]
    grids: tuple[tuple[float, ...], ...]
    kappas: tuple[float, ...]
    master_seed: int
    cells: tuple[SweepCell, ...] = field(repr=False)

    def mean_attractiveness(self, kappa: float) -> float:
        vals = [c.result.attractiveness for c in self.cells if c.kappa == kappa]
        return sum(vals) / len(vals)

    def curve(self, kappa: float) -> list[tuple[tuple[float, ...], float]]:
        return [(c.params, c.result.attractiveness) for c in self.cells if c.kappa == kappa]

    def to_csv(self, path) -> None:
        from .dynamics import _open_text

        fh, owned = _open_text(path)
        try:
            fh.write(",".join(self.param_names) + ",kappa,attractiveness,n_samples,seed\n")
            for c in self.cells:
                cols = [repr(p) for p in c.params]
                cols += [repr(c.kappa), repr(c.result.attractiveness),
                         str(c.result.n_samples), str(c.result.seed)]
                fh.write(",".join(cols) + "\n")
        finally:
            if owned:
                fh.close()


@dataclass(frozen=True)
class JumpReport:
    """Largest single-step increase along a one-parameter curve."""

    size: float
    location: float
    param_lo: float
    param_hi: float
    att_lo: float
    att_hi: float


def largest_jump(ds: SweepDataset, kappa: float) -> JumpReport:
    pts = sorted((c.params[0], c.result.attractiveness)
                 for c in ds.cells if c.kappa == kappa)
    best = None
    for (p0, a0), (p1, a1) in zip(pts[:-1], pts[1:]):
        step = a1 - a0
        if best is None or step > best.size:
            best = JumpReport(size=step, location=0.5 * (p0 + p1),
                              param_lo=p0, param_hi=p1, att_lo=a0, att_hi=a1)
    if best is None:
        raise ValueError("need at least two grid points to measure a jump")
    return best


def _cell_seed(master_seed: int, *indices: int) -> int:
    ss = np.random.SeedSequence([master_seed, *indices])
    return int(ss.generate_state(1, np.uint64)[0])


def _sweep_cell_worker(args):
    dg, params, kappa, cell_seed, mc, record = args
    res = estimate_attractiveness(dg, mc.n_samples, cell_seed, mc.eps, mc.t_max,
                                  mc.dt, record_samples=record)
    return SweepCell(params=params, kappa=kappa, result=res)


def _run_cells(cell_args, jobs):
    if jobs is None:
        jobs = os.cpu_count() or 1
    jobs = min(max(1, int(jobs)), len(cell_args))
    if jobs <= 1:
        return [_sweep_cell_worker(a) for a in cell_args]
    warm_kernels()
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_cell_worker, cell_args, chunksize=4))


def sweep_g2_grid(g1: PayoffMatrix, s2_grid: Sequence[float], t2_grid: Sequence[float],
                  kappas: Sequence[float], mc: MonteCarloParams = MonteCarloParams(),
                  master_seed: int = DEFAULT_SEED, jobs: int | None = None,
                  record_samples: bool = False) -> SweepDataset:
    """Couple g1 with every (S2, T2) grid game (R=1, P=0, q = x - 0.5) and
    estimate cooperation attractiveness per cell and kappa."""
    master_seed = _validate_seed(master_seed)
    s2_grid = tuple(float(v) for v in s2_grid)
    t2_grid = tuple(float(v) for v in t2_grid)
    kappas = tuple(float(k) for k in kappas)
    for s2 in s2_grid:
        if not -1.0 <= s2 <= 1.0:
            raise ValueError(f"S2 grid value {s2} outside [-1, 1]")
    for t2 in t2_grid:
        if not 0.0 <= t2 <= 2.0:
            raise ValueError(f"T2 grid value {t2} outside [0, 2]")
    q = QPoly.linear(0.5)
    cell_args = []
    for ik, kappa in enumerate(kappas):
        for i2, s2 in enumerate(s2_grid):
            for i3, t2 in enumerate(t2_grid):
                dg = DrunkGame(g1, normalized(s2, t2), kappa, q)
                seed = _cell_seed(master_seed, i2, i3, ik)
                cell_args.append((dg, (s2, t2), kappa, seed, mc, record_samples))
    cells = _run_cells(cell_args, jobs)
    return SweepDataset(param_names=("S2", "T2"), grids=(s2_grid, t2_grid),
                        kappas=kappas, master_seed=master_seed, cells=tuple(cells))


def sweep_battle_line(s1_grid: Sequence[float], kappas: Sequence[float],
                      mc: MonteCarloParams = MonteCarloParams(),
                      master_seed: int = DEFAULT_SEED, jobs: int | None = None,
                      record_samples: bool = False) -> SweepDataset:
    """Attractiveness of cooperation along the battle preset's S1 axis."""
    master_seed = _validate_seed(master_seed)
    s1_grid = tuple(float(v) for v in s1_grid)
    kappas = tuple(float(k) for k in kappas)
    cell_args = []
    for ik, kappa in enumerate(kappas):
        for i1, s1 in enumerate(s1_grid):
            dg = preset("battle", {"s1": s1, "kappa": kappa})
            seed = _cell_seed(master_seed, i1, ik)
            cell_args.append((dg, (s1,), kappa, seed, mc, record_samples))
    cells = _run_cells(cell_args, jobs)
    return SweepDataset(param_names=("S1",), grids=(s1_grid,), kappas=kappas,
                        master_seed=master_seed, cells=tuple(cells))
