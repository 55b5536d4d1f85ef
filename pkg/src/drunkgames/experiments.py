"""Dataset pipelines behind the seven figure reproductions.

Each pipeline writes CSV datasets plus a params.json sidecar with every
resolved parameter into <out_dir>/<figure>/ and returns a manifest of
relative paths and content digests. Reruns with the same spec and master
seed reproduce every byte.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import basins, equilibria
from .abm import AbmConfig, run_abm
from .basins import MonteCarloParams, sweep_battle_line, sweep_g2_grid
from .dynamics import (State, field_grid, integrate, write_field_grid_csv,
                       write_trajectory_csv, _open_text)
from .games import (DegenerateGameError, DrunkGame, QPoly, classify_game, normalized,
                    preset, single_game_fixed_points)

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7")

DEFAULT_SEED = basins.DEFAULT_SEED

# documented trajectory starts for the phase-portrait figures
PORTRAIT_STARTS = ((0.25, 0.4), (0.75, 0.6))


@dataclass(frozen=True)
class ExperimentSpec:
    figure: str
    out_dir: Path
    master_seed: int = DEFAULT_SEED
    overrides: dict = field(default_factory=dict)
    jobs: int | None = None

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ValueError(f"unknown figure {self.figure!r}, expected one of {FIGURES}")
        object.__setattr__(self, "out_dir", Path(self.out_dir))


@dataclass(frozen=True)
class Manifest:
    figure: str
    root: Path
    files: tuple[tuple[str, str], ...]  # (relative path, sha256)

    def to_dict(self) -> dict:
        return {"figure": self.figure,
                "files": [{"path": p, "sha256": d} for p, d in self.files]}


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class _FigureDir:
    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.root / name


def _resolved(overrides: dict, defaults: dict) -> dict:
    bad = set(overrides) - set(defaults)
    if bad:
        raise ValueError(f"unknown overrides: {sorted(bad)}; "
                         f"known: {sorted(defaults)}")
    out = dict(defaults)
    out.update(overrides)
    return out


def _fig1(spec: ExperimentSpec, fig: _FigureDir) -> dict:
    p = _resolved(spec.overrides, {
        "t_points": 41, "s_points": 41, "x0": 0.5, "dt": 0.01,
        "t_max": 1e3, "eps": 1e-3,
    })
    ts = np.linspace(0.0, 2.0, p["t_points"])
    ss = np.linspace(-1.0, 1.0, p["s_points"])
    out = fig.path("grid.csv")
    fh, _ = _open_text(out)
    with fh:
        fh.write("T,S,game_class,x_final,status\n")
        for t in ts:
            for s in ss:
                m = normalized(float(s), float(t))
                dg = DrunkGame(m, m, kappa=1.0, q=QPoly.zero())
                targets = [State(0.0, p["x0"]), State(1.0, p["x0"])]
                try:
                    for eq in single_game_fixed_points(m):
                        if 0.0 < eq.x < 1.0 and eq.stable:
                            targets.append(State(eq.x, p["x0"]))
                except DegenerateGameError:
                    pass
                traj = integrate(dg, State(p["x0"], p["x0"]), dt=p["dt"],
                                 t_max=p["t_max"], targets=targets, eps=p["eps"])
                if traj.termination.kind == "converged":
                    status = "converged"
                    x_final = traj.termination.target.x
                else:
                    status = "on_separatrix"
                    x_final = float(traj.x[-1])
                fh.write(f"{float(t)!r},{float(s)!r},{classify_game(m)},"
                         f"{x_final!r},{status}\n")
    return p


def _portrait(fig: _FigureDir, dg: DrunkGame, tag: str, p: dict) -> None:
    grid = field_grid(dg, p["field_resolution"])
    write_field_grid_csv(grid, fig.path(f"field{tag}.csv"))
    _write_json(fig.path(f"equilibria{tag}.json"), equilibria.report(dg))
    stable = [fp.state for fp in equilibria.all_fixed_points(dg)
              if fp.stability in (equilibria.StabilityClass.STABLE_NODE,
                                  equilibria.StabilityClass.STABLE_SPIRAL)]
    for i, (x0, a0) in enumerate(PORTRAIT_STARTS):
        traj = integrate(dg, State(x0, a0), dt=p["dt"], t_max=p["traj_t_max"],
                         targets=stable, eps=p["eps"])
        write_trajectory_csv(traj, fig.path(f"trajectory{tag}_{i}.csv"))


def _fig2(spec: ExperimentSpec, fig: _FigureDir) -> dict:
    p = _resolved(spec.overrides, {
        "field_resolution": 21, "dt": 0.01, "traj_t_max": 200.0, "eps": 1e-3,
    })
    _portrait(fig, preset("pub_dilemma"), "", p)
    return p


def _fig3(spec: ExperimentSpec, fig: _FigureDir) -> dict:
    p = _resolved(spec.overrides, {
        "s_values": (0.4, 0.5, 0.8), "field_resolution": 21, "dt": 0.01,
        "traj_t_max": 200.0, "eps": 1e-3,
    })
    for s in p["s_values"]:
        _portrait(fig, preset("drunk_prisoner", {"s": s}), f"_s{s}", p)
    return p


def _fig4(spec: ExperimentSpec, fig: _FigureDir) -> dict:
    p = _resolved(spec.overrides, {
        "grid_points": 41, "kappas": (0.1, 1.0, 10.0), "n_samples": 1000,
        "eps": 1e-3, "t_max": 1e4, "dt": 0.01,
    })
    mc = MonteCarloParams(n_samples=p["n_samples"], eps=p["eps"],
                          t_max=p["t_max"], dt=p["dt"])
    ds = sweep_g2_grid(normalized(-1.0, 2.0),
                       np.linspace(-1.0, 1.0, p["grid_points"]),
                       np.linspace(0.0, 2.0, p["grid_points"]),
                       p["kappas"], mc, master_seed=spec.master_seed, jobs=spec.jobs)
    ds.to_csv(fig.path("sweep.csv"))
    p["mean_attractiveness"] = {repr(k): ds.mean_attractiveness(k) for k in p["kappas"]}
    return p


def _fig5(spec: ExperimentSpec, fig: _FigureDir) -> dict:
    p = _resolved(spec.overrides, {
        "portrait_s1": (0.25, 0.5, 0.75), "field_resolution": 21, "dt": 0.01,
        "traj_t_max": 200.0, "eps": 1e-3, "line_points": 21,
        "kappas": (0.1, 1.0, 10.0), "n_samples": 1000, "t_max": 1e4,
    })
    for s1 in p["portrait_s1"]:
        _portrait(fig, preset("battle", {"s1": s1}), f"_s{s1}", p)
    mc = MonteCarloParams(n_samples=p["n_samples"], eps=p["eps"],
                          t_max=p["t_max"], dt=p["dt"])
    ds = sweep_battle_line(np.linspace(0.0, 1.0, p["line_points"]), p["kappas"],
                           mc, master_seed=spec.master_seed, jobs=spec.jobs)
    ds.to_csv(fig.path("sweep.csv"))
    jumps = {}
    for k in p["kappas"]:
        j = basins.largest_jump(ds, k)
        jumps[repr(k)] = {"size": j.size, "location": j.location}
    p["largest_jumps"] = jumps
    return p


def _abm_config(seed: int, s: float, delta0: float, n_agents: int, t_max: int) -> tuple:
    dg = preset("drunk_prisoner", {"s": s})
    cfg = AbmConfig.with_heterogeneity(delta0, n_agents=n_agents, t_max=t_max, seed=seed)
    return cfg, dg


def _heatmap_cell(args):
    seed, s, d, n_agents, t_max, tail = args
    cfg, dg = _abm_config(seed, s, d, n_agents, t_max)
    stats = run_abm(cfg, dg)
    return stats.dist_interior_tail_mean(tail), float(stats.delta_alpha[-1])


def _fig6(spec: ExperimentSpec, fig: _FigureDir) -> dict:
    p = _resolved(spec.overrides, {
        "s_points": 21, "delta_points": 21, "s_range": (0.3, 0.9),
        "delta_range": (0.0, 0.5), "n_agents": 1000, "t_max": 1000,
        "full_scale": False, "tail_fraction": 0.1,
    })
    if p["full_scale"]:
        p["n_agents"], p["t_max"] = 10_000, 10_000
    ss = np.linspace(*p["s_range"], p["s_points"])
    deltas = np.linspace(*p["delta_range"], p["delta_points"])
    cells = [(basins._cell_seed(spec.master_seed, i, j), float(s), float(d),
              p["n_agents"], p["t_max"], p["tail_fraction"])
             for i, s in enumerate(ss) for j, d in enumerate(deltas)]
    jobs = spec.jobs if spec.jobs is not None else 1
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as pool:
            results = list(pool.map(_heatmap_cell, cells, chunksize=4))
    else:
        results = [_heatmap_cell(c) for c in cells]
    out = fig.path("heatmap.csv")
    fh, _ = _open_text(out)
    with fh:
        fh.write("s,delta0,dist_interior_avg,delta_alpha_final\n")
        for (seed, s, d, *_), (dist, dfin) in zip(cells, results):
            fh.write(f"{s!r},{d!r},{dist!r},{dfin!r}\n")
    return p


def _fig7(spec: ExperimentSpec, fig: _FigureDir) -> dict:
    p = _resolved(spec.overrides, {
        "n_agents": 10_000, "t_max": 5000,
        "runs": {"a": {"s": 0.4, "delta0": 0.04},
                 "b": {"s": 0.8, "delta0": 0.04},
                 "c": {"s": 0.4, "delta0": 0.4}},
    })
    for i, (tag, run) in enumerate(sorted(p["runs"].items())):
        seed = basins._cell_seed(spec.master_seed, i)
        cfg, dg = _abm_config(seed, run["s"], run["delta0"], p["n_agents"], p["t_max"])
        run_abm(cfg, dg).to_csv(fig.path(f"run_{tag}.csv"))
    return p


_PIPELINES = {"fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4,
              "fig5": _fig5, "fig6": _fig6, "fig7": _fig7}


def reproduce(spec: ExperimentSpec) -> Manifest:
    """Run one figure pipeline; on failure the partially written figure
    directory is removed before the error propagates."""
    root = spec.out_dir / spec.figure
    fig = _FigureDir(root)
    try:
        resolved = _PIPELINES[spec.figure](spec, fig)
        params = {"figure": spec.figure, "master_seed": spec.master_seed,
                  "parameters": _jsonable(resolved)}
        _write_json(fig.path("params.json"), params)
    except Exception:
        shutil.rmtree(root, ignore_errors=True)
        raise
    files = tuple((name, _digest(root / name)) for name in sorted(fig.files))
    manifest = Manifest(figure=spec.figure, root=root, files=files)
    _write_json(root / "manifest.json", manifest.to_dict())
    return manifest


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj
