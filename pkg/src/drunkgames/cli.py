"""Command-line interface.

Every subcommand is deterministic: seeds default to a fixed constant (42)
rather than the clock. Diagnostics go to stderr; data goes to files or
stdout. Exit codes: 0 success, 1 usage error, 2 configuration error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, basins, equilibria
from .abm import run_abm
from .basins import (DEFAULT_SEED, MonteCarloParams, estimate_attractiveness,
                     sweep_battle_line, sweep_g2_grid)
from .config import ConfigError, load_abm_config, load_game_config
from .dynamics import (DEFAULT_DT, DEFAULT_EPS, DEFAULT_SAMPLE_EVERY, DEFAULT_T_MAX,
                       State, field_grid, integrate, write_field_grid_csv,
                       write_trajectory_csv)
from .experiments import FIGURES, ExperimentSpec, reproduce
from .games import PayoffMatrix, classify_game, normalized


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_version(p: argparse.ArgumentParser) -> None:
    p.add_argument("--version", action="version", version=f"drunkgames {__version__}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _state(text: str) -> State:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'x,alpha', got {text!r}")
    return State(float(parts[0]), float(parts[1]))


def build_parser() -> _Parser:
    p = _Parser(prog="drunkgames",
                description="Simulate and analyze perception-coupled two-player games.")
    _add_version(p)
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    c = sub.add_parser("classify", help="classify a payoff matrix by its T-S quadrant")
    _add_version(c)
    c.add_argument("--T", type=float, required=True)
    c.add_argument("--S", type=float, required=True)
    c.add_argument("--R", type=float, default=1.0)
    c.add_argument("--P", type=float, default=0.0)

    c = sub.add_parser("field", help="sample the vector field on a lattice")
    _add_version(c)
    c.add_argument("--config", required=True)
    c.add_argument("--resolution", type=int, default=21)
    c.add_argument("--out", help="CSV path (stdout when omitted)")

    c = sub.add_parser("trajectory", help="integrate one trajectory")
    _add_version(c)
    c.add_argument("--config", required=True)
    c.add_argument("--x0", type=float, required=True)
    c.add_argument("--alpha0", type=float, required=True)
    c.add_argument("--dt", type=float, default=DEFAULT_DT)
    c.add_argument("--t-max", type=float, default=DEFAULT_T_MAX)
    c.add_argument("--eps", type=float, default=DEFAULT_EPS)
    c.add_argument("--sample-every", type=int, default=DEFAULT_SAMPLE_EVERY)
    c.add_argument("--target", type=_state, action="append", default=[],
                   help="convergence target 'x,alpha' (repeatable)")
    c.add_argument("--out", help="CSV path (stdout when omitted)")

    c = sub.add_parser("equilibria", help="enumerate and classify fixed points")
    _add_version(c)
    c.add_argument("--config", required=True)
    c.add_argument("--out", help="JSON path (stdout when omitted)")

    c = sub.add_parser("basin", help="Monte Carlo attractiveness of full cooperation")
    _add_version(c)
    c.add_argument("--config", required=True)
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--seed", type=int, default=DEFAULT_SEED)
    c.add_argument("--eps", type=float, default=DEFAULT_EPS)
    c.add_argument("--t-max", type=float, default=DEFAULT_T_MAX)
    c.add_argument("--dt", type=float, default=DEFAULT_DT)
    c.add_argument("--records", action="store_true", help="include per-sample records")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", help="JSON path (stdout when omitted)")

    c = sub.add_parser("sweep", help="attractiveness over a parameter grid")
    _add_version(c)
    which = c.add_subparsers(dest="sweep_kind", parser_class=_Parser, required=True)
    for kind, help_text in (("pub", "couple PD(S=-1,T=2) with a (S2,T2) grid"),
                            ("battle", "battle preset over an S1 grid")):
        s = which.add_parser(kind, help=help_text)
        _add_version(s)
        s.add_argument("--kappas", type=_float_list, default=[0.1, 1.0, 10.0])
        s.add_argument("--grid", type=int, default=21 if kind == "battle" else 41,
                       help="points per axis")
        s.add_argument("--samples", type=int, default=1000)
        s.add_argument("--seed", type=int, default=DEFAULT_SEED)
        s.add_argument("--jobs", type=int, default=None)
        s.add_argument("--out", help="CSV path (stdout when omitted)")

    c = sub.add_parser("abm", help="run the agent-based model")
    _add_version(c)
    c.add_argument("--abm-config", required=True)
    c.add_argument("--out", help="stats CSV path (stdout when omitted)")

    c = sub.add_parser("reproduce", help="regenerate a figure dataset directory")
    _add_version(c)
    c.add_argument("figure", choices=FIGURES)
    c.add_argument("--out-dir", required=True)
    c.add_argument("--seed", type=int, default=DEFAULT_SEED)
    c.add_argument("--jobs", type=int, default=None)
    c.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=JSON", help="override a pipeline parameter (repeatable)")
    return p


def _out_or_stdout(writer, out: str | None) -> None:
    if out is None:
        writer(sys.stdout)
    else:
        writer(out)


def _write_json_out(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _parse_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not KEY=JSON")
        key, _, raw = pair.partition("=")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw  # bare strings are convenient on the shell
    return out


def _cmd_classify(args) -> int:
    m = PayoffMatrix(R=args.R, S=args.S, T=args.T, P=args.P)
    print(classify_game(m))
    return 0


def _cmd_field(args) -> int:
    dg = load_game_config(args.config)
    grid = field_grid(dg, args.resolution)
    _out_or_stdout(lambda f: write_field_grid_csv(grid, f), args.out)
    return 0


def _cmd_trajectory(args) -> int:
    dg = load_game_config(args.config)
    traj = integrate(dg, State(args.x0, args.alpha0), dt=args.dt, t_max=args.t_max,
                     targets=args.target, eps=args.eps, sample_every=args.sample_every)
    _out_or_stdout(lambda f: write_trajectory_csv(traj, f), args.out)
    print(f"termination: {traj.termination.kind} at t={traj.termination.time}",
          file=sys.stderr)
    return 0


def _cmd_equilibria(args) -> int:
    dg = load_game_config(args.config)
    _write_json_out(equilibria.report(dg), args.out)
    return 0


def _cmd_basin(args) -> int:
    dg = load_game_config(args.config)
    res = estimate_attractiveness(dg, n_samples=args.samples, seed=args.seed,
                                  eps=args.eps, t_max=args.t_max, dt=args.dt,
                                  record_samples=args.records, jobs=args.jobs)
    _write_json_out(res.to_dict(), args.out)
    return 0


def _cmd_sweep(args) -> int:
    mc = MonteCarloParams(n_samples=args.samples)
    if args.sweep_kind == "pub":
        ds = sweep_g2_grid(normalized(-1.0, 2.0),
                           np.linspace(-1.0, 1.0, args.grid),
                           np.linspace(0.0, 2.0, args.grid),
                           args.kappas, mc, master_seed=args.seed, jobs=args.jobs)
    else:
        ds = sweep_battle_line(np.linspace(0.0, 1.0, args.grid), args.kappas,
                               mc, master_seed=args.seed, jobs=args.jobs)
    _out_or_stdout(lambda f: ds.to_csv(f), args.out)
    return 0


def _cmd_abm(args) -> int:
    cfg, dg = load_abm_config(args.abm_config)
    stats = run_abm(cfg, dg)
    _out_or_stdout(lambda f: stats.to_csv(f), args.out)
    return 0


def _cmd_reproduce(args) -> int:
    spec = ExperimentSpec(figure=args.figure, out_dir=Path(args.out_dir),
                          master_seed=args.seed, overrides=_parse_overrides(args.overrides),
                          jobs=args.jobs)
    manifest = reproduce(spec)
    for rel, digest in manifest.files:
        print(f"{digest}  {manifest.root / rel}", file=sys.stderr)
    return 0


_COMMANDS = {
    "classify": _cmd_classify,
    "field": _cmd_field,
    "trajectory": _cmd_trajectory,
    "equilibria": _cmd_equilibria,
    "basin": _cmd_basin,
    "sweep": _cmd_sweep,
    "abm": _cmd_abm,
    "reproduce": _cmd_reproduce,
}


def run_cli(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))
