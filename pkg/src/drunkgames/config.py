"""JSON game/run configuration files.

A game config holds either explicit matrices plus coupling or a preset
reference, never both. Errors carry the file position or the offending
field path.
"""

from __future__ import annotations

import json
from pathlib import Path

from .abm import AbmConfig
from .games import DrunkGame, PayoffMatrix, QPoly, preset


class ConfigError(ValueError):
    """Invalid configuration file; message names the file/field."""


_MATRIX_KEYS = ("R", "S", "T", "P")


def _load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror or e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return obj


def _number(obj: dict, key: str, where: str) -> float:
    if key not in obj:
        raise ConfigError(f"{where}{key}: missing required field")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}{key}: expected a number, got {v!r}")
    return float(v)


def _matrix(obj, where: str) -> PayoffMatrix:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object with keys R,S,T,P")
    extra = set(obj) - set(_MATRIX_KEYS)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    return PayoffMatrix(**{k: _number(obj, k, f"{where}.") for k in _MATRIX_KEYS})


def _qpoly(obj, where: str) -> QPoly:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError(f"{where}: expected an object with a 'type' key")
    kind = obj["type"]
    if kind == "linear":
        extra = set(obj) - {"type", "mu"}
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
        return QPoly.linear(_number(obj, "mu", f"{where}."))
    if kind == "poly":
        extra = set(obj) - {"type", "coeffs"}
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
        coeffs = obj.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError(f"{where}.coeffs: expected a non-empty list of numbers")
        for i, c in enumerate(coeffs):
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise ConfigError(f"{where}.coeffs[{i}]: expected a number, got {c!r}")
        return QPoly(coeffs)
    raise ConfigError(f"{where}.type: expected 'linear' or 'poly', got {kind!r}")


def parse_game_config(obj: dict, where: str = "config") -> DrunkGame:
    explicit = [k for k in ("g1", "g2", "kappa", "q") if k in obj]
    has_preset = "preset" in obj
    if has_preset and explicit:
        raise ConfigError(f"{where}: give either a preset or explicit "
                          f"matrices, not both ({explicit + ['preset']})")
    if not has_preset and not explicit:
        raise ConfigError(f"{where}: needs a 'preset' or explicit g1/g2/kappa/q")
    unknown = set(obj) - {"g1", "g2", "kappa", "q", "preset"}
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    if has_preset:
        spec = obj["preset"]
        if not isinstance(spec, dict) or "name" not in spec:
            raise ConfigError(f"{where}.preset: expected an object with a 'name'")
        extra = set(spec) - {"name", "params"}
        if extra:
            raise ConfigError(f"{where}.preset: unknown keys {sorted(extra)}")
        params = spec.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{where}.preset.params: expected an object")
        try:
            return preset(spec["name"], params)
        except ValueError as e:
            raise ConfigError(f"{where}.preset: {e}") from e
    missing = [k for k in ("g1", "g2", "kappa", "q") if k not in obj]
    if missing:
        raise ConfigError(f"{where}: missing required fields {missing}")
    try:
        return DrunkGame(g1=_matrix(obj["g1"], f"{where}.g1"),
                         g2=_matrix(obj["g2"], f"{where}.g2"),
                         kappa=_number(obj, "kappa", f"{where}."),
                         q=_qpoly(obj["q"], f"{where}.q"))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e


def load_game_config(path) -> DrunkGame:
    return parse_game_config(_load_json(path), where=str(path))


def game_to_config(dg: DrunkGame) -> dict:
    """Explicit-form dict that parses back to an identical game."""
    def mat(m: PayoffMatrix) -> dict:
        return {"R": m.R, "S": m.S, "T": m.T, "P": m.P}

    c = dg.q.coefficients
    if len(c) == 2 and c[1] == 1.0:
        q = {"type": "linear", "mu": -c[0]}
    else:
        q = {"type": "poly", "coeffs": list(c)}
    return {"g1": mat(dg.g1), "g2": mat(dg.g2), "kappa": dg.kappa, "q": q}


_ABM_KEYS = {"n_agents", "beta", "kappa", "mu", "x0", "alpha1", "alpha2",
             "delta0", "split", "t_max", "seed", "perception_mode",
             "alpha_update", "allow_large_pairwise"}


def parse_abm_config(obj: dict, where: str = "config") -> tuple[AbmConfig, DrunkGame]:
    if "game" not in obj:
        raise ConfigError(f"{where}: missing required field 'game'")
    unknown = set(obj) - {"game", "abm"}
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    dg = parse_game_config(obj["game"], where=f"{where}.game")
    params = obj.get("abm", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}.abm: expected an object")
    unknown = set(params) - _ABM_KEYS
    if unknown:
        raise ConfigError(f"{where}.abm: unknown keys {sorted(unknown)}")
    params = dict(params)
    delta0 = params.pop("delta0", None)
    if delta0 is not None and ("alpha1" in params or "alpha2" in params):
        raise ConfigError(f"{where}.abm: give either delta0 or alpha1/alpha2, not both")
    try:
        if delta0 is not None:
            cfg = AbmConfig.with_heterogeneity(float(delta0), **params)
        else:
            cfg = AbmConfig(**params)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}.abm: {e}") from e
    return cfg, dg


def load_abm_config(path) -> tuple[AbmConfig, DrunkGame]:
    return parse_abm_config(_load_json(path), where=str(path))
