"""JSON-compatible configuration files for :class:`SimulationConfig`.

Layout (every key optional, unknown keys are fatal)::

    {
      "grid":     {"n": 1024, "length": 40.0},
      "epsilon":  0.1,
      "time":     {"t2_start": -0.5, "t2_end": 0.5, "dt2": null},
      "initial":  {"kind": "zero"}                      # or
                  {"kind": "soliton", "a": 1.0, "b": 0.0, "x0": 0.0, "phi0": 0.0}
                  {"kind": "table", "path": "field.csv"}
      "dress_initial": true,
      "forcing":  {"kind": "gaussian", "amplitude": 0.5, "width": 1.0, "center": 0.0}
                  {"kind": "table", "path": "forcing.csv"}
      "snapshots": {"every": 0, "times": []},
      "diagnostics": true
    }

``dt2: null`` selects the largest step allowed for the given epsilon and span.
Table paths are resolved relative to the config file.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .nlse import ConfigError, ForcingProfile, InitialCondition, SimulationConfig

_SCHEMA = {
    "grid": {"n", "length"},
    "epsilon": None,
    "time": {"t2_start", "t2_end", "dt2"},
    "initial": {"kind", "a", "b", "x0", "phi0", "path"},
    "dress_initial": None,
    "forcing": {"kind", "amplitude", "width", "center", "path"},
    "snapshots": {"every", "times"},
    "diagnostics": None,
}


def _check_keys(data: dict) -> None:
    for key, value in data.items():
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown key")
        allowed = _SCHEMA[key]
        if allowed is not None:
            if not isinstance(value, dict):
                raise ConfigError(key, "expected a section (object)")
            for sub in value:
                if sub not in allowed:
                    raise ConfigError(f"{key}.{sub}", "unknown key")


def config_from_dict(data: dict, base_dir: Path | None = None) -> SimulationConfig:
    from .io import read_field_csv

    _check_keys(data)
    defaults = SimulationConfig()
    grid = data.get("grid", {})
    time = data.get("time", {})
    n = int(grid.get("n", defaults.n))
    length = float(grid.get("length", defaults.length))

    def _table(section: str, entry: dict):
        if "path" not in entry:
            raise ConfigError(f"{section}.path", "table kind needs a path")
        path = Path(entry["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        field = read_field_csv(path)
        if field.grid.n != n or abs(field.grid.length - length) > 1e-9 * length:
            raise ConfigError(f"{section}.path", "table grid differs from the config grid")
        return field.values

    ini = dict(data.get("initial", {"kind": "zero"}))
    try:
        kind = ini.get("kind", "zero")
        if kind == "table":
            initial = InitialCondition("table", values=_table("initial", ini))
        else:
            ini.pop("path", None)
            initial = InitialCondition(**ini)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("initial", str(exc)) from None

    frc = dict(data.get("forcing", {}))
    try:
        if frc.get("kind") == "table":
            forcing = ForcingProfile("table", values=_table("forcing", frc))
        else:
            frc.pop("path", None)
            forcing = ForcingProfile(**frc)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("forcing", str(exc)) from None

    snaps = data.get("snapshots", {})
    dt2 = time.get("dt2", defaults.dt2)
    cfg = SimulationConfig(
        n=n,
        length=length,
        epsilon=float(data.get("epsilon", defaults.epsilon)),
        t2_start=float(time.get("t2_start", defaults.t2_start)),
        t2_end=float(time.get("t2_end", defaults.t2_end)),
        dt2=None if dt2 is None else float(dt2),
        initial=initial,
        dress_initial=bool(data.get("dress_initial", defaults.dress_initial)),
        forcing=forcing,
        snapshot_every=int(snaps.get("every", defaults.snapshot_every)),
        snapshot_times=tuple(float(t) for t in snaps.get("times", ())),
        diagnostics=bool(data.get("diagnostics", defaults.diagnostics)),
    )
    try:
        cfg.forcing.evaluate(cfg.grid)
    except ValueError as exc:
        raise ConfigError("forcing", str(exc)) from None
    return cfg


def parse_config(path) -> SimulationConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("file", f"not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("file", "top level must be an object")
    return config_from_dict(data, path.parent)


def config_to_dict(cfg: SimulationConfig) -> dict[str, Any]:
    """Plain-data echo of a config; tables are replaced by inline summaries."""
    ini: dict[str, Any] = {"kind": cfg.initial.kind}
    if cfg.initial.kind == "soliton":
        ini.update(a=cfg.initial.a, b=cfg.initial.b, x0=cfg.initial.x0, phi0=cfg.initial.phi0)
    frc: dict[str, Any] = {"kind": cfg.forcing.kind}
    if cfg.forcing.kind != "table":
        frc.update(amplitude=cfg.forcing.amplitude, width=cfg.forcing.width,
                   center=cfg.forcing.center)
    return {
        "grid": {"n": cfg.n, "length": cfg.length},
        "epsilon": cfg.epsilon,
        "time": {"t2_start": cfg.t2_start, "t2_end": cfg.t2_end, "dt2": cfg.dt2},
        "initial": ini,
        "dress_initial": cfg.dress_initial,
        "forcing": frc,
        "snapshots": {"every": cfg.snapshot_every, "times": list(cfg.snapshot_times)},
        "diagnostics": cfg.diagnostics,
    }


def emit_config(cfg: SimulationConfig, path=None) -> str:
    if cfg.initial.kind == "table" or cfg.forcing.kind == "table":
        raise ConfigError("initial", "table-backed configs are emitted with their table files")
    text = json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def config_hash(cfg: SimulationConfig) -> str:
    h = hashlib.sha256(json.dumps(config_to_dict(cfg), sort_keys=True).encode())
    for arr in (cfg.initial.values, cfg.forcing.values):
        if arr is not None:
            h.update(arr.tobytes())
    return h.hexdigest()[:16]


REFERENCE_SCENARIO = {
    "grid": {"n": 1024, "length": 40.0},
    "epsilon": 0.1,
    "time": {"t2_start": -0.5, "t2_end": 0.5, "dt2": None},
    "initial": {"kind": "zero"},
    "dress_initial": True,
    "forcing": {"kind": "gaussian", "amplitude": 0.5, "width": 1.0, "center": 0.0},
    "snapshots": {"every": 0, "times": []},
    "diagnostics": False,
}


def reference_config(**overrides) -> SimulationConfig:
    return config_from_dict(REFERENCE_SCENARIO).replace(**overrides)
