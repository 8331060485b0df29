"""JSON configs, CSV traces and summary documents.

A config file is one JSON object whose keys mirror :class:`ScenarioConfig`.
It may instead name a ``"preset"`` and override any subset of its fields.
Angles are in radians, powers in pu on the system base and times in seconds.
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import json
import math
from typing import Any

from .converters import GflcParams, GfmcParams
from .phasor import NetworkParams
from .presets import preset
from .simulator import Event, FaultSpec, OutputSpec, ScenarioConfig, SimResult, SimSettings, Trace


class ConfigError(ValueError):
    """The config document is malformed or names unknown fields."""


CSV_DIGITS = 9
EVENT_COLUMNS = ["t", "kind", "unit", "mode", "delta", "thetas", "varpis"]


def _num(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    return f"{v:.{CSV_DIGITS}g}"


# --- configs ----------------------------------------------------------------


def _build(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build a config from a plain dict; a ``preset`` key starts from that case."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = copy.deepcopy(data)
    base: dict = {}
    if "preset" in data:
        name = data.pop("preset")
        vfdc = data.pop("vfdc", None)
        try:
            base = config_to_dict(preset(name, vfdc))
        except KeyError as exc:
            raise ConfigError(f"unknown preset {name!r}") from exc
    merged = _merge(base, data)
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown top-level field(s) {sorted(unknown)}")

    gflcs = merged.get("gflcs", [{}])
    if not isinstance(gflcs, list) or not gflcs:
        raise ConfigError("gflcs must be a non-empty list")
    fault = merged.get("fault", {})
    cfg = ScenarioConfig(
        net=_build(NetworkParams, merged.get("net", {}), "net"),
        gfmc=_build(GfmcParams, merged.get("gfmc", {}), "gfmc"),
        gflcs=[_build(GflcParams, g, f"gflcs[{k}]") for k, g in enumerate(gflcs)],
        gflc_p_ref=list(merged.get("gflc_p_ref", [None] * len(gflcs))),
        fault=None if fault is None else _build(FaultSpec, fault, "fault"),
        sim=_build(SimSettings, merged.get("sim", {}), "sim"),
        outputs=_build(OutputSpec, merged.get("outputs", {}), "outputs"),
        name=str(merged.get("name", "")),
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def save_config(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)


def set_param(cfg: ScenarioConfig, path: str, value: float) -> ScenarioConfig:
    """Copy of ``cfg`` with the dotted field ``path`` (e.g. ``gfmc.i_max``, ``gflcs.0.k_2p``) set."""
    data = config_to_dict(cfg)
    keys = path.split(".")
    node: Any = data
    for k in keys[:-1]:
        node = _child(node, k, path)
    last = keys[-1]
    if isinstance(node, list):
        idx = _index(node, last, path)
        node[idx] = value
    elif isinstance(node, dict) and last in node:
        node[last] = value
    else:
        raise ConfigError(f"unknown parameter path {path!r}")
    return config_from_dict(data)


def _index(node: list, key: str, path: str) -> int:
    if not key.isdigit() or int(key) >= len(node):
        raise ConfigError(f"unknown parameter path {path!r}")
    return int(key)


def _child(node, key, path):
    if isinstance(node, list):
        return node[_index(node, key, path)]
    if isinstance(node, dict) and key in node and node[key] is not None:
        return node[key]
    raise ConfigError(f"unknown parameter path {path!r}")


def parse_range(spec: str) -> list[float]:
    """``a:b:n`` as ``n`` evenly spaced values, or a comma-separated list."""
    spec = spec.strip()
    if not spec:
        raise ConfigError("empty range")
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range {spec!r} is not a:b:n")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ConfigError("empty range")
        if n == 1:
            return [a]
        return [a + (b - a) * k / (n - 1) for k in range(n)]
    vals = [float(v) for v in spec.split(",") if v.strip()]
    if not vals:
        raise ConfigError("empty range")
    return vals


# --- CSV ----------------------------------------------------------------------


def write_trace_csv(trace: Trace, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace.columns)
        for row in trace.rows:
            w.writerow([_num(v) for v in row])


def write_events_csv(events: list[Event], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_COLUMNS)
        for e in events:
            s = e.snapshot
            w.writerow([
                _num(e.t),
                e.kind,
                e.unit,
                s.get("mode", ""),
                _num(s["delta"]),
                ";".join(_num(v) for v in s["thetas"]),
                ";".join(_num(v) for v in s.get("varpis", [])),
            ])


def to_plain(obj):
    """JSON-safe copy: numpy scalars to float, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, str) or obj is None or isinstance(obj, (bool, int, float)):
        return obj
    return str(obj)


def summary_document(result: SimResult) -> dict:
    return to_plain(result.summary.to_dict())


def write_json(doc: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(to_plain(doc), fh, indent=2, sort_keys=True, allow_nan=False)


def write_outputs(result: SimResult) -> None:
    """Write the CSVs named in the run's :class:`OutputSpec`, if any."""
    out = result.config.outputs
    if out.trace_csv:
        write_trace_csv(result.trace, out.trace_csv)
    if out.events_csv:
        write_events_csv(result.events, out.events_csv)
