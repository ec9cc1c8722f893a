"""Scenario configuration: presets, JSON loading, overrides and resolution."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .model import (PB_GAMMA, PB_LAMBDA13, RB_GAMMA, RB_LAMBDA13, DriveFields,
                    ProbeSpec, SystemParams, ValidationError, validate_drives,
                    validate_params)
from .pulse import PulseSpec
from .response import DEFAULT_NODES, DopplerSpec

SECTIONS = ("atom", "drives", "probe", "pulse", "doppler", "knob", "oracle")

_RB_ATOM = {"gamma": RB_GAMMA, "density": 2e12, "lambda13": RB_LAMBDA13,
            "Gamma12": 0.0, "Gamma13": 0.0, "Gamma23": 0.0}
_PB_ATOM = {"gamma": PB_GAMMA, "density": 2e14, "lambda13": PB_LAMBDA13,
            "Gamma12": 0.0, "Gamma13": 0.0, "Gamma23": 0.0}
_PULSE = {"Gamma": 2 * math.pi * 120e3, "L": 0.06, "E0": 1.0}
_ORACLE = {"draws": 10, "seed": 20240601, "g_in_gamma": 1e-3}


def _preset(atom, G, Omega, probe, knob, doppler=None):
    return {
        "atom": dict(atom),
        "drives": {"G_in_gamma": G, "Omega_in_gamma": Omega,
                   "Delta2_in_gamma": 0.0, "Delta3_in_gamma": 0.0},
        "probe": dict(probe),
        "pulse": dict(_PULSE),
        "doppler": dict(doppler or {"delta": 0.0, "nodes": DEFAULT_NODES}),
        "knob": dict(knob),
        "oracle": dict(_ORACLE),
    }


_FIG1_PROBE = {"Delta1_min_in_gamma": -5.0, "Delta1_max_in_gamma": 5.0, "points": 1001}
_FIG1_KNOB = {"Omega_min_in_gamma": 0.0, "Omega_max_in_gamma": 20.0, "points": 201}

# λ₁₃ values are assumptions (Rb D2, Pb 283 nm); everything else is from the figure captions.
PRESETS: dict[str, dict[str, Any]] = {
    "rb-fig1b": _preset(_RB_ATOM, 10.0, 5.0, _FIG1_PROBE, _FIG1_KNOB),
    "rb-fig1c": _preset(_RB_ATOM, 10.0, 5.0, _FIG1_PROBE, _FIG1_KNOB),
    "rb-fig1d": _preset(_RB_ATOM, 10.0, 5.0, _FIG1_PROBE, _FIG1_KNOB),
    "rb-fig2ab": _preset(
        _RB_ATOM, 200.0, 100.0,
        {"Delta1_min_in_gamma": -300.0, "Delta1_max_in_gamma": 300.0, "points": 1201},
        {"Omega_min_in_gamma": 0.0, "Omega_max_in_gamma": 300.0, "points": 151},
        {"delta": 1.33e9, "nodes": DEFAULT_NODES}),
    "pb-fig2c": _preset(
        _PB_ATOM, 297.0, 200.0,
        {"Delta1_min_in_gamma": -400.0, "Delta1_max_in_gamma": 400.0, "points": 1601},
        {"Omega_min_in_gamma": 0.0, "Omega_max_in_gamma": 500.0, "points": 101},
        {"delta_in_gamma": 25.0, "nodes": DEFAULT_NODES}),
}


def preset(name: str) -> dict[str, Any]:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") \
            from None


def load_config(path) -> dict[str, Any]:
    """Read a JSON config; a run manifest is accepted and its ``config`` used."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    if isinstance(data, dict) and "config" in data and "tool" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ValidationError(f"unknown config section(s): {sorted(unknown)}")
    return data


def set_value(config: dict[str, Any], dotted: str, value: Any) -> None:
    """Set ``section.key``; a ``*_in_gamma`` key replaces its unscaled twin and vice versa."""
    section, _, key = dotted.partition(".")
    if section not in SECTIONS or not key:
        raise ValidationError(f"bad override key {dotted!r}; use section.key")
    sec = config.setdefault(section, {})
    twin = key[:-len("_in_gamma")] if key.endswith("_in_gamma") else f"{key}_in_gamma"
    sec.pop(twin, None)
    if section == "atom" and key == "gamma":
        for k in ("gamma1", "gamma2"):
            sec.pop(k, None)
    sec[key] = value


def _grid(sec: dict[str, Any], name: str, gamma: float) -> np.ndarray:
    if f"{name}_in_gamma" in sec:
        return np.asarray(sec[f"{name}_in_gamma"], dtype=float) * gamma
    if name in sec:
        return np.asarray(sec[name], dtype=float)
    lo = sec.get(f"{name}_min_in_gamma")
    hi = sec.get(f"{name}_max_in_gamma")
    scale = gamma
    if lo is None:
        lo, hi, scale = sec.get(f"{name}_min"), sec.get(f"{name}_max"), 1.0
    if lo is None or hi is None:
        raise ValidationError(f"missing {name} grid")
    points = int(sec.get("points", 101))
    if points < 1:
        raise ValidationError("grid points must be >= 1")
    return np.linspace(float(lo), float(hi), points) * scale


@dataclass(frozen=True)
class Scenario:
    name: str
    params: SystemParams
    drives: DriveFields
    probe: ProbeSpec
    doppler: DopplerSpec | None
    pulse: PulseSpec | None
    omega_grid: np.ndarray | None
    oracle: dict[str, Any]

    def to_config(self) -> dict[str, Any]:
        """Fully resolved config in SI units; feeding it back reproduces the scenario."""
        cfg: dict[str, Any] = {
            "atom": self.params.to_dict(),
            "drives": self.drives.to_dict(),
            "probe": {"Delta1": self.probe.Delta1.tolist()},
            "oracle": dict(self.oracle),
        }
        if self.doppler is not None:
            cfg["doppler"] = {"delta": self.doppler.delta, "nodes": self.doppler.nodes}
        else:
            cfg["doppler"] = {"delta": 0.0, "nodes": DEFAULT_NODES}
        if self.pulse is not None:
            cfg["pulse"] = {"Gamma": self.pulse.Gamma, "L": self.pulse.L,
                            "E0": self.pulse.E0, "t0": self.pulse.t0}
        if self.omega_grid is not None:
            cfg["knob"] = {"Omega": self.omega_grid.tolist()}
        return cfg


def resolve(config: dict[str, Any], name: str = "custom", no_doppler: bool = False,
            nodes: int | None = None) -> Scenario:
    atom = dict(config.get("atom", {}))
    doppler_cfg = dict(config.get("doppler", {}))
    params = validate_params(atom)
    gamma = params.gamma

    if "delta_in_gamma" in doppler_cfg:
        delta = float(doppler_cfg["delta_in_gamma"]) * gamma
    else:
        delta = float(doppler_cfg.get("delta", params.doppler_delta))
    if nodes is None:
        nodes = int(doppler_cfg.get("nodes", DEFAULT_NODES))
    doppler = None
    if delta > 0 and not no_doppler:
        doppler = DopplerSpec(delta, nodes)
    params = replace(params, doppler_delta=0.0 if doppler is None else delta)

    drives = validate_drives(config.get("drives", {}), gamma)
    probe_cfg = config.get("probe", {})
    probe = ProbeSpec(_grid(probe_cfg, "Delta1", gamma)) if probe_cfg else ProbeSpec(np.zeros(1))

    pulse = None
    if config.get("pulse"):
        p = dict(config["pulse"])
        if "Gamma_in_gamma" in p:
            p["Gamma"] = float(p.pop("Gamma_in_gamma")) * gamma
        if "tau" in p and "Gamma" not in p:
            pulse = PulseSpec.from_tau(float(p.pop("tau")), float(p.pop("L")),
                                       **{k: float(v) for k, v in p.items()})
        else:
            try:
                pulse = PulseSpec(**{k: float(v) for k, v in p.items()})
            except TypeError as exc:
                raise ValidationError(f"bad pulse section: {exc}") from None

    knob_cfg = config.get("knob")
    omega_grid = _grid(knob_cfg, "Omega", gamma) if knob_cfg else None
    if omega_grid is not None and (omega_grid.ndim != 1 or np.any(np.diff(omega_grid) <= 0)):
        raise ValidationError("knob Omega grid must be strictly increasing")

    oracle = {**_ORACLE, **config.get("oracle", {})}
    return Scenario(name, params, drives, probe, doppler, pulse, omega_grid, oracle)
