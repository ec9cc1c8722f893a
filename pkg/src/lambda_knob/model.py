"""Domain types, unit conventions and derived constants for the Λ-atom model.

All rates, Rabi frequencies and detunings are angular (rad/s) internally.
Densities are atoms/cm³ and the dipole prefactor is in Gaussian units, so the
refractive index of the medium is ``1 + 2π Re χ``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields, replace
from typing import Any, Mapping

import numpy as np
from scipy import constants as sc

RB_GAMMA = 3 * math.pi * 1e6
PB_GAMMA = 4.75e7
RB_LAMBDA13 = 780e-9  # assumption: Rb D2 line, not quoted alongside the results
PB_LAMBDA13 = 283e-9  # assumption: Pb 283.3 nm resonance line

# μ_eff calibrated so that a LL Rabi frequency of 100γ (Rb γ) corresponds to 99.3 G.
_CALIBRATION_OMEGA = 100 * RB_GAMMA
_CALIBRATION_FIELD_TESLA = 99.3e-4
MU_EFF_DEFAULT = sc.hbar * _CALIBRATION_OMEGA / _CALIBRATION_FIELD_TESLA


class ValidationError(ValueError):
    """Raised for malformed or unphysical input parameters."""


class NumericalError(RuntimeError):
    """Raised when a numerical procedure cannot produce a trustworthy result."""


@dataclass(frozen=True)
class SystemParams:
    gamma1: float
    gamma2: float
    Gamma12: float = 0.0
    Gamma13: float = 0.0
    Gamma23: float = 0.0
    lambda13: float = RB_LAMBDA13
    density: float = 0.0
    doppler_delta: float = 0.0
    prefactor_eta: float | None = None

    @property
    def gamma(self) -> float:
        """Normalisation rate used for χ and σ⁺ (equal to γ₁)."""
        return self.gamma1

    @property
    def omega13(self) -> float:
        return 2 * math.pi * sc.c / self.lambda13

    @property
    def eta(self) -> float:
        if self.prefactor_eta is None:
            return dipole_prefactor(self.lambda13, self.gamma1, self.density)
        return self.prefactor_eta

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class DriveFields:
    """Control (``G``, on 1↔2) and LL coupling (``Omega``, on 2↔3) fields."""

    G: complex = 0.0
    Omega: complex = 0.0
    Delta2: float = 0.0
    Delta3: float = 0.0

    def with_omega(self, omega: complex) -> "DriveFields":
        return replace(self, Omega=omega)

    def doppler_shifted(self, x: float) -> "DriveFields":
        # ω₂ → ω₂ − kv; ω₃ is not shifted.
        return replace(self, Delta2=self.Delta2 - x)

    def to_dict(self) -> dict[str, Any]:
        return {
            "G": _complex_to_json(self.G),
            "Omega": _complex_to_json(self.Omega),
            "Delta2": self.Delta2,
            "Delta3": self.Delta3,
        }


@dataclass(frozen=True)
class ProbeSpec:
    Delta1: np.ndarray

    def __post_init__(self):
        grid = np.atleast_1d(np.asarray(self.Delta1, dtype=float))
        if grid.ndim != 1 or not np.all(np.isfinite(grid)):
            raise ValidationError("Delta1 must be a finite 1-D grid")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ValidationError("Delta1 grid must be strictly increasing")
        object.__setattr__(self, "Delta1", grid)

    def delta4(self, drives: DriveFields) -> np.ndarray:
        return self.Delta1 - drives.Delta2 - drives.Delta3


def _complex_to_json(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _as_complex(value, name: str) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValidationError(f"{name} must be a number or [re, im] pair")
        value = complex(float(value[0]), float(value[1]))
    try:
        z = complex(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be numeric") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValidationError(f"{name} must be finite")
    return z


def _as_float(value, name: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be numeric") from None
    if not math.isfinite(x):
        raise ValidationError(f"{name} must be finite")
    return x


def validate_params(raw: Mapping[str, Any]) -> SystemParams:
    """Build a :class:`SystemParams` from an ``atom`` config section.

    Rates may be given in rad/s or, with a ``_in_gamma`` suffix, in units of
    ``gamma``.  A bare ``gamma`` key sets ``gamma1 = gamma2``.  The returned
    object always carries an explicit ``prefactor_eta``.
    """
    raw = dict(raw)
    if "gamma" in raw:
        g = raw.pop("gamma")
        raw.setdefault("gamma1", g)
        raw.setdefault("gamma2", g)
    for key in ("gamma1", "gamma2"):
        if key not in raw:
            raise ValidationError(f"missing required field '{key}'")
    gamma1 = _as_float(raw["gamma1"], "gamma1")
    if gamma1 < 0:
        raise ValidationError("gamma1 must be nonnegative")

    values: dict[str, Any] = {}
    for f in fields(SystemParams):
        name = f.name
        if name == "prefactor_eta":
            continue
        scaled = f"{name}_in_gamma"
        if name in raw and scaled in raw:
            raise ValidationError(f"give either '{name}' or '{scaled}', not both")
        if scaled in raw:
            values[name] = _as_float(raw[scaled], scaled) * gamma1
        elif name in raw:
            values[name] = _as_float(raw[name], name)

    for name in ("gamma1", "gamma2", "Gamma12", "Gamma13", "Gamma23",
                 "density", "doppler_delta"):
        if values.get(name, 0.0) < 0:
            raise ValidationError(f"{name} must be nonnegative")
    if "lambda13" in values and values["lambda13"] <= 0:
        raise ValidationError("lambda13 must be positive")
    if values["gamma1"] == 0:
        raise ValidationError("gamma1 must be positive (it sets the normalisation rate)")

    eta = raw.get("prefactor_eta")
    params = SystemParams(**values)
    if eta is None:
        eta = params.eta
    else:
        eta = _as_float(eta, "prefactor_eta")
        if eta < 0:
            raise ValidationError("prefactor_eta must be nonnegative")
    params = replace(params, prefactor_eta=eta)

    if params.gamma1 != params.gamma2:
        warnings.warn("gamma1 != gamma2: the reference model assumes equal decay rates",
                      stacklevel=2)
    return params


def validate_drives(raw: Mapping[str, Any], gamma: float) -> DriveFields:
    """Build :class:`DriveFields`; ``*_in_gamma`` keys are scaled by ``gamma``."""
    values: dict[str, Any] = {}
    for name, conv in (("G", _as_complex), ("Omega", _as_complex),
                       ("Delta2", _as_float), ("Delta3", _as_float)):
        scaled = f"{name}_in_gamma"
        if name in raw and scaled in raw:
            raise ValidationError(f"give either '{name}' or '{scaled}', not both")
        if scaled in raw:
            values[name] = conv(raw[scaled], scaled) * gamma
        elif name in raw:
            values[name] = conv(raw[name], name)
    unknown = set(raw) - {n for k in ("G", "Omega", "Delta2", "Delta3")
                          for n in (k, f"{k}_in_gamma")}
    if unknown:
        raise ValidationError(f"unknown drive field(s): {sorted(unknown)}")
    return DriveFields(**values)


def dipole_prefactor(lambda13: float, gamma1: float, density: float) -> float:
    """Dimensionless η = N|d₁₃|²/(ħγ) from the spontaneous-emission rate.

    With 2γ₁ = 4ω₁₃³|d₁₃|²/(3ħc³) and the normalisation rate γ = γ₁ the decay
    rate cancels, leaving η = 3Nλ₁₃³/(16π³) (λ in cm, N in cm⁻³).
    """
    if lambda13 <= 0:
        raise ValidationError("lambda13 must be positive")
    if gamma1 <= 0:
        raise ValidationError("gamma1 must be positive")
    if density < 0:
        raise ValidationError("density must be nonnegative")
    lam_cm = lambda13 * 100.0
    return 3.0 * density * lam_cm**3 / (16.0 * math.pi**3)


def magnetic_field_for_rabi(Omega: float, mu_eff: float = MU_EFF_DEFAULT) -> float:
    """Static field (Gauss) giving an LL Rabi frequency ``Omega`` (rad/s): B = ħΩ/μ_eff."""
    if mu_eff <= 0:
        raise ValidationError("mu_eff must be positive")
    if Omega < 0:
        raise ValidationError("Omega must be nonnegative")
    return sc.hbar * Omega / mu_eff * 1e4


def doppler_width(temperature: float, mass: float, omega1: float) -> float:
    """δ = sqrt(k_B T ω₁² / (M c²)); T in K, M in kg, ω₁ in rad/s."""
    if temperature < 0 or mass <= 0 or omega1 <= 0:
        raise ValidationError("temperature must be >= 0, mass and omega1 > 0")
    return math.sqrt(sc.k * temperature * omega1**2 / (mass * sc.c**2))
