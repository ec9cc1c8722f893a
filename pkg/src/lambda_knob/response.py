"""Probe susceptibility, Doppler averaging, group index and Ω knob scans."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .liouville import (IDX, assemble_generator, linear_response_batch,
                        steady_state)
from .model import DriveFields, NumericalError, SystemParams, ValidationError

DEFAULT_NODES = 64
DEFAULT_STEP_IN_GAMMA = 1e-3
DERIVATIVE_RTOL = 1e-2
CROSSOVER_WIDTH_IN_GAMMA = 1e-3


@dataclass(frozen=True)
class ResponseSample:
    """χ samples: ``chi_norm`` is χ₁₃ħγ/(N|d₁₃|²) = σ₁₃⁺, ``chi_phys = η·chi_norm``."""

    Delta1: np.ndarray
    chi_norm: np.ndarray
    chi_phys: np.ndarray


@dataclass(frozen=True)
class DopplerSpec:
    delta: float
    nodes: int = DEFAULT_NODES
    scheme: str = "gauss-hermite"

    def __post_init__(self):
        if self.delta < 0 or not math.isfinite(self.delta):
            raise ValidationError("doppler delta must be finite and nonnegative")
        if int(self.nodes) != self.nodes or self.nodes < 1:
            raise ValidationError("doppler nodes must be a positive integer")
        if self.scheme != "gauss-hermite":
            raise ValidationError(f"unknown quadrature scheme {self.scheme!r}")

    def rule(self) -> tuple[np.ndarray, np.ndarray]:
        """Velocity-class shifts x = kv and normalised weights for p(x) ∝ exp(-x²/2δ²)."""
        if self.delta == 0:
            return np.zeros(1), np.ones(1)
        t, w = np.polynomial.hermite.hermgauss(int(self.nodes))
        return math.sqrt(2.0) * self.delta * t, w / math.sqrt(math.pi)


@dataclass(frozen=True)
class GroupIndex:
    n_g: float
    n_g_half_step: float
    step: float
    converged: bool
    chi: complex
    dchi_dDelta1: complex
    # |Im χ| / |γ ∂Re χ/∂Δ₁|: size of gain/absorption relative to dispersion.
    im_ratio: float


@dataclass
class KnobScan:
    omega_grid: np.ndarray
    ng_values: np.ndarray
    crossovers: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    doppler: bool = False


def _chi13(params: SystemParams, drives: DriveFields, Delta4: np.ndarray,
           reading: str) -> np.ndarray:
    gen = assemble_generator(params, drives, reading)
    sigma0 = steady_state(gen)
    return linear_response_batch(gen, sigma0, Delta4, params.gamma)[:, IDX["13"]]


def probe_beat(drives: DriveFields, Delta1: np.ndarray) -> np.ndarray:
    """Δ₄ = Δ₁ - Δ₂ - Δ₃."""
    return np.asarray(Delta1, dtype=float) - drives.Delta2 - drives.Delta3


def susceptibility(params: SystemParams, drives: DriveFields, Delta1,
                   reading: str = "hamiltonian") -> ResponseSample:
    d1 = np.atleast_1d(np.asarray(Delta1, dtype=float))
    chi = _chi13(params, drives, probe_beat(drives, d1), reading)
    return ResponseSample(d1, chi, params.eta * chi)


def _doppler_chi13(params: SystemParams, drives: DriveFields, Delta1: np.ndarray,
                   doppler: DopplerSpec, reading: str) -> np.ndarray:
    xs, ws = doppler.rule()
    # Δ₁ and Δ₂ both shift by -x, so every velocity class sees the same Δ₄.
    d4 = probe_beat(drives, Delta1)
    total = np.zeros(Delta1.shape, dtype=complex)
    for x, w in zip(xs, ws):
        try:
            total += w * _chi13(params, drives.doppler_shifted(x), d4, reading)
        except NumericalError as exc:
            raise NumericalError(f"velocity class x={x:.6g} rad/s: {exc}") from exc
    return total


def doppler_susceptibility(params: SystemParams, drives: DriveFields, Delta1,
                           doppler: DopplerSpec,
                           reading: str = "hamiltonian") -> ResponseSample:
    d1 = np.atleast_1d(np.asarray(Delta1, dtype=float))
    chi = _doppler_chi13(params, drives, d1, doppler, reading)
    return ResponseSample(d1, chi, params.eta * chi)


def chi_norm(params: SystemParams, drives: DriveFields, Delta1,
             doppler: DopplerSpec | None = None,
             reading: str = "hamiltonian") -> np.ndarray:
    d1 = np.atleast_1d(np.asarray(Delta1, dtype=float))
    if doppler is None or doppler.delta == 0:
        return _chi13(params, drives, probe_beat(drives, d1), reading)
    return _doppler_chi13(params, drives, d1, doppler, reading)


def group_index(params: SystemParams, drives: DriveFields, Delta1: float = 0.0,
                doppler: DopplerSpec | None = None, step: float | None = None,
                reading: str = "hamiltonian") -> GroupIndex:
    """n_g = 1 + 2π Re χ + 2π ω₁ ∂Re χ/∂Δ₁ at probe detuning ``Delta1``.

    The derivative is a central difference with step ``h`` (default 1e-3γ),
    cross-checked against ``h/2``; disagreement above 1% clears ``converged``.
    """
    h = DEFAULT_STEP_IN_GAMMA * params.gamma if step is None else float(step)
    if h <= 0:
        raise ValidationError("derivative step must be positive")
    d1 = Delta1 + np.array([0.0, -h, h, -h / 2, h / 2])
    chi = params.eta * chi_norm(params, drives, d1, doppler, reading)
    omega1 = params.omega13 + Delta1

    d_full = (chi[2] - chi[1]) / (2 * h)
    d_half = (chi[4] - chi[3]) / h
    ng = 1 + 2 * math.pi * chi[0].real + 2 * math.pi * omega1 * d_full.real
    ng_half = 1 + 2 * math.pi * chi[0].real + 2 * math.pi * omega1 * d_half.real
    scale = max(abs(ng - 1), abs(ng_half - 1))
    converged = scale == 0 or abs(ng - ng_half) <= DERIVATIVE_RTOL * scale
    slope = abs(d_full.real) * params.gamma
    if chi[0].imag == 0:
        im_ratio = 0.0
    else:
        im_ratio = abs(chi[0].imag) / slope if slope > 0 else math.inf
    return GroupIndex(float(ng), float(ng_half), h, bool(converged), complex(chi[0]),
                      complex(d_full), float(im_ratio))


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("LAMBDA_KNOB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError("LAMBDA_KNOB_THREADS must be an integer") from None
    return 1


def knob_scan(params: SystemParams, drives: DriveFields, omega_grid,
              doppler: DopplerSpec | None = None, workers: int | None = None,
              step: float | None = None, reading: str = "hamiltonian") -> KnobScan:
    """n_g at Δ₁ = 0 over a grid of LL Rabi frequencies, with sign changes bracketed.

    Grid points whose steady state is degenerate get ``nan`` and are listed in
    ``skipped``.  Each sign change between neighbouring valid points is refined
    by bisection to a bracket narrower than 1e-3γ.
    """
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("omega grid must be a non-empty 1-D array")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValidationError("omega grid must be strictly increasing")

    def ng_at(omega: float) -> float:
        return group_index(params, drives.with_omega(omega), 0.0, doppler, step,
                           reading).n_g

    def safe(omega: float) -> float:
        try:
            return ng_at(omega)
        except NumericalError:
            return math.nan

    n = worker_count(workers)
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            values = np.array(list(pool.map(safe, grid)))
    else:
        values = np.array([safe(w) for w in grid])

    skipped = [float(w) for w, v in zip(grid, values) if math.isnan(v)]
    valid = np.flatnonzero(~np.isnan(values))
    width = CROSSOVER_WIDTH_IN_GAMMA * params.gamma
    crossovers = []
    for a, b in zip(valid[:-1], valid[1:]):
        fa, fb = values[a], values[b]
        if fa == 0 or np.sign(fa) == np.sign(fb):
            continue
        lo, hi = grid[a], grid[b]
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            fm = ng_at(mid)
            if np.sign(fm) == np.sign(fa):
                lo = mid
            else:
                hi = mid
        crossovers.append((float(lo), float(hi)))
    return KnobScan(grid, values, crossovers, skipped,
                    doppler is not None and doppler.delta > 0)
