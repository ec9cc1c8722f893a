"""Brute-force check of the perturbative solver.

The density-matrix equations are transcribed term by term (no generator
matrices), integrated with fixed-step RK4 under a weak probe, and the
σ₁₃ coherence is demodulated at e^{-iΔ₄t} to estimate σ₁₃⁺.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .liouville import (IDX, assemble_generator, linear_response, steady_state,
                        to_vector)
from .model import DriveFields, NumericalError, SystemParams, ValidationError

DT_SAFETY = 50.0
TRACE_TOL = 1e-6


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # (n, 9) in liouville.ORDER
    g: complex
    gamma: float
    trace_drift: float
    hermiticity_drift: float

    @property
    def sigma13(self) -> np.ndarray:
        return self.states[:, IDX["13"]]

    def to_csv(self, path) -> None:
        trace = self.states[:, 0] + self.states[:, 1] + self.states[:, 2]
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "Re_sigma13", "Im_sigma13", "trace_drift"])
            for t, s, tr in zip(self.t, self.sigma13, trace):
                w.writerow([f"{t:.17e}", f"{s.real:.17e}", f"{s.imag:.17e}",
                            f"{abs(tr - 1):.17e}"])


@numba.njit(cache=True)
def _rhs(s, t, G, Om, g, d4, d2, d3, g1, g2, G12, G13, G23, literal):
    s11, s22, s33, s12, s21, s13, s31, s23, s32 = (
        s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7], s[8])
    Gc = G.conjugate()
    Omc = Om.conjugate()
    p = g * np.exp(-1j * d4 * t)
    pc = p.conjugate()
    gs = g1 + g2
    out = np.empty(9, dtype=np.complex128)

    d11 = 1j * G * s21 + 1j * p * s31 - 1j * Gc * s12 - 1j * pc * s13 - 2 * gs * s11
    d22 = 1j * Gc * s12 + 1j * Om * s32 - 1j * G * s21 - 1j * Omc * s23 + 2 * g2 * s11
    d12 = (-(gs + G12 - 1j * d2) * s12 + 1j * G * s22 + 1j * p * s32
           - 1j * G * s11 - 1j * Omc * s13)
    d21 = (-(gs + G12 + 1j * d2) * s21 - 1j * Gc * s22 - 1j * pc * s23
           + 1j * Gc * s11 + 1j * Om * s31)
    d13 = (-(gs + G13 - 1j * (d2 + d3)) * s13 + 1j * G * s23 + 1j * p * s33
           - 1j * p * s11 - 1j * Om * s12)
    d31 = (-(gs + G13 + 1j * (d2 + d3)) * s31 - 1j * Gc * s32 - 1j * pc * s33
           + 1j * pc * s11 + 1j * Omc * s21)
    d23 = (-(G23 - 1j * d3) * s23 + 1j * Gc * s13 + 1j * Om * s33 - 1j * Om * s22)
    d32 = (-(G23 + 1j * d3) * s32 - 1j * G * s31 - 1j * Omc * s33 + 1j * Omc * s22)
    if literal:
        d23 += -1j * p * s23
        d32 += 1j * pc * s32
    else:
        d23 += -1j * p * s21
        d32 += 1j * pc * s12

    out[0] = d11
    out[1] = d22
    out[2] = -d11 - d22  # trace conservation
    out[3] = d12
    out[4] = d21
    out[5] = d13
    out[6] = d31
    out[7] = d23
    out[8] = d32
    return out


@numba.njit(cache=True)
def _rk4(s0, dt, n_steps, save_every, G, Om, g, d4, d2, d3, g1, g2,
         G12, G13, G23, literal):
    n_saved = n_steps // save_every + 1
    saved = np.empty((n_saved, 9), dtype=np.complex128)
    s = s0.copy()
    saved[0] = s
    k = 1
    for n in range(n_steps):
        t = n * dt
        k1 = _rhs(s, t, G, Om, g, d4, d2, d3, g1, g2, G12, G13, G23, literal)
        k2 = _rhs(s + 0.5 * dt * k1, t + 0.5 * dt, G, Om, g, d4, d2, d3, g1, g2,
                  G12, G13, G23, literal)
        k3 = _rhs(s + 0.5 * dt * k2, t + 0.5 * dt, G, Om, g, d4, d2, d3, g1, g2,
                  G12, G13, G23, literal)
        k4 = _rhs(s + dt * k3, t + dt, G, Om, g, d4, d2, d3, g1, g2,
                  G12, G13, G23, literal)
        s = s + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if (n + 1) % save_every == 0:
            saved[k] = s
            k += 1
    return saved


def rhs(sigma_vec: np.ndarray, t: float, params: SystemParams, drives: DriveFields,
        g: complex, Delta4: float, reading: str = "hamiltonian") -> np.ndarray:
    """Time derivative of the coherence vector, evaluated equation by equation."""
    return _rhs(np.asarray(sigma_vec, dtype=np.complex128), float(t),
                complex(drives.G), complex(drives.Omega), complex(g), float(Delta4),
                float(drives.Delta2), float(drives.Delta3), params.gamma1,
                params.gamma2, params.Gamma12, params.Gamma13, params.Gamma23,
                reading == "literal")


def max_step(params: SystemParams, drives: DriveFields, Delta4: float) -> float:
    rate = max(abs(drives.G), abs(drives.Omega), params.gamma1, params.gamma2,
               abs(Delta4))
    return 1.0 / (DT_SAFETY * rate)


def initial_state(params: SystemParams, drives: DriveFields,
                  reading: str = "hamiltonian") -> np.ndarray:
    try:
        sigma0 = steady_state(assemble_generator(params, drives, reading))
    except NumericalError:
        sigma0 = np.diag([0.0, 0.0, 1.0]).astype(complex)
    return to_vector(sigma0)


def integrate(params: SystemParams, drives: DriveFields, g: complex, Delta4: float,
              t_end: float, dt: float, save_every: int = 1,
              reading: str = "hamiltonian", sigma_init: np.ndarray | None = None,
              ) -> Trajectory:
    """RK4 integration from the zeroth-order steady state with the probe on at t=0."""
    if dt <= 0 or t_end <= 0:
        raise ValidationError("dt and t_end must be positive")
    limit = max_step(params, drives, Delta4)
    if dt > limit * (1 + 1e-12):
        raise ValidationError(f"dt={dt:.3e} exceeds the stability limit {limit:.3e}")
    n_steps = int(round(t_end / dt))
    save_every = max(1, int(save_every))
    s0 = initial_state(params, drives, reading) if sigma_init is None \
        else np.asarray(sigma_init, dtype=np.complex128)
    saved = _rk4(s0, dt, n_steps, save_every, complex(drives.G), complex(drives.Omega),
                 complex(g), float(Delta4), float(drives.Delta2), float(drives.Delta3),
                 params.gamma1, params.gamma2, params.Gamma12, params.Gamma13,
                 params.Gamma23, reading == "literal")
    t = np.arange(saved.shape[0]) * dt * save_every

    trace = saved[:, 0] + saved[:, 1] + saved[:, 2]
    trace_drift = float(np.max(np.abs(trace - trace[0])))
    pairs = ((3, 4), (5, 6), (7, 8))
    herm = max(float(np.max(np.abs(saved[:, i] - saved[:, j].conj()))) for i, j in pairs)
    herm = max(herm, float(np.max(np.abs(saved[:, :3].imag))))
    if trace_drift > TRACE_TOL:
        raise NumericalError(f"trace drift {trace_drift:.2e} exceeds {TRACE_TOL:g}; "
                             "reduce dt")
    return Trajectory(t, saved, complex(g), params.gamma, trace_drift, herm)


def demodulate(traj: Trajectory, Delta4: float,
               window: tuple[float, float] | None = None) -> complex:
    """Project σ₁₃(t) on e^{-iΔ₄t} over ``window`` and divide by g/γ.

    The default window is the second half of the trajectory.  For Δ₄ ≠ 0 the
    window is trimmed from its start to a whole number of beat periods, so
    constant and harmonic components at other multiples of Δ₄ project out
    exactly.
    """
    if window is None:
        window = (0.5 * traj.t[-1], traj.t[-1])
    t0, t1 = window
    if not t0 < t1:
        raise ValidationError("window must satisfy start < end")
    dt = traj.t[1] - traj.t[0]
    i1 = int(np.searchsorted(traj.t, t1 + 0.5 * dt)) - 1
    i0 = int(np.searchsorted(traj.t, t0 - 0.5 * dt))
    n = i1 - i0
    if Delta4 != 0:
        period = 2 * math.pi / abs(Delta4)
        if (t1 - t0) < period:
            raise ValidationError(
                f"window {t1 - t0:.3e} s shorter than one beat period {period:.3e} s")
        per = period / dt
        n_periods = int(math.floor(n / per + 1e-9))
        n = int(round(n_periods * per))
        i0 = i1 - n
    if n < 1:
        raise ValidationError("window contains no samples")
    t = traj.t[i0:i1]
    s = traj.sigma13[i0:i1]
    # Rectangle rule over whole periods is exact for the harmonic content.
    proj = np.mean(s * np.exp(1j * Delta4 * t))
    return complex(proj / (traj.g / traj.gamma))


def slowest_rate(params: SystemParams, drives: DriveFields,
                 reading: str = "hamiltonian") -> float:
    """Smallest nonzero decay rate of the free evolution (sets the transient time)."""
    ev = np.linalg.eigvals(assemble_generator(params, drives, reading).L0)
    rates = np.sort(-ev.real)
    return float(rates[1])


def oracle_sigma13(params: SystemParams, drives: DriveFields, Delta4: float,
                   g: float | None = None, phases: int = 4, t_settle: float | None = None,
                   min_window: float | None = None, reading: str = "hamiltonian",
                   max_steps: int = 40_000_000) -> complex:
    """Oracle estimate of σ₁₃⁺ by time integration and demodulation.

    ``phases`` runs are made with probe phases 2πk/phases and combined with
    weights e^{-iφ_k}; for ``phases >= 3`` this removes σ⁰, the σ⁻ sideband and
    the second-order terms at any Δ₄ (including Δ₄ = 0).  ``phases=1`` is a
    plain single-run demodulation.

    The transient is allowed ``t_settle`` (default: 25 times the slowest free
    decay time, at least 20/γ) before the demodulation window opens.  The
    window spans at least ``min_window`` (default 20/γ), rounded up to whole
    beat periods.
    """
    gamma = params.gamma
    g = 1e-3 * gamma if g is None else float(g)
    if t_settle is None:
        t_settle = max(20.0 / gamma, 25.0 / slowest_rate(params, drives, reading))
    if min_window is None:
        min_window = 20.0 / gamma
    dt = max_step(params, drives, Delta4)
    if Delta4 != 0:
        period = 2 * math.pi / abs(Delta4)
        m = math.ceil(period / dt)
        dt = period / m
        window = max(1, math.ceil(min_window / period)) * period
    else:
        window = min_window
    t_end = t_settle + window
    n_steps = int(math.ceil(t_end / dt))
    if n_steps > max_steps:
        raise NumericalError(f"oracle run needs {n_steps} steps (limit {max_steps})")
    t_end = n_steps * dt

    est = 0.0 + 0.0j
    for k in range(phases):
        phase = np.exp(2j * math.pi * k / phases)
        traj = integrate(params, drives, g * phase, Delta4, t_end, dt, reading=reading)
        if phases == 1:
            return demodulate(traj, Delta4, (t_end - window, t_end))
        # demodulate divides by g·e^{iφ}, which already applies the e^{-iφ} weight.
        est += demodulate(traj, Delta4, (t_end - window, t_end))
    return complex(est / phases)


def random_drives(rng: np.random.Generator, gamma: float, base: DriveFields,
                  ) -> tuple[DriveFields, float]:
    """One draw of (drives, Δ₁) with Δ₁ ∈ [-5γ, 5γ], Ω ∈ [0, 10γ], G ∈ [5γ, 200γ]."""
    delta1 = rng.uniform(-5.0, 5.0) * gamma
    omega = rng.uniform(0.0, 10.0) * gamma
    G = rng.uniform(5.0, 200.0) * gamma
    return DriveFields(G=G, Omega=omega, Delta2=base.Delta2, Delta3=base.Delta3), delta1


def compare(params: SystemParams, drives: DriveFields, Delta1: float,
            g: float | None = None, phases: int = 4,
            reading: str = "hamiltonian") -> dict:
    """Algebraic vs time-domain σ₁₃⁺ at one parameter point."""
    d4 = Delta1 - drives.Delta2 - drives.Delta3
    gen = assemble_generator(params, drives, reading)
    algebraic = linear_response(gen, steady_state(gen), d4, params.gamma)[IDX["13"]]
    oracle = oracle_sigma13(params, drives, d4, g=g, phases=phases, reading=reading)
    rel = abs(algebraic - oracle) / abs(oracle) if oracle != 0 else math.inf
    return {"Delta1": Delta1, "Delta4": d4, "G": abs(drives.G), "Omega": abs(drives.Omega),
            "algebraic": complex(algebraic), "oracle": complex(oracle),
            "rel_error": float(rel)}
