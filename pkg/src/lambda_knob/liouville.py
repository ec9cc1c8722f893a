"""Liouville generator of the driven Λ system and its probe linear response.

Levels: |1⟩ excited, |2⟩ and |3⟩ lower.  In the rotating frame
ρ₁₂ = σ₁₂e^{-iω₂t}, ρ₁₃ = σ₁₃e^{-i(ω₂+ω₃)t}, ρ₂₃ = σ₂₃e^{-iω₃t} the control and
LL coupling terms are time independent and the probe enters as
``g e^{-iΔ₄t} V₊ + g* e^{iΔ₄t} V₋``.

State vectors use the fixed ordering in :data:`ORDER`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DriveFields, NumericalError, SystemParams

ORDER = ("11", "22", "33", "12", "21", "13", "31", "23", "32")
POPULATIONS = (0, 1, 2)
IDX = {name: k for k, name in enumerate(ORDER)}

# Row-major flat index (3i + j) of each ORDER entry.
_FLAT = np.array([3 * (int(s[0]) - 1) + (int(s[1]) - 1) for s in ORDER])
# Position of the transposed element in ORDER (σ_ij ↔ σ_ji).
CONJ_PAIR = np.array([IDX[s[::-1]] for s in ORDER])

READINGS = ("hamiltonian", "literal")
DEGENERACY_RTOL = 1e-8


@dataclass(frozen=True)
class Generator:
    L0: np.ndarray
    Vplus: np.ndarray
    Vminus: np.ndarray


def to_vector(sigma: np.ndarray) -> np.ndarray:
    return np.asarray(sigma, dtype=complex).reshape(9)[_FLAT]


def to_matrix(vec: np.ndarray) -> np.ndarray:
    out = np.zeros(9, dtype=complex)
    out[_FLAT] = vec
    return out.reshape(3, 3)


def _ket(i: int) -> np.ndarray:
    v = np.zeros((3, 1), dtype=complex)
    v[i - 1, 0] = 1.0
    return v


def _op(i: int, j: int) -> np.ndarray:
    return _ket(i) @ _ket(j).T


def _permute(S: np.ndarray) -> np.ndarray:
    return S[np.ix_(_FLAT, _FLAT)]


def _commutator_super(H: np.ndarray) -> np.ndarray:
    """Matrix of ρ ↦ -i[H, ρ] in row-major vectorisation."""
    eye = np.eye(3)
    return -1j * (np.kron(H, eye) - np.kron(eye, H.T))


def _dissipator_super(C: np.ndarray) -> np.ndarray:
    eye = np.eye(3)
    CdC = C.conj().T @ C
    return np.kron(C, C.conj()) - 0.5 * (np.kron(CdC, eye) + np.kron(eye, CdC.T))


def assemble_generator(params: SystemParams, drives: DriveFields,
                       reading: str = "hamiltonian") -> Generator:
    """Assemble ``L0``, ``V₊`` and ``V₋`` for the 9-component coherence vector.

    ``reading="hamiltonian"`` uses the probe coupling that follows from the
    dipole Hamiltonian (σ̇₂₃ ∋ -ig e^{-iΔ₄t}σ₂₁).  ``reading="literal"`` swaps
    that term for -ig e^{-iΔ₄t}σ₂₃ (and the conjugate for σ̇₃₂), which breaks
    the Hamiltonian structure; kept for comparison only.
    """
    if reading not in READINGS:
        raise ValueError(f"reading must be one of {READINGS}")
    G, Om = complex(drives.G), complex(drives.Omega)
    # Rotating-frame level shifts: E₁-E₂ = -Δ₂, E₂-E₃ = -Δ₃.
    H = np.diag([-(drives.Delta2 + drives.Delta3), -drives.Delta3, 0.0]).astype(complex)
    H -= G * _op(1, 2) + np.conj(G) * _op(2, 1)
    H -= Om * _op(2, 3) + np.conj(Om) * _op(3, 2)

    S = _commutator_super(H)
    S += _dissipator_super(np.sqrt(2 * params.gamma1) * _op(3, 1))
    S += _dissipator_super(np.sqrt(2 * params.gamma2) * _op(2, 1))
    L0 = _permute(S)
    for pair, rate in (("12", params.Gamma12), ("13", params.Gamma13),
                       ("23", params.Gamma23)):
        L0[IDX[pair], IDX[pair]] -= rate
        L0[IDX[pair[::-1]], IDX[pair[::-1]]] -= rate

    # Probe Hamiltonian -(g e^{-iΔ₄t}|1⟩⟨3| + h.c.).
    Vplus = _permute(_commutator_super(-_op(1, 3)))
    Vminus = _permute(_commutator_super(-_op(3, 1)))
    if reading == "literal":
        i23, i32, i21, i12 = IDX["23"], IDX["32"], IDX["21"], IDX["12"]
        Vplus[i23, i21] = 0.0
        Vplus[i23, i23] = -1j
        Vminus[i32, i12] = 0.0
        Vminus[i32, i32] = 1j
    return Generator(L0=L0, Vplus=Vplus, Vminus=Vminus)


def steady_state(gen: Generator) -> np.ndarray:
    """Unique trace-one null vector of ``L0`` as a 3×3 density matrix.

    Raises :class:`NumericalError` when the null space of ``L0`` is more than
    one dimensional (second-smallest singular value below 1e-8 of the largest).
    """
    L0 = gen.L0
    s = np.linalg.svd(L0, compute_uv=False)
    if s[-2] < DEGENERACY_RTOL * s[0]:
        raise NumericalError(
            f"steady state not unique (singular values {s[-2]:.3e}, {s[-1]:.3e} "
            f"relative to {s[0]:.3e})")
    A = np.vstack([L0, _trace_row()])
    b = np.zeros(10, dtype=complex)
    b[-1] = 1.0
    vec, *_ = np.linalg.lstsq(A, b, rcond=None)
    sigma = to_matrix(vec)
    return 0.5 * (sigma + sigma.conj().T)


def _trace_row() -> np.ndarray:
    row = np.zeros(9, dtype=complex)
    row[list(POPULATIONS)] = 1.0
    return row


def _shifted_system(gen: Generator, sigma0: np.ndarray, gamma: float) -> tuple:
    """Deflated operator ``L0 + γ|σ⁰⟩⟨tr|`` and right-hand side ``-γV₊σ⁰``.

    σ⁺ is traceless (the probe commutator is traceless), so the rank-one term
    leaves the solution unchanged while lifting the zero eigenvalue of ``L0``
    to γ; the system is then regular at Δ₄ = 0 as well.
    """
    v0 = to_vector(sigma0)
    A = gen.L0 + gamma * np.outer(v0, _trace_row())
    return A, -gamma * (gen.Vplus @ v0)


def linear_response(gen: Generator, sigma0: np.ndarray, Delta4: float,
                    gamma: float) -> np.ndarray:
    """First-order amplitude σ⁺ (per unit g/γ) at the probe beat frequency Δ₄.

    Substituting σ = σ⁰ + (g/γ)e^{-iΔ₄t}σ⁺ + (g*/γ)e^{iΔ₄t}σ⁻ and matching the
    e^{-iΔ₄t} terms gives (L0 + iΔ₄)σ⁺ = -γ V₊σ⁰ with tr σ⁺ = 0.
    """
    A, rhs = _shifted_system(gen, sigma0, gamma)
    A = A + 1j * Delta4 * np.eye(9)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(f"shifted system singular at Delta4={Delta4:.6g} "
                             f"(condition number {cond:.3e})")
    return np.linalg.solve(A, rhs)


def linear_response_batch(gen: Generator, sigma0: np.ndarray,
                          Delta4: np.ndarray, gamma: float) -> np.ndarray:
    """Vectorised :func:`linear_response` over an array of Δ₄ values, shape (n, 9)."""
    d4 = np.atleast_1d(np.asarray(Delta4, dtype=float))
    A0, rhs = _shifted_system(gen, sigma0, gamma)
    A = A0[None, :, :] + 1j * d4[:, None, None] * np.eye(9)[None]
    return np.linalg.solve(A, np.broadcast_to(rhs, (d4.size, 9))[..., None])[..., 0]
