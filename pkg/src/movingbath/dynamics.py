"""Time evolution under the secular GKSL master equation.

The Lamb shift is set to zero throughout. It would only renormalise the
oscillation frequency of the coherences; populations, steady states,
currents and every thermodynamic quantity are unaffected.

With non-degenerate, well-separated Bohr frequencies the secular equation
decouples: populations obey the Pauli master equation and each coherence
``rho_ij`` rotates at ``e_i - e_j`` while decaying at half the total escape
rate of levels ``i`` and ``j``.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate, linalg

from .system import LevelSystem, RateMatrix

__all__ = [
    "check_populations",
    "check_density_matrix",
    "pauli_evolve",
    "coherence_decay_rate",
    "coherence_decay_rates",
    "gksl_evolve",
    "gksl_liouvillian",
    "StationaryCoherenceWarning",
]

_NORM_TOL = 1e-10


class StationaryCoherenceWarning(UserWarning):
    """Some coherence has zero decay rate and will never relax."""


def check_populations(p, n: int | None = None) -> np.ndarray:
    p = np.array(p, dtype=float).reshape(-1)
    if n is not None and p.size != n:
        raise ValueError(f"expected {n} populations, got {p.size}")
    if np.any(p < -_NORM_TOL) or abs(p.sum() - 1.0) > _NORM_TOL:
        raise ValueError("populations must be non-negative and sum to one")
    return p


def check_density_matrix(rho, n: int | None = None) -> np.ndarray:
    rho = np.array(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if n is not None and rho.shape[0] != n:
        raise ValueError(f"density matrix must be {n}x{n}")
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=_NORM_TOL):
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho) - 1.0) > _NORM_TOL:
        raise ValueError("density matrix must have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -_NORM_TOL:
        raise ValueError("density matrix must be positive semidefinite")
    return rho


def pauli_evolve(p0, k: RateMatrix, tau: float, method: str = "rk", rtol: float = 1e-10) -> np.ndarray:
    """Populations at time ``tau`` under ``dp/dt = W p``.

    ``method`` is ``"rk"`` (adaptive 8th-order Dormand-Prince), ``"stiff"``
    (Radau with the exact Jacobian) or ``"expm"`` (dense matrix exponential).
    """
    p0 = check_populations(p0, k.n_levels)
    if not tau >= 0:
        raise ValueError(f"tau must be non-negative, got {tau!r}")
    if tau == 0:
        return p0.copy()
    w = k.generator
    if method == "expm":
        return linalg.expm(w * tau) @ p0
    if method not in ("rk", "stiff"):
        raise ValueError(f"unknown method {method!r}")
    solver = "DOP853" if method == "rk" else "Radau"
    extra = {} if method == "rk" else {"jac": w}
    sol = integrate.solve_ivp(
        lambda t, p: w @ p, (0.0, float(tau)), p0, method=solver, rtol=rtol, atol=rtol * 1e-3, **extra
    )
    if not sol.success:
        raise RuntimeError(f"Pauli integration failed: {sol.message}")
    return sol.y[:, -1]


def coherence_decay_rate(i: int, j: int, k: RateMatrix) -> float:
    """Decay rate of ``rho_ij``: half the summed escape rates of levels ``i`` and ``j``.

    The escape rate of a level is ``sum_l k_{i->l}``; this is what the
    anticommutator part of the dissipator produces.
    """
    if i == j:
        raise ValueError("coherence decay is defined for i != j only")
    r = k.rates
    return 0.5 * float(r[i].sum() + r[j].sum())


def coherence_decay_rates(k: RateMatrix) -> np.ndarray:
    esc = k.rates.sum(axis=1)
    g = 0.5 * (esc[:, None] + esc[None, :])
    np.fill_diagonal(g, 0.0)
    return g


def gksl_evolve(rho0, sys: LevelSystem, k: RateMatrix, tau: float, method: str = "rk") -> np.ndarray:
    """Density matrix at time ``tau`` (Schroedinger picture, zero Lamb shift).

    Coherences are propagated in closed form,
    ``rho_ij(tau) = rho_ij(0) exp(-i w_ij tau - g_ij tau)``; populations go
    through :func:`pauli_evolve`.
    """
    n = sys.n_levels
    rho0 = check_density_matrix(rho0, n)
    if k.n_levels != n:
        raise ValueError("rate matrix and level system have different sizes")
    if not tau >= 0:
        raise ValueError(f"tau must be non-negative, got {tau!r}")
    g = coherence_decay_rates(k)
    off = ~np.eye(n, dtype=bool)
    frozen = off & (g == 0) & (rho0 != 0)
    if np.any(frozen):
        pairs = sorted({(int(min(a, b)), int(max(a, b))) for a, b in zip(*np.nonzero(frozen))})
        warnings.warn(f"coherences {pairs} do not decay; levels are isolated", StationaryCoherenceWarning, stacklevel=2)
    e = sys.energies
    phase = np.exp(-(1j * (e[:, None] - e[None, :]) + g) * tau)
    rho = rho0 * phase
    p = pauli_evolve(np.real(np.diag(rho0)).clip(min=0.0), k, tau, method=method)
    rho[np.diag_indices(n)] = p
    return rho


def gksl_liouvillian(sys: LevelSystem, k: RateMatrix) -> np.ndarray:
    """Full superoperator of the secular master equation on row-major ``vec(rho)``.

    Built from jump operators ``sqrt(k_{i->j}) |j><i|`` without using the
    decoupled structure; serves as a cross-check of :func:`gksl_evolve`.
    """
    n = sys.n_levels
    eye = np.eye(n)
    h = np.diag(sys.energies).astype(complex)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for i in range(n):
        for j in range(n):
            rate = k.rates[i, j]
            if i == j or rate == 0:
                continue
            jump = np.zeros((n, n))
            jump[j, i] = 1.0
            ldl = jump.T @ jump
            sup += rate * (np.kron(jump, jump) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    return sup
