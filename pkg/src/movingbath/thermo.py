"""Nonequilibrium free energy, extractable work and ergotropy of diagonal states.

The reference equilibrium is the Gibbs state at the bath's rest-frame
inverse temperature. Entropies use the natural logarithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import entr, logsumexp, rel_entr

from .bath import BathParams, kms_log_ratio

__all__ = [
    "WorkReport",
    "gibbs_populations",
    "entropy",
    "free_energy",
    "relative_entropy",
    "max_work",
    "ergotropy_diagonal",
    "battery_potentials",
]


@dataclass(frozen=True)
class WorkReport:
    w_max: float
    free_energy_ss: float
    free_energy_gibbs: float
    relative_entropy: float
    ergotropy: float


def gibbs_populations(energies, beta: float) -> np.ndarray:
    e = np.asarray(energies, dtype=float)
    logw = -beta * e
    return np.exp(logw - logsumexp(logw))


def entropy(p) -> float:
    """Shannon entropy of a probability vector (``0 ln 0 = 0``)."""
    return float(entr(np.asarray(p, dtype=float)).sum())


def free_energy(p, energies, beta: float) -> float:
    """``<H> - S/beta`` for a state diagonal in the energy basis."""
    p = np.asarray(p, dtype=float)
    return float(p @ np.asarray(energies, dtype=float)) - entropy(p) / beta


def relative_entropy(p, q) -> float:
    """``sum_i p_i ln(p_i/q_i)``."""
    return float(rel_entr(np.asarray(p, dtype=float), np.asarray(q, dtype=float)).sum())


def max_work(p_ss, energies, beta: float, atol: float = 1e-12) -> WorkReport:
    """Maximum extractable work relative to the Gibbs state at ``beta``.

    The free-energy difference and ``D(p_ss || gibbs)/beta`` are evaluated
    separately and must agree to ``atol`` (scaled by the free-energy
    magnitude); ``w_max`` is reported from the relative entropy, which has no
    cancellation.
    """
    p = np.asarray(p_ss, dtype=float)
    e = np.asarray(energies, dtype=float)
    g = gibbs_populations(e, beta)
    f_ss = free_energy(p, e, beta)
    # Gibbs free energy in closed form, -ln Z / beta.
    f_eq = -float(logsumexp(-beta * e)) / beta
    d = relative_entropy(p, g)
    w = d / beta
    if abs((f_ss - f_eq) - w) > atol * max(1.0, abs(f_ss), abs(f_eq)):
        raise ArithmeticError(
            f"free-energy difference {f_ss - f_eq!r} disagrees with relative-entropy work {w!r}"
        )
    return WorkReport(w, f_ss, f_eq, d, ergotropy_diagonal(p, e))


def ergotropy_diagonal(p, energies) -> float:
    """Work extractable by a unitary from a diagonal state.

    ``sum_i e_i (p_i - p_sorted_i)`` with ``p_sorted`` non-increasing;
    ``energies`` must be sorted ascending.
    """
    e = np.asarray(energies, dtype=float)
    if np.any(np.diff(e) < 0):
        raise ValueError("energies must be sorted ascending")
    p = np.asarray(p, dtype=float)
    passive = np.sort(p)[::-1]
    return max(0.0, float(e @ (p - passive)))


def battery_potentials(
    bath: BathParams, omega10: float = 1.0, omega21: float = 3.1
) -> tuple[float, float, float, float]:
    """``(F0, F1, F2, Z_F)`` of the three-level system without the 1<->0 line.

    ``F1 = x(w20) - x(w21)`` and ``F2 = x(w20)`` where ``x(w) = w beta_eff(w)``.
    """
    x21, x20 = kms_log_ratio(np.array([omega21, omega10 + omega21]), bath)
    f = np.array([0.0, x20 - x21, x20])
    z = float(np.exp(-f).sum())
    return 0.0, float(f[1]), float(f[2]), z
