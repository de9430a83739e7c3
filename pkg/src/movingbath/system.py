"""Level systems, Bohr frequencies and the classical transition-rate matrix.

Conventions: ``energies`` are strictly increasing, ``coupling[i, j]`` is the
matrix element <e_i|A|e_j> of the system operator coupled to the field, and
``RateMatrix.rates[i, j]`` is the rate of the jump ``i -> j``. Per-edge
couplings of the presets default to 1; the weak-coupling scale lives in
``BathParams.lam`` and enters as ``lam**2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .bath import BathParams, emission_strength, kms_log_ratio, log_spectral_rate

__all__ = [
    "LevelSystem",
    "RateMatrix",
    "DegenerateSpectrumError",
    "RATE_FLOOR",
    "DEGENERACY_RTOL",
    "bohr_frequencies",
    "validate_secular",
    "rate_matrix",
    "rate_matrix_from_rates",
    "two_level",
    "delta_three_level",
    "battery_three_level",
    "PRESETS",
]

#: Present rates smaller than this are clamped (and flagged) in ``RateMatrix.rates``.
RATE_FLOOR = 1e-300
#: Two Bohr frequencies closer than this (relative to the largest) are degenerate.
DEGENERACY_RTOL = 1e-8


class DegenerateSpectrumError(ValueError):
    """Rates are undefined because two allowed transitions share a Bohr frequency."""


@dataclass(frozen=True, eq=False)
class LevelSystem:
    """Non-degenerate spectrum plus Hermitian coupling-operator matrix elements."""

    energies: np.ndarray
    coupling: np.ndarray
    name: str = ""

    def __post_init__(self):
        energies = np.array(self.energies, dtype=float).reshape(-1)
        coupling = np.array(self.coupling, dtype=complex)
        n = energies.size
        if n < 2:
            raise ValueError("a level system needs at least two levels")
        if not np.all(np.isfinite(energies)):
            raise ValueError("energies must be finite")
        if np.any(np.diff(energies) <= 0):
            raise ValueError("energies must be strictly increasing (degenerate levels are not supported)")
        if coupling.shape != (n, n):
            raise ValueError(f"coupling must be {n}x{n}, got shape {coupling.shape}")
        if not np.allclose(coupling, coupling.conj().T, rtol=0, atol=1e-12):
            raise ValueError("coupling matrix must be Hermitian")
        if np.any(np.diag(coupling) != 0):
            warnings.warn(
                "diagonal coupling elements do not generate transitions and are ignored",
                stacklevel=3,
            )
        energies.setflags(write=False)
        coupling.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "coupling", coupling)

    @property
    def n_levels(self) -> int:
        return self.energies.size

    def scaled(self, c: complex) -> "LevelSystem":
        return LevelSystem(self.energies, c * self.coupling, self.name)

    def to_dict(self) -> dict[str, Any]:
        coupling = [[[z.real, z.imag] for z in row] for row in self.coupling.tolist()]
        return {"name": self.name, "energies": self.energies.tolist(), "coupling": coupling}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LevelSystem":
        """Build from ``{"energies": [...], "coupling": [[...]]}``.

        Coupling entries may be real numbers, ``[re, im]`` pairs or strings
        accepted by :class:`complex` (``"0.5+0.1j"``).
        """
        try:
            energies = data["energies"]
            raw = data["coupling"]
        except KeyError as exc:
            raise ValueError(f"level system is missing field {exc.args[0]!r}") from None
        coupling = [[_parse_complex(z) for z in row] for row in raw]
        return cls(np.asarray(energies, dtype=float), np.asarray(coupling), str(data.get("name", "")))


def _parse_complex(z) -> complex:
    if isinstance(z, str):
        return complex(z.replace(" ", ""))
    if isinstance(z, (list, tuple)):
        if len(z) != 2:
            raise ValueError(f"complex entry must be [re, im], got {z!r}")
        return complex(float(z[0]), float(z[1]))
    return complex(z)


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Classical jump rates ``rates[i, j] = k_{i->j}`` on the level graph.

    ``log_rates`` carries the exact logarithms (``-inf`` where no transition
    exists); ratios and affinities are computed from it, so they survive even
    when ``rates`` has been clamped to ``RATE_FLOOR``. When ``log_ratios`` is
    given it holds ``log(k_{i->j}/k_{j->i})`` evaluated directly, which avoids
    cancelling two large logarithms near detailed balance.
    """

    rates: np.ndarray
    log_rates: np.ndarray
    frequencies: np.ndarray = field(default=None)
    underflow: bool = False
    log_ratios: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        rates = np.array(self.rates, dtype=float)
        log_rates = np.array(self.log_rates, dtype=float)
        n = rates.shape[0]
        if rates.shape != (n, n) or log_rates.shape != (n, n):
            raise ValueError("rates and log_rates must be square and of equal shape")
        if np.any(np.diag(rates) != 0):
            raise ValueError("rate matrix must have zero diagonal")
        if np.any(rates < 0) or np.any(~np.isfinite(rates)):
            raise ValueError("rates must be finite and non-negative")
        freqs = self.frequencies
        freqs = np.full((n, n), np.nan) if freqs is None else np.array(freqs, dtype=float)
        if self.log_ratios is None:
            with np.errstate(invalid="ignore"):
                ratios = log_rates - log_rates.T
        else:
            ratios = np.array(self.log_ratios, dtype=float)
        ratios[~(np.isfinite(log_rates) & np.isfinite(log_rates.T))] = np.nan
        for arr in (rates, log_rates, freqs, ratios):
            arr.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "log_rates", log_rates)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "log_ratios", ratios)

    @property
    def n_levels(self) -> int:
        return self.rates.shape[0]

    @property
    def support(self) -> np.ndarray:
        """Boolean adjacency: ``True`` where ``k_{i->j}`` exists."""
        return np.isfinite(self.log_rates) & ~np.eye(self.n_levels, dtype=bool)

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges ``(i, j)`` with ``i > j`` carrying a transition either way."""
        s = self.support | self.support.T
        return [(i, j) for i in range(self.n_levels) for j in range(i) if s[i, j]]

    def log_ratio(self, i: int, j: int) -> float:
        """``log(k_{i->j} / k_{j->i})``."""
        return float(self.log_ratios[i, j])

    @property
    def generator(self) -> np.ndarray:
        """Column generator ``W`` with ``dp/dt = W @ p``."""
        w = self.rates.T.copy()
        w[np.diag_indices_from(w)] = -self.rates.sum(axis=1)
        return w

    @property
    def max_rate(self) -> float:
        return float(self.rates.max())


def rate_matrix_from_rates(rates, frequencies=None) -> RateMatrix:
    """Wrap a plain non-negative matrix ``rates[i, j] = k_{i->j}``."""
    rates = np.array(rates, dtype=float)
    np.fill_diagonal(rates, 0.0)
    with np.errstate(divide="ignore"):
        log_rates = np.log(rates)
    np.fill_diagonal(log_rates, -np.inf)
    return RateMatrix(rates, log_rates, frequencies)


def bohr_frequencies(sys: LevelSystem) -> list[tuple[int, int, float]]:
    """Allowed transitions ``(i, j, e_i - e_j)`` with ``i > j`` and nonzero coupling."""
    e = sys.energies
    return [
        (i, j, float(e[i] - e[j]))
        for i in range(sys.n_levels)
        for j in range(i)
        if abs(sys.coupling[i, j]) > 0
    ]


def _degenerate_pairs(lines):
    if not lines:
        return []
    scale = max(w for *_, w in lines)
    out = []
    for a in range(len(lines)):
        for b in range(a + 1, len(lines)):
            if abs(lines[a][2] - lines[b][2]) <= DEGENERACY_RTOL * scale:
                out.append((lines[a], lines[b]))
    return out


def validate_secular(sys: LevelSystem, bath: BathParams) -> list[str]:
    """Advisory checks on the secular (well-separated Bohr frequency) regime."""
    lines = bohr_frequencies(sys)
    messages = []
    degenerate = _degenerate_pairs(lines)
    for (i, j, w), (k, l, v) in degenerate:
        messages.append(f"degenerate Bohr frequencies: omega_{i}{j}={w!r} and omega_{k}{l}={v!r}")
    if len(lines) > 1:
        rate_scale = float(emission_strength(max(w for *_, w in lines), bath.lam))
        flagged = {frozenset(((a[0], a[1]), (b[0], b[1]))) for a, b in degenerate}
        for a in range(len(lines)):
            for b in range(a + 1, len(lines)):
                (i, j, w), (k, l, v) = lines[a], lines[b]
                if frozenset(((i, j), (k, l))) in flagged:
                    continue
                gap = abs(w - v)
                if gap < 10.0 * rate_scale:
                    messages.append(
                        f"Bohr frequencies omega_{i}{j}={w:.6g} and omega_{k}{l}={v:.6g} differ by "
                        f"{gap:.3g}, less than 10x the rate scale {rate_scale:.3g}; "
                        "the secular approximation may fail"
                    )
    return messages


def rate_matrix(sys: LevelSystem, bath: BathParams) -> RateMatrix:
    """Pauli rates ``k_{i->j} = |A_ij|^2 Gamma(e_i - e_j)``.

    Downward jumps use the emission branch ``Gamma(+w)``, upward jumps the
    absorption branch ``Gamma(-w)``.
    """
    lines = bohr_frequencies(sys)
    degenerate = _degenerate_pairs(lines)
    if degenerate:
        (i, j, w), (k, l, v) = degenerate[0]
        raise DegenerateSpectrumError(
            f"transitions {i}<->{j} and {k}<->{l} share Bohr frequency {w!r} ~ {v!r}; "
            "secular rates are undefined"
        )
    n = sys.n_levels
    log_rates = np.full((n, n), -np.inf)
    log_ratios = np.zeros((n, n))
    freqs = sys.energies[:, None] - sys.energies[None, :]
    for i, j, w in lines:
        log_amp2 = 2.0 * math.log(abs(sys.coupling[i, j]))
        log_rates[i, j] = log_amp2 + log_spectral_rate(w, bath)
        log_rates[j, i] = log_amp2 + log_spectral_rate(-w, bath)
        log_ratios[i, j] = kms_log_ratio(w, bath)
        log_ratios[j, i] = -log_ratios[i, j]
    rates = np.exp(log_rates)
    present = np.isfinite(log_rates)
    clamped = present & (rates < RATE_FLOOR)
    if np.any(clamped):
        rates[clamped] = RATE_FLOOR
    return RateMatrix(rates, log_rates, freqs, underflow=bool(np.any(clamped)), log_ratios=log_ratios)


def two_level(gap: float = 1.0, coupling: complex = 1.0) -> LevelSystem:
    a = np.array([[0, np.conj(coupling)], [coupling, 0]], dtype=complex)
    return LevelSystem(np.array([0.0, gap]), a, "two_level")


def _three_level(omega10, omega21, l10, l21, l20, name):
    energies = np.array([0.0, omega10, omega10 + omega21])
    a = np.zeros((3, 3), dtype=complex)
    for (i, j), lam in {(1, 0): l10, (2, 1): l21, (2, 0): l20}.items():
        a[i, j] = lam
        a[j, i] = np.conj(lam)
    return LevelSystem(energies, a, name)


def delta_three_level(
    omega10: float = 1.0, omega21: float = 3.1, couplings: Sequence[complex] = (1.0, 1.0, 1.0)
) -> LevelSystem:
    """Three levels in Delta configuration; ``couplings`` are (l10, l21, l20)."""
    l10, l21, l20 = couplings
    return _three_level(omega10, omega21, l10, l21, l20, "delta")


def battery_three_level(
    omega10: float = 1.0, omega21: float = 3.1, couplings: Sequence[complex] = (1.0, 1.0)
) -> LevelSystem:
    """Three levels with the 1<->0 line switched off; ``couplings`` are (l21, l20)."""
    l21, l20 = couplings
    return _three_level(omega10, omega21, 0.0, l21, l20, "battery")


PRESETS = {
    "delta": delta_three_level,
    "battery": battery_three_level,
    "two_level": two_level,
}
