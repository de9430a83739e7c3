"""Thermal scalar-field bath seen by a detector in uniform inertial motion.

All quantities use natural units (hbar = c = k_B = 1). The occupation number
of the moving bath is the Bose factor averaged over the Doppler interval
``[d_minus, d_plus]``; everything else (spectral rates, effective inverse
temperature) follows from it.

Rates span hundreds of orders of magnitude at low temperature, so the core
routines work with logarithms and only exponentiate at the very end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "BathParams",
    "SpectralValue",
    "QuadratureError",
    "U_SWITCH",
    "doppler_factors",
    "log1mexp",
    "bose",
    "log_occupation",
    "occupation",
    "occupation_quadrature",
    "emission_strength",
    "log_spectral_rate",
    "spectral_rate",
    "kms_log_ratio",
    "beta_eff",
]

#: Below this velocity the occupation is evaluated from its u**2 expansion.
U_SWITCH = 1e-4
# The series is only trusted while beta*omega*u stays small as well.
_SERIES_MAX_DOPPLER_SPREAD = 1e-3
_LN2 = math.log(2.0)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class BathParams:
    """Inverse temperature ``beta``, velocity ``u`` and coupling ``lam``."""

    beta: float
    u: float
    lam: float = 0.1

    def __post_init__(self):
        beta, u, lam = float(self.beta), float(self.u), float(self.lam)
        if not (beta > 0.0 and math.isfinite(beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta!r}")
        if not (0.0 <= u < 1.0):
            raise ValueError(f"u must lie in [0, 1), got {self.u!r}")
        if not (lam > 0.0 and math.isfinite(lam)):
            raise ValueError(f"lam must be positive and finite, got {self.lam!r}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "lam", lam)

    def with_(self, **changes) -> "BathParams":
        fields = {"beta": self.beta, "u": self.u, "lam": self.lam}
        fields.update(changes)
        return BathParams(**fields)


@dataclass(frozen=True)
class SpectralValue:
    omega: float | np.ndarray
    gamma: float | np.ndarray


def doppler_factors(u: float) -> tuple[float, float]:
    """Return ``(d_minus, d_plus)`` = (sqrt((1-u)/(1+u)), sqrt((1+u)/(1-u)))."""
    u = float(u)
    if not (0.0 <= u < 1.0):
        raise ValueError(f"u must lie in [0, 1), got {u!r}")
    d_plus = math.sqrt((1.0 + u) / (1.0 - u))
    return 1.0 / d_plus, d_plus


def log1mexp(x):
    """``log(1 - exp(-x))`` for ``x > 0`` without cancellation or underflow.

    Uses ``log(-expm1(-x))`` for ``x <= ln 2`` and ``log1p(-exp(-x))`` above.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x <= _LN2, np.log(-np.expm1(-x)), np.log1p(-np.exp(-x)))
    return out if out.ndim else float(out)


def bose(x):
    """Planck occupation ``1/(e^x - 1)``."""
    x = np.asarray(x, dtype=float)
    out = 1.0 / np.expm1(x)
    return out if out.ndim else float(out)


def _check_omega(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(~(omega > 0.0)) or np.any(~np.isfinite(omega)):
        raise ValueError("omega must be positive and finite")
    return omega


def _log_bose(a):
    # log n(a) = -a - log(1 - e^{-a})
    return -a - log1mexp(a)


def _log_occupation_series(a, u):
    # N = n + u^2 [a n'/2 + a^2 n''/6] + O(u^4), with n' = -n(n+1),
    # n'' = n(n+1)(2n+1); divide through by n to stay in log space.
    n_plus_1 = 1.0 / -np.expm1(-a)
    coth_half = 1.0 / np.tanh(0.5 * a)
    corr = u * u * n_plus_1 * (-0.5 * a + a * a * coth_half / 6.0)
    return _log_bose(a) + np.log1p(corr)


def _log_occupation_closed(a, u, d_minus, d_plus):
    # N = log1p(y)/spread,  y = e^{-a d-} (1 - e^{-spread}) / (1 - e^{-a d-}),
    # spread = a (d+ - d-) = 2 a u / sqrt(1 - u^2).
    spread = 2.0 * a * u / math.sqrt(1.0 - u * u)
    x_minus = a * d_minus
    log_y = -x_minus + log1mexp(spread) - log1mexp(x_minus)
    y = np.exp(log_y)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_l = np.where(y < 1e-10, log_y - 0.5 * y, np.log(np.log1p(y)))
    return log_l - np.log(spread)


def log_occupation(omega, bath: BathParams):
    """Natural log of the moving-bath occupation number ``N(omega, beta, u)``."""
    omega = _check_omega(omega)
    a = bath.beta * omega
    u = bath.u
    if u == 0.0:
        out = _log_bose(a)
    elif u < U_SWITCH and np.all(a * u < _SERIES_MAX_DOPPLER_SPREAD):
        out = _log_occupation_series(a, u)
    else:
        d_minus, d_plus = doppler_factors(u)
        out = _log_occupation_closed(a, u, d_minus, d_plus)
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def occupation(omega, bath: BathParams):
    """Occupation number ``N(omega, beta, u)`` of the moving bath.

    Reduces to ``1/(e^{beta omega} - 1)`` at ``u = 0``.
    """
    out = np.exp(log_occupation(omega, bath))
    return out if np.ndim(out) else float(out)


def occupation_quadrature(omega: float, bath: BathParams, *, epsrel: float = 1e-13) -> float:
    """Occupation by direct quadrature of the Bose factor over the Doppler interval.

    Independent of :func:`occupation`: integrates
    ``(d+ - d-)^{-1} int_{d-}^{d+} dD / (e^{beta omega D} - 1)`` with adaptive
    Gauss-Kronrod. The integrand is rescaled by ``e^{beta omega d-}`` so that
    results below the double-precision underflow threshold keep their
    relative accuracy until the final multiplication.
    """
    omega = float(omega)
    if not omega > 0.0:
        raise ValueError("omega must be positive")
    a = bath.beta * omega
    if bath.u == 0.0:
        return float(bose(a))
    d_minus, d_plus = doppler_factors(bath.u)
    if d_plus - d_minus < 1e-5:
        # Interval too narrow for quad's absolute error control; Simpson's
        # rule on the smooth integrand is exact to O(width^4).
        mid = 0.5 * (d_plus + d_minus)
        vals = [math.exp(-a * (d - d_minus)) / -math.expm1(-a * d) for d in (d_minus, mid, d_plus)]
        scaled = (vals[0] + 4.0 * vals[1] + vals[2]) / 6.0
        return math.exp(-a * d_minus) * scaled

    def integrand(d):
        return math.exp(-a * (d - d_minus)) / -math.expm1(-a * d)

    value, abserr, info = integrate.quad(
        integrand, d_minus, d_plus, epsabs=0.0, epsrel=epsrel, limit=200, full_output=True
    )[:3]
    if abserr > 10 * epsrel * abs(value):
        raise QuadratureError(
            f"quadrature did not converge for omega={omega}, bath={bath}: "
            f"estimate {value!r} +/- {abserr!r} after {info['neval']} evaluations"
        )
    return math.exp(-a * d_minus) * value / (d_plus - d_minus)


def emission_strength(omega, lam: float):
    """Vacuum emission rate ``gamma(omega) = lam^2 omega / (2 pi)``."""
    return lam * lam * np.asarray(omega, dtype=float) / (2.0 * math.pi)


def log_spectral_rate(omega, bath: BathParams):
    """``log Gamma(omega)`` for signed ``omega`` (positive = emission)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega == 0.0) or not np.all(np.isfinite(omega)):
        raise ValueError("spectral rate is undefined at omega = 0")
    w = np.abs(omega)
    log_gamma = np.log(emission_strength(w, bath.lam))
    log_n = np.asarray(log_occupation(w, bath))
    out = log_gamma + np.where(omega > 0, np.logaddexp(0.0, log_n), log_n)
    return out if out.ndim else float(out)


def spectral_rate(omega, bath: BathParams) -> SpectralValue:
    """Bath spectral function: ``gamma(w)(N+1)`` for ``w > 0``, ``gamma(|w|)N`` for ``w < 0``."""
    gamma = np.exp(log_spectral_rate(omega, bath))
    if np.ndim(gamma):
        return SpectralValue(np.asarray(omega, dtype=float), gamma)
    return SpectralValue(float(omega), float(gamma))


def kms_log_ratio(omega, bath: BathParams):
    """``log(Gamma(w)/Gamma(-w)) = w * beta_eff(w) = log(1 + 1/N)``.

    Exactly ``beta * omega`` at rest.
    """
    omega = _check_omega(omega)
    if bath.u == 0.0:
        out = bath.beta * omega
    else:
        out = np.logaddexp(0.0, -np.asarray(log_occupation(omega, bath)))
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def beta_eff(omega, bath: BathParams):
    """Frequency-dependent effective inverse temperature ``-(1/w) log(N/(N+1))``."""
    omega = _check_omega(omega)
    out = np.asarray(kms_log_ratio(omega, bath)) / omega
    return out if out.ndim else float(out)
