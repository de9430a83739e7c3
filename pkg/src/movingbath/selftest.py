"""Built-in invariant checks run by ``movingbath run --experiment selftest``."""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional
from unittest import mock

import numpy as np

from . import bath as bath_mod
from .bath import BathParams, beta_eff, kms_log_ratio, occupation, occupation_quadrature, spectral_rate
from .counting import CountingSpec, clock_stats, cumulants_richardson
from .steady_state import analyze, cycle_affinity_delta, delta_cycle_current, potential_form, solve_steady
from .system import LevelSystem, battery_three_level, delta_three_level, rate_matrix
from .thermo import battery_potentials, ergotropy_diagonal, gibbs_populations, max_work

__all__ = ["Check", "FAULTS", "run_selftest", "format_report"]


@dataclass(frozen=True)
class Check:
    name: str
    tolerance: float
    error: float
    passed: bool
    detail: str = ""


_OMEGAS = np.geomspace(0.1, 10.0, 9)
_BETAS = np.geomspace(0.1, 10.0, 9)
_US = (0.01, 0.2, 0.6, 0.9, 0.99)
_FIG_BETAS = np.geomspace(0.05, 50.0, 40)
_FIG_US = (0.2, 0.6, 0.99)


def _max_err(values) -> float:
    arr = np.asarray(list(values), dtype=float)
    # NaN must never read as a pass.
    return math.inf if np.any(~np.isfinite(arr)) else float(arr.max(initial=0.0))


def _kms_identity():
    # Ratio from the spectral function against exp(w beta_eff) with N from
    # the quadrature oracle, so a wrong closed form cannot hide.
    def errs():
        for u in _US:
            for beta in _BETAS:
                b = BathParams(beta, u, 0.1)
                for w in _OMEGAS:
                    ratio = spectral_rate(w, b).gamma / spectral_rate(-w, b).gamma
                    n = occupation_quadrature(w, b)
                    yield abs(ratio / math.exp(math.log1p(1.0 / n)) - 1.0)

    return _max_err(errs()), ""


def _quadrature_oracle():
    def errs():
        for u in _US:
            for beta in _BETAS:
                b = BathParams(beta, u)
                for w in _OMEGAS:
                    n, q = occupation(w, b), occupation_quadrature(w, b)
                    yield abs(n - q) / q

    return _max_err(errs()), ""


def _beta_eff_shape():
    worst = 0.0
    for u in _US:
        for beta in _BETAS:
            b = BathParams(beta, u)
            x = kms_log_ratio(_OMEGAS, b)
            if np.any(beta_eff(_OMEGAS, b) < 0) or np.any(np.diff(x) <= 0):
                worst = math.inf
    return worst, ""


def _random_system(rng, n) -> LevelSystem:
    e = np.cumsum(rng.uniform(0.3, 2.0, n))
    e -= e[0]
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a = a + a.conj().T
    np.fill_diagonal(a, 0.0)
    return LevelSystem(e, a)


def _gibbs_at_rest():
    rng = np.random.default_rng(12345)
    systems = [delta_three_level()] + [_random_system(rng, 4) for _ in range(5)]

    def errs():
        for sys in systems:
            for beta in (0.1, 1.0, 5.0):
                k = rate_matrix(sys, BathParams(beta, 0.0))
                yield float(np.abs(solve_steady(k) - gibbs_populations(sys.energies, beta)).max())

    return _max_err(errs()), ""


def _equal_currents():
    sys = delta_three_level()

    def errs():
        for u in _FIG_US:
            for beta in (0.1, 1.0, 5.0):
                rep = analyze(rate_matrix(sys, BathParams(beta, u)))
                j = rep.edge_currents
                yield max(abs(j[0, 1] - j[1, 2]), abs(j[1, 2] - j[2, 0]))

    return _max_err(errs()), ""


def _tur():
    sys = delta_three_level()
    worst = 0.0
    for u in _FIG_US:
        for beta in _FIG_BETAS:
            st = clock_stats(rate_matrix(sys, BathParams(beta, u)))
            worst = max(worst, 2.0 - st.tur_product) if math.isfinite(st.tur_product) else math.inf
    return max(worst, 0.0), "max(2 - delta2*Sigma)"


def _fcs_first_cumulant():
    sys = delta_three_level()

    def errs():
        for u in _FIG_US:
            for beta in (0.5, 1.0, 2.0):
                k = rate_matrix(sys, BathParams(beta, u))
                j_fd, *_ = cumulants_richardson(k, CountingSpec())
                j = delta_cycle_current(k)
                yield abs(j_fd - j) / abs(j)

    return _max_err(errs()), "relative"


def _battery():
    sys = battery_three_level()

    def errs():
        for u in (0.0,) + _FIG_US:
            for beta in (0.1, 1.0, 10.0):
                b = BathParams(beta, u)
                k = rate_matrix(sys, b)
                p = solve_steady(k)
                f0, f1, f2, z = battery_potentials(b)
                yield float(np.abs(np.exp(-np.array([f0, f1, f2])) / z - p).max())
                f, zf = potential_form(k)
                yield float(np.abs(f - [f0, f1, f2]).max())

    return _max_err(errs()), ""


def _work_and_ergotropy():
    sys = battery_three_level()

    def errs():
        for u in _FIG_US:
            for beta in _FIG_BETAS:
                p = solve_steady(rate_matrix(sys, BathParams(beta, u)))
                rep = max_work(p, sys.energies, beta)
                yield max(ergotropy_diagonal(p, sys.energies), max(0.0, -rep.w_max))

    return _max_err(errs()), ""


def _affinity_forms():
    sys = delta_three_level()

    def errs():
        for u in _FIG_US:
            for beta in (0.1, 1.0, 10.0):
                b = BathParams(beta, u)
                a_rates = analyze(rate_matrix(sys, b)).cycle_affinities[0].affinity
                yield abs(a_rates - cycle_affinity_delta(sys, b))

    return _max_err(errs()), ""


CHECKS: tuple[tuple[str, float, Callable[[], tuple[float, str]]], ...] = (
    ("kms_identity", 1e-10, _kms_identity),
    ("occupation_vs_quadrature", 1e-10, _quadrature_oracle),
    ("beta_eff_positive_and_monotone", 0.0, _beta_eff_shape),
    ("gibbs_at_rest", 1e-10, _gibbs_at_rest),
    ("equal_cycle_currents", 1e-10, _equal_currents),
    ("tur_bound", 1e-6, _tur),
    ("fcs_first_cumulant", 1e-8, _fcs_first_cumulant),
    ("battery_potentials", 1e-10, _battery),
    ("zero_ergotropy_nonnegative_work", 1e-12, _work_and_ergotropy),
    ("affinity_rates_vs_beta_eff", 1e-12, _affinity_forms),
)


@contextlib.contextmanager
def _flip_doppler() -> Iterator[None]:
    real = bath_mod.doppler_factors

    def flipped(u):
        lo, hi = real(u)
        return hi, lo

    with mock.patch.object(bath_mod, "doppler_factors", flipped):
        yield


#: Deliberate faults for mutation smoke tests of the self-test itself.
FAULTS = {"flip-doppler": _flip_doppler}


def run_selftest(fault: Optional[str] = None) -> list[Check]:
    ctx = FAULTS[fault]() if fault else contextlib.nullcontext()
    results = []
    with ctx:
        for name, tol, fn in CHECKS:
            try:
                err, detail = fn()
            except Exception as exc:  # a crashing check is a failing check
                err, detail = math.inf, f"{type(exc).__name__}: {exc}"
            results.append(Check(name, tol, err, bool(err <= tol), detail))
    return results


def format_report(results: list[Check]) -> str:
    lines = []
    for c in results:
        status = "PASS" if c.passed else "FAIL"
        line = f"{status}  {c.name:<34} error={c.error:.3e}  tol={c.tolerance:.1e}"
        if c.detail:
            line += f"  ({c.detail})"
        lines.append(line)
    n_fail = sum(not c.passed for c in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
