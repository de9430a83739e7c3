import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from movingbath.bath import (
    U_SWITCH,
    BathParams,
    beta_eff,
    bose,
    doppler_factors,
    kms_log_ratio,
    log1mexp,
    log_occupation,
    log_spectral_rate,
    occupation,
    occupation_quadrature,
    spectral_rate,
)


def occupation_mp(omega, beta, u, dps=1500):
    """Closed form evaluated in extended precision."""
    with mpmath.workdps(dps):
        w, b, v = mpmath.mpf(omega), mpmath.mpf(beta), mpmath.mpf(u)
        dp = mpmath.sqrt((1 + v) / (1 - v))
        dm = 1 / dp
        ratio = (1 - mpmath.exp(-b * w * dp)) / (1 - mpmath.exp(-b * w * dm))
        return mpmath.sqrt(1 - v * v) / (2 * b * w * v) * mpmath.log(ratio)


omegas = st.floats(0.05, 20.0)
betas = st.floats(0.05, 50.0)
velocities = st.floats(0.001, 0.995)


class TestDopplerFactors:
    def test_at_rest(self):
        assert doppler_factors(0.0) == (1.0, 1.0)

    def test_u_06(self):
        lo, hi = doppler_factors(0.6)
        assert lo == pytest.approx(0.5, abs=1e-15)
        assert hi == pytest.approx(2.0, abs=1e-15)

    @given(velocities)
    def test_identities(self, u):
        lo, hi = doppler_factors(u)
        assert hi >= 1.0 >= lo > 0.0
        assert lo * hi == pytest.approx(1.0, rel=1e-15)
        assert hi - lo == pytest.approx(2 * u / math.sqrt(1 - u * u), rel=1e-12)

    @pytest.mark.parametrize("u", [-0.1, 1.0, 1.5, float("nan")])
    def test_rejects_out_of_range(self, u):
        with pytest.raises(ValueError):
            doppler_factors(u)


class TestBathParams:
    @pytest.mark.parametrize(
        "kwargs", [dict(beta=0, u=0.1), dict(beta=-1, u=0.1), dict(beta=1, u=1.0), dict(beta=1, u=-0.2), dict(beta=1, u=0.1, lam=0)]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            BathParams(**kwargs)


def test_log1mexp_branches():
    xs = np.array([1e-12, 1e-3, 0.5, math.log(2), 0.7, 5.0, 40.0, 800.0])
    with mpmath.workdps(60):
        expected = [float(mpmath.log(-mpmath.expm1(-mpmath.mpf(x)))) for x in xs]
    np.testing.assert_allclose(log1mexp(xs), expected, rtol=1e-14)


class TestOccupation:
    def test_planck_at_rest(self):
        assert occupation(1.0, BathParams(1.0, 0.0)) == pytest.approx(1 / (math.e - 1), rel=1e-15)
        assert occupation(1.0, BathParams(1.0, 0.0)) == pytest.approx(0.581977, abs=1e-6)

    def test_matches_quadrature_u06(self):
        b = BathParams(2.0, 0.6)
        assert occupation(1.0, b) == pytest.approx(occupation_quadrature(1.0, b), rel=1e-10)

    def test_underflow_region_finite(self):
        b = BathParams(10.0, 0.2)
        n = occupation(5.0, b)
        assert 0 < n < 1e-10 and math.isfinite(n)
        assert n == pytest.approx(float(occupation_mp(5.0, 10.0, 0.2)), rel=1e-12)

    def test_log_occupation_below_double_range(self):
        # N ~ exp(-1680): only the logarithm is representable.
        b = BathParams(500.0, 0.2)
        assert log_occupation(4.1, b) == pytest.approx(float(mpmath.log(occupation_mp(4.1, 500.0, 0.2))), rel=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(omegas, betas, velocities)
    def test_extended_precision_oracle(self, w, b, u):
        exact = mpmath.log(occupation_mp(w, b, u))
        assert log_occupation(w, BathParams(b, u)) == pytest.approx(float(exact), rel=1e-12, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(omegas, betas, velocities)
    def test_non_negative(self, w, b, u):
        assert occupation(w, BathParams(b, u)) >= 0

    def test_vectorised(self):
        b = BathParams(1.0, 0.5)
        ws = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(occupation(ws, b), [occupation(w, b) for w in ws], rtol=1e-15)

    @pytest.mark.parametrize("w", [0.0, -1.0])
    def test_rejects_non_positive_omega(self, w):
        with pytest.raises(ValueError):
            occupation(w, BathParams(1.0, 0.3))

    @pytest.mark.parametrize("w,b", [(1.0, 1.0), (0.2, 3.0), (4.1, 0.5)])
    def test_small_u_continuity(self, w, b):
        # |N(u) - Bose| <= C u^2, with C the analytic u^2 coefficient
        # (a n'/2 + a^2 n''/6, n' = -n(n+1), n'' = n(n+1)(2n+1)) plus margin.
        a = w * b
        n = bose(a)
        coef = abs(-a * n * (n + 1) / 2 + a * a * n * (n + 1) * (2 * n + 1) / 6)
        for u in (1e-6, 1e-5, 5e-5, 0.999e-4, 1.001e-4, 1e-3, 1e-2):
            diff = abs(occupation(w, BathParams(b, u)) - n)
            assert diff <= 1.01 * coef * u * u + 1e-15

    def test_no_jump_at_series_switch(self):
        b_lo, b_hi = BathParams(1.0, U_SWITCH * (1 - 1e-9)), BathParams(1.0, U_SWITCH * (1 + 1e-9))
        assert occupation(1.0, b_lo) == pytest.approx(occupation(1.0, b_hi), rel=1e-13)
        for u in (0.5 * U_SWITCH, 0.99 * U_SWITCH):
            assert occupation(1.0, BathParams(1.0, u)) == pytest.approx(float(occupation_mp(1.0, 1.0, u)), rel=1e-14)


class TestQuadrature:
    def test_u05(self):
        b = BathParams(1.0, 0.5)
        assert occupation_quadrature(1.0, b) == pytest.approx(occupation(1.0, b), rel=1e-10)

    def test_degenerate_interval(self):
        assert occupation_quadrature(1.0, BathParams(1.0, 1e-6)) == pytest.approx(1 / math.expm1(1.0), rel=1e-9)

    def test_ultrarelativistic_omega20(self):
        b = BathParams(1.0, 0.99)
        assert occupation_quadrature(4.1, b) == pytest.approx(occupation(4.1, b), rel=1e-10)

    def test_rest_returns_bose(self):
        assert occupation_quadrature(2.0, BathParams(1.0, 0.0)) == bose(2.0)


class TestSpectralRate:
    def test_vacuum_limit(self):
        lam = 0.3
        g = spectral_rate(1.0, BathParams(1e3, 0.0, lam))
        assert g.gamma == pytest.approx(lam**2 / (2 * math.pi), rel=1e-15)
        assert spectral_rate(-1.0, BathParams(1e3, 0.0, lam)).gamma == pytest.approx(0.0, abs=1e-300)

    @pytest.mark.parametrize("w,b", [(0.5, 1.0), (1.0, 2.0), (3.0, 0.2)])
    def test_standard_kms_at_rest(self, w, b):
        bath = BathParams(b, 0.0)
        ratio = spectral_rate(w, bath).gamma / spectral_rate(-w, bath).gamma
        assert ratio == pytest.approx(math.exp(b * w), rel=1e-13)

    def test_absorption_from_oracle(self):
        lam = 0.1
        bath = BathParams(1.0, 0.6, lam)
        expected = lam**2 / (2 * math.pi) * occupation_quadrature(1.0, bath)
        assert spectral_rate(-1.0, bath).gamma == pytest.approx(expected, rel=1e-10)

    def test_zero_frequency_rejected(self):
        with pytest.raises(ValueError):
            spectral_rate(0.0, BathParams(1.0, 0.2))


class TestBetaEff:
    @pytest.mark.parametrize("w", [0.1, 1.0, 4.1, 30.0])
    def test_equals_beta_at_rest(self, w):
        assert beta_eff(w, BathParams(1.7, 0.0)) == 1.7

    def test_positive(self):
        assert beta_eff(1.0, BathParams(1.0, 0.6)) >= 0

    def test_monotone_on_paper_grid(self):
        x = kms_log_ratio(np.array([0.5, 1.0, 2.0, 4.1]), BathParams(1.0, 0.6))
        assert np.all(np.diff(x) > 0)

    @settings(max_examples=80, deadline=None)
    @given(omegas, betas, velocities)
    def test_modified_kms_identity(self, w, b, u):
        bath = BathParams(b, u)
        lhs = log_spectral_rate(w, bath) - log_spectral_rate(-w, bath)
        rhs = beta_eff(w, bath) * w
        ln_n = log_occupation(w, bath)
        assert rhs == pytest.approx(np.logaddexp(0.0, -ln_n), rel=1e-12)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(betas, velocities)
    def test_strictly_increasing_over_four_decades(self, b, u):
        ws = np.geomspace(0.01, 100.0, 60)
        x = kms_log_ratio(ws, BathParams(b, u))
        assert np.all(np.diff(x) > 0)
        assert np.all(beta_eff(ws, BathParams(b, u)) >= 0)


def test_spectral_rate_vectorised():
    bath = BathParams(0.8, 0.7)
    ws = np.array([-2.0, -0.5, 0.5, 2.0])
    vec = spectral_rate(ws, bath).gamma
    np.testing.assert_allclose(vec, [spectral_rate(w, bath).gamma for w in ws], rtol=1e-15)
    with pytest.raises(ValueError):
        spectral_rate(np.array([1.0, 0.0]), bath)
