import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import random_level_system
from movingbath.bath import BathParams
from movingbath.dynamics import (
    StationaryCoherenceWarning,
    check_density_matrix,
    check_populations,
    coherence_decay_rate,
    coherence_decay_rates,
    gksl_evolve,
    gksl_liouvillian,
    pauli_evolve,
)
from movingbath.steady_state import solve_steady
from movingbath.system import LevelSystem, delta_three_level, rate_matrix, rate_matrix_from_rates


def random_state(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


@pytest.fixture
def lambda_big():
    # larger coupling makes dissipation visible over short times
    sys = delta_three_level()
    return sys, rate_matrix(sys, BathParams(1.0, 0.6, 1.0))


class TestPauli:
    @pytest.mark.parametrize("method", ["rk", "stiff", "expm"])
    def test_methods_agree_with_matrix_exponential(self, lambda_big, method):
        _, k = lambda_big
        p0 = np.array([0.2, 0.3, 0.5])
        ref = expm(k.generator * 7.0) @ p0
        np.testing.assert_allclose(pauli_evolve(p0, k, 7.0, method=method), ref, rtol=1e-8, atol=1e-12)

    def test_conserves_probability(self, lambda_big):
        _, k = lambda_big
        p = pauli_evolve([1, 0, 0], k, 3.0)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(p >= 0)

    def test_relaxes_to_steady_state(self, lambda_big):
        _, k = lambda_big
        p = pauli_evolve([1, 0, 0], k, 2000.0, method="stiff")
        np.testing.assert_allclose(p, solve_steady(k), rtol=1e-7)

    def test_zero_time(self, lambda_big):
        _, k = lambda_big
        np.testing.assert_array_equal(pauli_evolve([0, 1, 0], k, 0.0), [0, 1, 0])

    def test_validation(self, lambda_big):
        _, k = lambda_big
        with pytest.raises(ValueError):
            pauli_evolve([0.5, 0.6, 0.0], k, 1.0)
        with pytest.raises(ValueError):
            pauli_evolve([1, 0, 0], k, -1.0)
        with pytest.raises(ValueError):
            pauli_evolve([1, 0, 0], k, 1.0, method="euler")


class TestCoherenceRates:
    def test_outgoing_escape_rates(self):
        r = np.array([[0, 1.0, 2.0], [3.0, 0, 4.0], [5.0, 6.0, 0]])
        k = rate_matrix_from_rates(r)
        assert coherence_decay_rate(0, 1, k) == pytest.approx(0.5 * (3.0 + 7.0))
        assert coherence_decay_rate(1, 2, k) == pytest.approx(0.5 * (7.0 + 11.0))
        g = coherence_decay_rates(k)
        assert g[2, 0] == g[0, 2] == pytest.approx(0.5 * (11.0 + 3.0))
        with pytest.raises(ValueError):
            coherence_decay_rate(1, 1, k)

    def test_match_liouvillian_spectrum(self):
        # With a non-degenerate spectrum the coherence |i><j| is an eigenvector
        # of the superoperator with eigenvalue -i w_ij - g_ij.
        rng = np.random.default_rng(2)
        sys = random_level_system(rng, 4)
        k = rate_matrix(sys, BathParams(0.8, 0.5, 0.6))
        sup = gksl_liouvillian(sys, k)
        g = coherence_decay_rates(k)
        e = sys.energies
        n = 4
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                vec = np.zeros(n * n, dtype=complex)
                vec[i * n + j] = 1.0
                out = sup @ vec
                expected = -(1j * (e[i] - e[j]) + g[i, j])
                assert out[i * n + j] == pytest.approx(expected, rel=1e-12)
                assert np.count_nonzero(np.abs(out) > 1e-15) == 1


class TestGKSL:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0.0, 30.0))
    def test_against_full_liouvillian(self, seed, tau):
        rng = np.random.default_rng(seed)
        sys = random_level_system(rng, 3)
        k = rate_matrix(sys, BathParams(float(rng.uniform(0.2, 3)), float(rng.uniform(0, 0.95)), 0.5))
        rho0 = random_state(rng, 3)
        ref = (expm(gksl_liouvillian(sys, k) * tau) @ rho0.reshape(-1)).reshape(3, 3)
        np.testing.assert_allclose(gksl_evolve(rho0, sys, k, tau), ref, rtol=1e-7, atol=1e-10)

    def test_stays_physical(self, lambda_big):
        sys, k = lambda_big
        rho0 = random_state(np.random.default_rng(0), 3)
        for tau in (0.1, 1.0, 10.0, 100.0):
            check_density_matrix(gksl_evolve(rho0, sys, k, tau))

    def test_coherences_vanish_populations_reach_ness(self, lambda_big):
        sys, k = lambda_big
        rho0 = random_state(np.random.default_rng(5), 3)
        rho = gksl_evolve(rho0, sys, k, 5000.0, method="stiff")
        off = rho - np.diag(np.diag(rho))
        assert np.abs(off).max() < 1e-12
        np.testing.assert_allclose(np.real(np.diag(rho)), solve_steady(k), rtol=1e-7)

    def test_isolated_levels_warn(self):
        a = np.zeros((4, 4))
        a[0, 1] = a[1, 0] = 1.0
        sys = LevelSystem([0.0, 1.0, 2.5, 4.2], a)
        k = rate_matrix(sys, BathParams(1.0, 0.3, 1.0))
        rho0 = np.full((4, 4), 0.25, dtype=complex)
        with pytest.warns(StationaryCoherenceWarning, match=r"\(2, 3\)"):
            rho = gksl_evolve(rho0, sys, k, 50.0)
        assert abs(rho[2, 3]) == pytest.approx(0.25)
        assert abs(rho[0, 2]) < 0.25

    def test_size_mismatch(self, lambda_big):
        sys, _ = lambda_big
        k2 = rate_matrix_from_rates(np.ones((2, 2)))
        with pytest.raises(ValueError):
            gksl_evolve(np.eye(3) / 3, sys, k2, 1.0)


def test_state_validators():
    with pytest.raises(ValueError):
        check_populations([0.5, 0.5], n=3)
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(ValueError):
        check_density_matrix(np.eye(2))
