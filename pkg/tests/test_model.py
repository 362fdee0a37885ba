import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from ggescatter.model import (GaplessModeError, ModelParams, Variant, bogoliubov_coefficients,
                              bogoliubov_continuous, bogoliubov_floquet, bogoliubov_table,
                              build_grid, charge_coefficients, floquet_block)

couplings = st.floats(0.05, 3.0)
momenta = st.floats(0.0, 2 * np.pi)
floquet_params = st.floats(-1.9, 1.9)


def floquet_eigen(J, h, q):
    X, Z = floquet_block(ModelParams(J, h, Variant.FLOQUET), q)
    return sla.expm(-1j * X) @ sla.expm(-1j * Z)


class TestGrid:
    def test_two_sites(self):
        np.testing.assert_allclose(build_grid(2).momenta, [np.pi / 2, 3 * np.pi / 2])

    def test_four_sites(self):
        np.testing.assert_allclose(build_grid(4).momenta, np.pi * np.array([1, 3, 5, 7]) / 4)

    def test_large_grid(self):
        g = build_grid(10**5)
        assert g.momenta.size == 10**5
        assert g.momenta.min() == pytest.approx(np.pi / 10**5)

    @pytest.mark.parametrize("L", [0, 1, -3, 2.5])
    def test_rejects_small(self, L):
        with pytest.raises(ValueError):
            build_grid(L)

    @given(st.integers(2, 400))
    def test_ordering_and_range(self, L):
        q = build_grid(L).momenta
        assert q.size == L
        assert np.all(np.diff(q) > 0)
        assert q[0] > 0 and q[-1] < 2 * np.pi
        if L % 2 == 0:
            assert not np.any(np.isclose(q, np.pi, atol=0, rtol=0))

    def test_index_maps(self):
        g = build_grid(10)
        np.testing.assert_allclose(g.momenta[g.inverse_index], 2 * np.pi - g.momenta)
        np.testing.assert_allclose(np.mod(g.momenta[g.shift_index()], 2 * np.pi),
                                   np.mod(g.momenta + np.pi, 2 * np.pi))

    def test_arrays_are_read_only(self):
        g = build_grid(4)
        with pytest.raises(ValueError):
            g.momenta[0] = 1.0


class TestContinuous:
    def test_long_wavelength_limit(self):
        eps, u, v = bogoliubov_coefficients(ModelParams(1, 0.6), np.array([0.0]))
        assert eps[0] == pytest.approx(3.2)
        assert u[0] == 1.0 and v[0] == 0.0

    def test_zone_boundary(self):
        eps, u, v = bogoliubov_coefficients(ModelParams(1, 0.6), np.array([np.pi]))
        assert eps[0] == pytest.approx(0.8)
        assert u[0] == pytest.approx(0.0, abs=1e-12) and abs(v[0]) == pytest.approx(1.0)

    @given(couplings, couplings, momenta)
    def test_identities(self, J, h, q):
        eps, u, v = bogoliubov_coefficients(ModelParams(J, h), np.array([q]))
        a, b = 2 * (J * np.cos(q) + h), -2 * J * np.sin(q)
        assert eps[0] ** 2 == pytest.approx(a * a + b * b, rel=1e-12, abs=1e-12)
        assert u[0] ** 2 + v[0] ** 2 == pytest.approx(1.0, abs=1e-12)

    @given(couplings, couplings, st.integers(2, 200))
    def test_table_invariants(self, J, h, L):
        g = build_grid(L)
        try:
            t = bogoliubov_continuous(ModelParams(J, h), g)
        except GaplessModeError:
            return
        np.testing.assert_allclose(t.u**2 + t.v**2, 1.0, atol=1e-12)
        np.testing.assert_allclose(t.eps, t.eps[g.inverse_index], atol=1e-12)
        assert np.all(t.eps >= 2 * abs(J - h) - 1e-12)
        assert np.all(t.eps <= 2 * (J + h) + 1e-12)
        assert t.e0 == pytest.approx(-0.5 * t.eps.sum())

    def test_diagonalizes_block(self, rng):
        """``[[a, b], [b, -a]]`` is rotated to ``eps * diag(1, -1)`` by ``[[u, -v], [v, u]]``."""
        J, h = 1.0, 0.6
        for q in rng.uniform(0, 2 * np.pi, 20):
            eps, u, v = bogoliubov_coefficients(ModelParams(J, h), np.array([q]))
            a, b = 2 * (J * np.cos(q) + h), -2 * J * np.sin(q)
            P = np.array([[u[0], -v[0]], [v[0], u[0]]])
            D = P.T @ np.array([[a, b], [b, -a]]) @ P
            np.testing.assert_allclose(D, np.diag([eps[0], -eps[0]]), atol=1e-12)

    def test_singular_locus_negative_a(self):
        # b = 0 with a < 0 happens at q = pi for h < J
        eps, u, v = bogoliubov_coefficients(ModelParams(1.0, 0.3), np.array([np.pi]))
        assert u[0] == pytest.approx(0.0, abs=1e-8) and abs(v[0]) == pytest.approx(1.0)

    def test_gapless_rejected(self):
        # J = h puts the gapless point q = pi on odd grids
        with pytest.raises(GaplessModeError):
            bogoliubov_continuous(ModelParams(1.0, 1.0), build_grid(5))

    def test_variant_mismatch(self):
        with pytest.raises(ValueError):
            bogoliubov_continuous(ModelParams(1, 0.6, "floquet"), build_grid(4))


class TestFloquet:
    def test_limits(self):
        p = ModelParams(0.8, 0.45, Variant.FLOQUET)
        eps, _, _ = bogoliubov_coefficients(p, np.array([0.0, np.pi]))
        np.testing.assert_allclose(eps, [0.75 * np.pi, 0.35 * np.pi], atol=1e-12)

    @given(floquet_params, floquet_params, momenta)
    def test_matches_block_eigenphases(self, J, h, q):
        eps, u, v = bogoliubov_coefficients(ModelParams(J, h, Variant.FLOQUET), np.array([q]))
        phases = np.sort(np.angle(np.linalg.eigvals(floquet_eigen(J, h, q))))
        np.testing.assert_allclose(phases, [-eps[0], eps[0]], atol=1e-12)

    @given(floquet_params, floquet_params, momenta)
    def test_coefficients_diagonalize_block(self, J, h, q):
        eps, u, v = bogoliubov_coefficients(ModelParams(J, h, Variant.FLOQUET), np.array([q]))
        if np.sin(eps[0]) < 1e-6:
            return
        P = np.array([[u[0], -np.conj(v[0])], [v[0], u[0]]])
        D = P.conj().T @ floquet_eigen(J, h, q) @ P
        np.testing.assert_allclose(D, np.diag(np.exp([-1j * eps[0], 1j * eps[0]])), atol=1e-10)
        assert u[0] >= 0 and np.isrealobj(u)

    @given(floquet_params, floquet_params, st.integers(2, 120))
    def test_table_invariants(self, J, h, L):
        g = build_grid(L)
        try:
            t = bogoliubov_floquet(ModelParams(J, h, Variant.FLOQUET), g)
        except GaplessModeError:
            return
        np.testing.assert_allclose(t.u**2 + np.abs(t.v) ** 2, 1.0, atol=1e-12)
        np.testing.assert_allclose(t.eps, t.eps[g.inverse_index], atol=1e-12)
        assert np.all((t.eps >= 0) & (t.eps <= np.pi))

    def test_gapless_rejected(self):
        # J = h = 0.5 gives cos(eps) = -cos q, which is +-1 only at q in {0, pi}
        with pytest.raises(GaplessModeError):
            bogoliubov_floquet(ModelParams(0.5, 0.5, Variant.FLOQUET), build_grid(3))

    def test_block_examples(self):
        p = ModelParams(0.7, 0.2, Variant.FLOQUET)
        X0, Z = floquet_block(p, 0.0)
        np.testing.assert_allclose(X0, np.pi * 0.7 * np.diag([1, -1]))
        Xh, _ = floquet_block(p, np.pi / 2)
        np.testing.assert_allclose(np.diag(Xh), 0, atol=1e-15)
        np.testing.assert_allclose(Xh[0, 1], -np.pi * 0.7)
        for M in (X0, Xh, Z):
            np.testing.assert_allclose(M, M.conj().T)
            assert abs(np.trace(M)) < 1e-15


class TestCharges:
    @pytest.fixture
    def table(self):
        return bogoliubov_table(ModelParams(1, 0.6), build_grid(16))

    def test_hamiltonian(self, table):
        np.testing.assert_allclose(charge_coefficients(table, 0).coeffs, table.eps)

    def test_first_odd(self, table):
        np.testing.assert_allclose(charge_coefficients(table, 1).coeffs, 2 * np.sin(table.q))

    def test_first_even(self, table):
        np.testing.assert_allclose(charge_coefficients(table, 2).coeffs, np.cos(table.q) * table.eps)

    def test_higher(self, table):
        np.testing.assert_allclose(charge_coefficients(table, 5).coeffs, 2 * np.sin(3 * table.q))
        np.testing.assert_allclose(charge_coefficients(table, 6).coeffs, np.cos(3 * table.q) * table.eps)

    def test_negative_index(self, table):
        with pytest.raises(ValueError):
            charge_coefficients(table, -1)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(np.inf, 0.5)
    with pytest.raises(ValueError):
        ModelParams(1.0, np.nan)
    assert ModelParams(1, 0.5, "floquet").variant is Variant.FLOQUET
