import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ggescatter import oracle
from ggescatter.gge import DELTA, GgeState
from ggescatter.model import ModelParams, Variant, bogoliubov_table, build_grid
from ggescatter.reset_kernel import (ResetParams, a_omega, a_omega_constant, cycle_rate,
                                     cycle_rate_direct, evolve_cycles, kernel_gca, kernel_gs,
                                     kernel_matrices, reset_kernels)
from ggescatter.steady import ResetFlow, solve_by_evolution

FP = ModelParams(0.8, 0.45, Variant.FLOQUET)


def ftable(L, J=0.8, h=0.45):
    return bogoliubov_table(ModelParams(J, h, Variant.FLOQUET), build_grid(L))


class TestParams:
    def test_constant(self):
        p = ResetParams.constant(0.8, 6, 0.1)
        assert p.T == 6 and p.is_constant and np.all(p.lambdas == 0.1)

    @pytest.mark.parametrize("T, lam", [(0, [0.1]), (3, [0.1, 0.2]), (2.5, [0.1, 0.1])])
    def test_invalid(self, T, lam):
        with pytest.raises(ValueError):
            ResetParams(0.8, T, lam)

    def test_autocorrelation(self):
        p = ResetParams(0.0, 3, [1.0, 2.0, 3.0])
        np.testing.assert_allclose(p.autocorrelation(), [3, 8, 14, 8, 3])


class TestSpectralFunction:
    def test_resonance(self):
        p = ResetParams.constant(0.8, 6, np.sqrt(0.01))
        assert a_omega(np.pi * 0.8, p) == pytest.approx(0.01 * 36)
        assert a_omega_constant(np.pi * 0.8, p) == pytest.approx(0.01 * 36, rel=1e-14)

    def test_single_step(self, rng):
        p = ResetParams(0.3, 1, [0.25])
        np.testing.assert_allclose(a_omega(rng.uniform(-10, 10, 20), p), 0.0625)

    @given(st.floats(-20, 20), st.floats(-2, 2), st.integers(1, 30))
    def test_periodic_and_nonnegative(self, w, h_A, T):
        p = ResetParams(h_A, T, np.linspace(0.05, 0.2, T))
        a = a_omega(w, p)
        assert a >= 0
        assert a_omega(w + 2 * np.pi, p) == pytest.approx(a, rel=1e-9, abs=1e-15)

    @given(st.floats(-20, 20), st.floats(-2, 2), st.integers(1, 30), st.floats(0.01, 0.4))
    def test_closed_form(self, w, h_A, T, lam):
        p = ResetParams.constant(h_A, T, lam)
        assert a_omega_constant(w, p) == pytest.approx(a_omega(w, p), rel=1e-12, abs=1e-12 * lam**2)

    def test_closed_form_near_resonance(self):
        p = ResetParams.constant(0.5, 30, 0.1)
        w = 0.5 * np.pi + np.array([0, 1e-9, 1e-7, 2e-6, -3e-6, 2 * np.pi + 1e-8])
        np.testing.assert_allclose(a_omega_constant(w, p), a_omega(w, p), rtol=1e-12)

    def test_closed_form_needs_constant(self):
        with pytest.raises(ValueError):
            a_omega_constant(0.0, ResetParams(0.0, 2, [0.1, 0.2]))


class TestKernels:
    def test_ca_vanishes_on_diagonal(self):
        _, gca = kernel_matrices(ftable(64))
        assert np.all(np.diag(gca) == 0) or np.abs(np.diag(gca)).max() < 1e-30

    def test_pointwise_diagonal(self, rng):
        q = rng.uniform(0, 2 * np.pi, 10)
        assert np.abs(kernel_gca(q, q, FP)).max() < 1e-30

    @pytest.mark.parametrize("L", [64, 500])
    def test_nonnegative(self, L):
        for K in kernel_matrices(ftable(L)):
            assert K.min() >= -1e-12

    def test_trivial_coefficients(self, rng):
        # J = 0 makes the Floquet rotation trivial
        p = ModelParams(0.0, 0.3, Variant.FLOQUET)
        q, qp = rng.uniform(0, 2 * np.pi, (2, 20))
        np.testing.assert_allclose(kernel_gs(q, qp, p), 1 + np.cos(q + qp), atol=1e-14)
        np.testing.assert_allclose(kernel_gca(q, qp, p), 0, atol=1e-14)

    def test_matrices_match_pointwise(self, rng):
        t = ftable(32)
        gs, gca = kernel_matrices(t)
        i, j = rng.integers(0, 32, (2, 20))
        np.testing.assert_allclose(gs[i, j], kernel_gs(t.q[i], t.q[j], FP), atol=1e-14)
        np.testing.assert_allclose(gca[i, j], kernel_gca(t.q[i], t.q[j], FP), atol=1e-14)


class TestCycleRate:
    @given(st.integers(1, 12), st.floats(-1.5, 1.5), st.integers(0, 2**32 - 1))
    def test_fused_equals_double_sum(self, T, h_A, seed):
        rng = np.random.default_rng(seed)
        t = ftable(64)
        p = ResetParams(h_A, T, rng.uniform(0.01, 0.2, T))
        s = GgeState(t, rng.uniform(0, 1, 64))
        fast, slow = cycle_rate(s, p), cycle_rate_direct(s, p)
        assert np.abs(fast - slow).max() <= 1e-12 * np.abs(slow).max()

    def test_kernels_checked(self):
        t = ftable(16)
        p = ResetParams.constant(0.8, 4, 0.1)
        k = reset_kernels(t, p)
        with pytest.raises(ValueError):
            cycle_rate(GgeState.ground(t), ResetParams.constant(0.8, 4, 0.1), k)
        with pytest.raises(ValueError):
            cycle_rate(GgeState.ground(ftable(8)), p, k)

    def test_needs_floquet(self):
        t = bogoliubov_table(ModelParams(1, 0.6), build_grid(8))
        with pytest.raises(ValueError):
            cycle_rate(GgeState.ground(t), ResetParams.constant(0.8, 2, 0.1))

    @given(arrays(float, 40, elements=st.floats(0, 1)), st.integers(1, 30), st.floats(0.0, 0.2))
    def test_range_preserved(self, n, T, lam):
        p = ResetParams.constant(0.8, T, lam)
        s = evolve_cycles(GgeState(ftable(40), n), p, 1)
        assert s.n.min() >= DELTA and s.n.max() <= 1 - DELTA

    @pytest.mark.slow
    def test_converges_to_oracle_as_lambda_shrinks(self):
        """Per-cycle occupation change of the exact circuit approaches the cycle rate as lambda^2."""
        L = 4
        t = ftable(L)
        nops = oracle.mode_number_operators(t)
        rho = oracle.infinite_temperature(L, "even")
        n0 = oracle.mode_occupations_exact(rho, t, nops)
        errs = []
        for lam in (0.2, 0.1, 0.05):
            p = ResetParams.constant(0.8, 4, lam)
            circuit = oracle.reset_circuit(FP, p, L)
            exact = oracle.mode_occupations_exact(circuit.cycle(rho), t, nops) - n0
            pred = cycle_rate(GgeState(t, n0), p)
            errs.append(np.abs(exact - pred).max() / np.abs(pred).max())
        assert errs[0] < 0.1
        assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3


class TestEvolveCycles:
    def test_zero_cycles(self):
        s = GgeState.infinite_temperature(ftable(16))
        assert evolve_cycles(s, ResetParams.constant(0.8, 6, 0.1), 0) is s

    def test_clock_and_observer(self):
        s = GgeState.infinite_temperature(ftable(16))
        seen = []
        out = evolve_cycles(s, ResetParams.constant(0.8, 6, 0.1), 7, seen.append)
        assert out.clock == 7 and [x.clock for x in seen] == list(range(1, 8))

    def test_negative(self):
        with pytest.raises(ValueError):
            evolve_cycles(GgeState.ground(ftable(4)), ResetParams.constant(0.8, 6, 0.1), -1)


def _steady(J, h, h_A, T=6, L=100):
    t = ftable(L, J, h)
    flow = ResetFlow(t, ResetParams.constant(h_A, T, 0.1))
    return solve_by_evolution(GgeState.infinite_temperature(t), flow, tol=1e-13,
                              max_time=2e4, criterion="max").state.n


@pytest.fixture(scope="module")
def base():
    return _steady(0.8, 0.45, 0.8)


class TestSymmetries:
    def test_ancilla_field_reflection(self, base):
        assert np.abs(_steady(0.8, 0.45, -0.8) - (1 - base)).max() < 1e-8

    def test_field_shift_reflects(self, base):
        assert np.abs(_steady(0.8, 1.45, 0.8) - (1 - base)).max() < 1e-8

    def test_field_sign_shifts_momentum(self, base):
        shift = build_grid(100).shift_index()
        assert np.abs(_steady(0.8, -0.45, 0.8) - base[shift]).max() < 1e-8

    @pytest.mark.parametrize("dJ, dh, dA", [(2, 0, 0), (0, 2, 0), (0, 0, 2)])
    def test_period_two(self, base, dJ, dh, dA):
        assert np.abs(_steady(0.8 + dJ, 0.45 + dh, 0.8 + dA) - base).max() < 1e-8
