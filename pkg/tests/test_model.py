"""Model parameters, nonlinearities, and right-hand sides.

The rhs oracle is a second, hand-coded scalar implementation that shares
no code with the package (plain Python floats, direct transcription of
each equation term).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhw.errors import DomainError
from hhw.model import (
    NetworkState,
    Trajectory,
    TrajectoryMeta,
    hhw_rhs,
    m_inf,
    memristive_rhs,
    psi,
    r_inf,
    wilson_memristive_params,
    wilson_params,
)


def scalar_rhs_oracle(V, R, p):
    """Independent plug-in evaluation of the classical equations."""
    n = len(V)
    dV, dR = [], []
    for i in range(n):
        m = p.a0 + p.a1 * V[i] + p.a2 * V[i] ** 2
        rinf = p.H / (1.0 + math.exp(-p.lam * (V[i] - p.E_K)))
        coupling = sum(p.P * (V[j] - V[i]) for j in range(n))
        dV.append(
            -m * (V[i] - p.E_Na)
            - p.g_K * R[i] * (V[i] - p.E_K)
            + p.J
            + coupling
        )
        dR.append((-R[i] + rinf) / p.tau_K)
    return dV, dR


class TestParams:
    def test_wilson_preset_values(self):
        p = wilson_params(2)
        assert (p.a0, p.a1, p.a2) == (17.8, 47.6, 33.8)
        assert (p.g_K, p.E_Na, p.E_K) == (26.0, 0.5, -0.95)
        assert (p.H, p.tau_K, p.lam, p.J) == (1.0, 4.2, 1.0, 0.0)

    def test_sign_constraints(self):
        with pytest.raises(DomainError):
            wilson_params(2, a0=-1.0)
        with pytest.raises(DomainError):
            wilson_params(2, E_K=0.1)
        with pytest.raises(DomainError):
            wilson_params(2, tau_K=0.0)
        with pytest.raises(DomainError):
            wilson_params(2, P=-1.0)
        with pytest.raises(DomainError):
            wilson_params(1)

    def test_memristive_constraints(self):
        with pytest.raises(DomainError):
            wilson_memristive_params(2, alpha=1.0)
        with pytest.raises(DomainError):
            wilson_memristive_params(2, k=0.0)
        with pytest.raises(DomainError):
            wilson_memristive_params(2, b=-2.0)
        with pytest.raises(DomainError):
            wilson_memristive_params(2, gamma=(0.1, 0.2, 0.3))
        p = wilson_memristive_params(3, gamma=0.5)
        assert p.gamma == (0.5, 0.5, 0.5)
        assert p.dim == 7


class TestNonlinearities:
    def test_m_inf_examples(self):
        p = wilson_params(2)
        assert m_inf(0.0, p) == pytest.approx(17.8)
        assert m_inf(1.0, p) == pytest.approx(99.2)

    @given(st.floats(min_value=-3.0, max_value=3.0))
    @settings(max_examples=30, deadline=None)
    def test_m_inf_vertex(self, s):
        p = wilson_params(2)
        vertex = -p.a1 / (2 * p.a2)
        assert m_inf(s, p) >= m_inf(vertex, p) - 1e-12
        assert m_inf(vertex, p) == pytest.approx(p.a0 - p.a1**2 / (4 * p.a2))

    def test_r_inf_midpoint_and_saturation(self):
        p = wilson_params(2, lam=1.0)
        assert r_inf(p.E_K, p) == pytest.approx(0.5)
        p2 = wilson_params(2, lam=2.0)
        ref = 1.0 / (1.0 + math.exp(-20.0))
        assert r_inf(p2.E_K + 10.0, p2) == pytest.approx(ref, rel=1e-14)
        assert r_inf(1e6, p2) == pytest.approx(p2.H)

    @given(
        st.floats(min_value=-10.0, max_value=10.0),
        st.floats(min_value=-3.0, max_value=3.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_r_inf_strictly_inside_0_H(self, s, lam):
        # strict bounds hold wherever 1 - sigmoid is representable in a
        # double (|lam (s - E_K)| below ~36); past that the value rounds
        # onto the boundary, covered by the saturation test below
        p = wilson_params(2, lam=lam, H=1.0)
        v = r_inf(s, p)
        assert np.isfinite(v)
        assert 0.0 < v < p.H

    def test_r_inf_extreme_arguments_stay_finite(self):
        # the stable sigmoid saturates instead of overflowing
        p = wilson_params(2, lam=700.0)
        for s in (-1e6, -1e3, 1e3, 1e6):
            v = r_inf(s, p)
            assert np.isfinite(v)
            assert 0.0 <= v <= p.H

    def test_psi_roots_and_cap(self):
        for beta in (0.5, 1.0, 2.0):
            assert psi(0.0, beta) == 0.0
            assert psi(1.0 / beta, beta) == pytest.approx(0.0)
            assert psi(1.0 / (2 * beta), beta) == pytest.approx(1.0 / (4 * beta))
        with pytest.raises(DomainError):
            psi(1.0, 0.0)


class TestClassicalRhs:
    def test_identical_neurons_have_identical_derivatives(self):
        p = wilson_params(3, P=5.0)
        y = np.array([0.2, 0.2, 0.2, -0.1, -0.1, -0.1])
        dy = hhw_rhs(y, p)
        assert dy[0] == dy[1] == dy[2]
        assert dy[3] == dy[4] == dy[5]

    def test_origin_plug_in(self):
        p = wilson_params(2, J=0.0)
        dy = hhw_rhs(np.zeros(4), p)
        assert dy[0] == pytest.approx(p.a0 * p.E_Na)
        assert dy[2] == pytest.approx(r_inf(0.0, p) / p.tau_K)

    def test_matches_scalar_oracle(self):
        p = wilson_params(2, P=3.0, J=0.0)
        y = np.array([0.1, -0.1, 0.0, 0.0])
        dy = hhw_rhs(y, p)
        dV, dR = scalar_rhs_oracle([0.1, -0.1], [0.0, 0.0], p)
        for i in range(2):
            assert dy[i] == pytest.approx(dV[i], abs=1e-14)
            assert dy[2 + i] == pytest.approx(dR[i], abs=1e-14)

    @given(st.lists(st.floats(min_value=-2, max_value=2), min_size=6, max_size=6))
    @settings(max_examples=40, deadline=None)
    def test_matches_scalar_oracle_randomized(self, vals):
        p = wilson_params(3, P=7.5, J=1.0, lam=-0.7)
        y = np.array(vals)
        dy = hhw_rhs(y, p)
        dV, dR = scalar_rhs_oracle(vals[:3], vals[3:], p)
        for i in range(3):
            assert dy[i] == pytest.approx(dV[i], rel=1e-12, abs=1e-12)
            assert dy[3 + i] == pytest.approx(dR[i], rel=1e-12, abs=1e-12)

    @given(st.permutations([0, 1, 2]))
    @settings(max_examples=12, deadline=None)
    def test_permutation_symmetry(self, perm):
        p = wilson_params(3, P=2.0)
        V = np.array([0.3, -0.4, 0.9])
        R = np.array([0.1, 0.5, -0.2])
        dy = hhw_rhs(np.concatenate([V, R]), p)
        perm = list(perm)
        dy_perm = hhw_rhs(np.concatenate([V[perm], R[perm]]), p)
        np.testing.assert_allclose(dy_perm[:3], dy[:3][perm], rtol=0, atol=1e-14)
        np.testing.assert_allclose(dy_perm[3:], dy[3:][perm], rtol=0, atol=1e-14)

    def test_network_state_round_trip(self):
        p = wilson_params(2, P=1.0)
        state = NetworkState(V=[0.1, 0.2], R=[0.0, -0.1])
        out = hhw_rhs(state, p)
        assert isinstance(out, NetworkState)
        flat = hhw_rhs(state.to_vector(), p)
        np.testing.assert_array_equal(out.to_vector(), flat)

    def test_dimension_mismatch(self):
        p = wilson_params(2)
        with pytest.raises(ValueError):
            hhw_rhs(np.zeros(5), p)
        with pytest.raises(TypeError):
            hhw_rhs(np.zeros(4), wilson_memristive_params(2))


class TestMemristiveRhs:
    def test_rho_at_window_roots_reduces_to_classical(self):
        mp_ = wilson_memristive_params(2, P=2.0, k=3.0, beta=0.5)
        y_core = np.array([0.2, -0.3, 0.1, 0.4])
        classical = hhw_rhs(y_core, mp_.base)
        for rho in (0.0, 1.0 / mp_.beta):
            dy = memristive_rhs(np.concatenate([y_core, [rho]]), mp_)
            np.testing.assert_allclose(dy[:4], classical, rtol=0, atol=1e-12)

    def test_rho_equation_plug_in(self):
        mp_ = wilson_memristive_params(3, gamma=1.0, b=2.0)
        y = np.zeros(7)
        y[6] = 1.0
        dy = memristive_rhs(y, mp_)
        assert dy[6] == pytest.approx(-2.0)

    def test_small_k_matches_classical(self):
        mp_ = wilson_memristive_params(2, P=1.0, k=1e-300, beta=1.0)
        y = np.array([0.2, -0.3, 0.1, 0.4, 0.7])
        dy = memristive_rhs(y, mp_)
        classical = hhw_rhs(y[:4], mp_.base)
        np.testing.assert_allclose(dy[:4], classical, rtol=0, atol=1e-15)

    def test_missing_rho(self):
        mp_ = wilson_memristive_params(2)
        with pytest.raises(ValueError):
            memristive_rhs(np.zeros(4), mp_)


class TestContainers:
    def test_state_vector_layout(self):
        s = NetworkState(V=[1.0, 2.0], R=[3.0, 4.0], rho=5.0)
        np.testing.assert_array_equal(s.to_vector(), [1, 2, 3, 4, 5])
        back = NetworkState.from_vector(s.to_vector(), 2)
        assert back.rho == 5.0
        with pytest.raises(ValueError):
            NetworkState.from_vector(np.zeros(6), 4)

    def test_trajectory_validation(self):
        p = wilson_params(2)
        meta = TrajectoryMeta("classical", p, "classical_fixed", 0.1)
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 0.0]), np.zeros((2, 4)), meta)
        tr = Trajectory(np.array([0.0, 0.1]), np.arange(8.0).reshape(2, 4), meta)
        assert tr.n == 2 and not tr.has_rho
        np.testing.assert_array_equal(tr.V[1], [4.0, 5.0])
        assert tr.state_at(1).R[0] == 6.0
