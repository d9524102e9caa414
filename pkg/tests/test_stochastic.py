"""Detailed-balance kernels, Gibbs quantization, Perron chains, conductance."""

import numpy as np
import pytest

from aqlab.operators import HermitianOperator, PauliTerm, build_operator, lowest_eigenpairs
from aqlab.problems import IsingCost, IsingInstance, TableCost, gen_spin_glass
from aqlab.stochastic import (
    ConductanceResult,
    NonStationaryError,
    ReducibleKernelError,
    StochasticMatrix,
    conductance,
    gap_bounds_check,
    gibbs_state,
    metropolis_matrix,
    perron_stochasticize,
    quantize,
)


def random_cost(seed, n=3):
    inst = gen_spin_glass(
        n, [(i, j) for i in range(n) for j in range(i + 1, n)], seed=seed, h_choices=(-0.5, 0.5)
    )
    return IsingCost(inst)


class TestStochasticMatrix:
    def test_column_sums_enforced(self):
        with pytest.raises(ValueError):
            StochasticMatrix(np.array([[0.5, 0.0], [0.4, 1.0]]))

    def test_negative_entries_rejected(self):
        with pytest.raises(ValueError):
            StochasticMatrix(np.array([[1.5, 0.0], [-0.5, 1.0]]))


class TestMetropolis:
    def test_one_spin_beta_zero_lazy(self):
        S = metropolis_matrix(TableCost(1, [0.0, 0.0]), beta=0.0, lazy=True)
        assert np.allclose(S.dense(), 0.25 + 0.25 * np.ones((2, 2)))

    def test_one_spin_beta_zero_swap(self):
        S = metropolis_matrix(TableCost(1, [0.0, 0.0]), beta=0.0, lazy=False)
        assert np.allclose(S.dense(), [[0, 1], [1, 0]])

    def test_detailed_balance_entrywise(self):
        cost = random_cost(31)
        S = metropolis_matrix(cost, beta=1.0, lazy=True)
        M, pi = S.dense(), S.pi
        # S(i|j) pi(j) = S(j|i) pi(i) for every pair
        defect = np.abs(M * pi[None, :] - M.T * pi[:, None]).max()
        assert defect <= 1e-12

    def test_size_guard(self):
        with pytest.raises(ValueError):
            metropolis_matrix(IsingCost(IsingInstance(n=13)), beta=1.0)


class TestQuantize:
    def test_lazy_symmetric_kernel_gives_half_i_minus_x(self):
        cost = TableCost(1, [0.0, 0.0])
        S = metropolis_matrix(cost, beta=0.0, lazy=True)
        H = quantize(S, cost, 0.0)
        assert np.allclose(H.dense(), [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)
        spec = lowest_eigenpairs(H, k=2)
        assert spec.eigenvalues[0] == pytest.approx(0.0, abs=1e-12)
        uniform = np.array([1.0, 1.0]) / np.sqrt(2)
        assert abs(abs(np.vdot(spec.eigenvectors[:, 0], uniform)) - 1.0) < 1e-10

    @pytest.mark.parametrize("beta", [0.25, 1.0, 1.7])
    def test_one_spin_closed_form(self, beta):
        # E(sigma) = -sigma via h = +1; lazy kernel
        cost = IsingCost(IsingInstance(n=1, h=[1.0]))
        S = metropolis_matrix(cost, beta=beta, lazy=True)
        H = quantize(S, cost, beta).dense().real
        expect = np.array(
            [
                [0.5 * np.exp(-2 * beta), -0.5 * np.exp(-beta)],
                [-0.5 * np.exp(-beta), 0.5],
            ]
        )
        assert np.abs(H - expect).max() < 1e-12
        g = gibbs_state(cost, beta)
        assert np.linalg.norm(H @ g.amplitudes) < 1e-12

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_gibbs_is_unique_ground(self, beta):
        cost = random_cost(5)
        S = metropolis_matrix(cost, beta=beta, lazy=True)
        H = quantize(S, cost, beta)
        g = gibbs_state(cost, beta)
        assert np.linalg.norm(H.dense() @ g.amplitudes) <= 1e-10
        spec = lowest_eigenpairs(H, k=2)
        assert spec.gap() > 0
        overlap = abs(np.vdot(spec.eigenvectors[:, 0], g.amplitudes)) ** 2
        assert overlap > 1.0 - 1e-8

    def test_kernel_cost_mismatch_rejected(self):
        cost = random_cost(5)
        other = random_cost(6)
        S = metropolis_matrix(cost, beta=1.0, lazy=True)
        with pytest.raises(ValueError, match="zero mode"):
            quantize(S, other, 1.0)


class TestPerron:
    def test_half_i_minus_x(self):
        op = build_operator(1, [PauliTerm(0.5, {}), PauliTerm(-0.5, {0: "X"})])
        P, data = perron_stochasticize(op)
        assert np.allclose(P.dense(), 0.5 * np.ones((2, 2)), atol=1e-12)
        assert data.mu == pytest.approx(1.0)
        assert np.allclose(data.limit, [0.5, 0.5])

    def test_power_iteration_limit(self):
        # reduced clock chain at the end of the path: tridiagonal, L = 4
        L = 4
        ham = np.zeros((L + 1, L + 1))
        for l in range(L):
            ham[l, l] += 0.5
            ham[l + 1, l + 1] += 0.5
            ham[l, l + 1] -= 0.5
            ham[l + 1, l] -= 0.5
        P, data = perron_stochasticize(HermitianOperator.from_matrix(ham.astype(complex)))
        dist = np.full(L + 1, 1.0 / (L + 1))
        for _ in range(20000):
            dist = P.dense() @ dist
        assert np.abs(dist - data.limit).max() < 1e-8

    def test_gap_relation(self):
        L = 6
        ham = np.zeros((L + 1, L + 1))
        for l in range(L):
            ham[l, l] += 0.5
            ham[l + 1, l + 1] += 0.5
            ham[l, l + 1] -= 0.5
            ham[l + 1, l] -= 0.5
        op = HermitianOperator.from_matrix(ham.astype(complex))
        P, data = perron_stochasticize(op)
        spec = lowest_eigenpairs(op, k=2)
        vals = np.sort(np.linalg.eigvalsh(P.dense()))
        chain_gap = vals[-1] - vals[-2]
        assert chain_gap == pytest.approx(spec.gap() / data.mu, abs=1e-8)

    def test_identity_kernel_reducible(self):
        op = HermitianOperator.from_matrix(np.zeros((3, 3), dtype=complex))
        with pytest.raises(ReducibleKernelError):
            perron_stochasticize(op)

    def test_negative_kernel_rejected(self):
        op = HermitianOperator.from_matrix(np.diag([2.0, 0.0]).astype(complex))
        with pytest.raises(ValueError, match="negative"):
            perron_stochasticize(op)


class TestConductance:
    def test_disconnected_components(self):
        P = StochasticMatrix(np.eye(2), pi=np.array([0.5, 0.5]))
        assert conductance(P).phi == 0.0

    def test_two_state_lazy_chain(self):
        P = StochasticMatrix(np.full((2, 2), 0.5), pi=np.array([0.5, 0.5]))
        result = conductance(P)
        assert result.phi == pytest.approx(0.5)
        assert result.exact

    def test_birth_death_hand_computation(self):
        # 4 states, +-1 moves with probability 1/2 each, reflecting walls
        P = np.zeros((4, 4))
        for i in range(4):
            if i > 0:
                P[i - 1, i] = 0.5
            else:
                P[i, i] += 0.5
            if i < 3:
                P[i + 1, i] = 0.5
            else:
                P[i, i] += 0.5
        pi = np.full(4, 0.25)
        result = conductance(StochasticMatrix(P, pi=pi))
        # hand enumeration: B = {0,1} gives F = 1/8, mass 1/2, ratio 1/4 (minimal)
        assert result.phi == pytest.approx(0.25)
        assert set(result.cut) in ({0, 1}, {2, 3})

    def test_non_stationary_rejected(self):
        P = StochasticMatrix(np.array([[0.9, 0.5], [0.1, 0.5]]))
        with pytest.raises(NonStationaryError):
            conductance(P, np.array([0.5, 0.5]))

    def test_threshold_mode_flagged_and_matches_prefixes(self):
        # chain long enough to leave the exact-enumeration regime
        m = 24
        P = np.zeros((m, m))
        for i in range(m):
            if i > 0:
                P[i - 1, i] = 0.5
            else:
                P[i, i] += 0.5
            if i < m - 1:
                P[i + 1, i] = 0.5
            else:
                P[i, i] += 0.5
        pi = np.full(m, 1.0 / m)
        result = conductance(StochasticMatrix(P, pi=pi))
        assert not result.exact
        # oracle: scan prefixes by hand
        best = np.inf
        for k in range(m - 1):
            mass = (k + 1) / m
            if mass > 0.5 + 1e-12:
                continue
            flow = pi[k] * 0.5
            best = min(best, flow / mass)
        assert result.phi == pytest.approx(best)


class TestGapBounds:
    def test_two_state_lazy(self):
        P = StochasticMatrix(np.full((2, 2), 0.5), pi=np.array([0.5, 0.5]))
        report = gap_bounds_check(P)
        assert report.gap == pytest.approx(1.0)
        assert report.half_phi_sq == pytest.approx(1.0 / 8.0)
        assert report.bound_ok

    def test_identity_equality_case(self):
        P = StochasticMatrix(np.eye(2), pi=np.array([0.5, 0.5]))
        report = gap_bounds_check(P)
        assert report.gap == pytest.approx(0.0, abs=1e-12)
        assert report.phi == 0.0
        assert report.bound_ok

    @pytest.mark.parametrize("L", [4, 8, 16])
    def test_clock_chain_bounds(self, L):
        ham = np.zeros((L + 1, L + 1))
        for l in range(L):
            ham[l, l] += 0.5
            ham[l + 1, l + 1] += 0.5
            ham[l, l + 1] -= 0.5
            ham[l + 1, l] -= 0.5
        op = HermitianOperator.from_matrix(ham.astype(complex))
        P, _ = perron_stochasticize(op)
        report = gap_bounds_check(P, H=op, clock_length=L)
        assert report.clock_ok, f"phi {report.phi} < 1/(6 {L})"
        assert report.bound_ok
        assert report.hamiltonian_gap_ratio == pytest.approx(report.gap, abs=1e-8)
