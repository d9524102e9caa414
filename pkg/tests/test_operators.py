"""Operator construction, eigensolvers, and propagators."""

import numpy as np
import pytest
import scipy.sparse as sp

from aqlab.operators import (
    DegenerateGroundError,
    HermitianOperator,
    PauliTerm,
    StateVector,
    basis_state,
    build_operator,
    evolve_imaginary,
    evolve_real,
    ground_space_overlap,
    ground_state,
    lowest_eigenpairs,
    sigma_z_expectation,
    uniform_superposition,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1, -1]).astype(complex)


def kron_all(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


class TestBuildOperator:
    def test_single_x(self):
        op = build_operator(1, [PauliTerm(1.0, {0: "X"})])
        assert np.allclose(op.dense(), SX)

    def test_zz_diagonal(self):
        op = build_operator(2, [PauliTerm(1.0, {0: "Z", 1: "Z"})])
        assert np.allclose(op.dense(), np.diag([1, -1, -1, 1]))

    def test_zzxx_family_hermitian(self):
        # h Z + delta X + J ZZ + K XX on 3 qubits
        rng = np.random.default_rng(11)
        terms = []
        for i in range(3):
            terms.append(PauliTerm(rng.normal(), {i: "Z"}))
            terms.append(PauliTerm(rng.normal(), {i: "X"}))
        for i, j in [(0, 1), (1, 2), (0, 2)]:
            terms.append(PauliTerm(rng.normal(), {i: "Z", j: "Z"}))
            terms.append(PauliTerm(rng.normal(), {i: "X", j: "X"}))
        op = build_operator(3, terms)
        dense = op.dense()
        assert np.abs(dense - dense.conj().T).max() <= 1e-12
        # oracle: independent kron assembly
        eye = np.eye(2, dtype=complex)
        expect = np.zeros((8, 8), dtype=complex)
        for term in terms:
            mats = [eye, eye, eye]
            for q, letter in term.factors:
                mats[2 - q] = SX if letter == "X" else SZ
            expect += term.coefficient * kron_all(mats)
        assert np.allclose(dense, expect, atol=1e-12)

    def test_qubit_zero_is_least_significant(self):
        op = build_operator(2, [PauliTerm(1.0, {0: "Z"})])
        # sigma_z on qubit 0 flips sign with the parity of the low bit
        assert np.allclose(np.diag(op.dense()), [1, -1, 1, -1])

    def test_index_out_of_range(self):
        with pytest.raises(ValueError, match="touches qubit"):
            build_operator(2, [PauliTerm(1.0, {2: "X"})])

    def test_memory_budget(self):
        with pytest.raises(ValueError, match="memory budget"):
            build_operator(27, [])
        with pytest.raises(ValueError, match="dense"):
            build_operator(13, [], dense=True)

    def test_sparse_realization_above_cutoff(self):
        op = build_operator(13, [PauliTerm(0.5, {3: "X"})])
        assert op.is_sparse

    def test_term_validation(self):
        with pytest.raises(ValueError):
            PauliTerm(np.inf, {0: "X"})
        with pytest.raises(ValueError):
            PauliTerm(1.0, {0: "Q"})

    def test_empty_factor_map_is_identity(self):
        op = build_operator(2, [PauliTerm(2.5, {})])
        assert np.allclose(op.dense(), 2.5 * np.eye(4))


class TestStateVector:
    def test_normalization(self):
        s = StateVector(np.array([1.0, 1.0]), 1)
        assert abs(s.normalized().norm() - 1.0) < 1e-12

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            StateVector(np.ones(3), 1)

    def test_sigma_z_expectation(self):
        assert sigma_z_expectation(basis_state(2, 0), 0) == pytest.approx(1.0)
        assert sigma_z_expectation(basis_state(2, 1), 0) == pytest.approx(-1.0)
        assert sigma_z_expectation(uniform_superposition(2), 1) == pytest.approx(0.0)


class TestLowestEigenpairs:
    def test_two_level(self):
        op = build_operator(1, [PauliTerm(1.0, {}), PauliTerm(-1.0, {0: "X"})])
        spec = lowest_eigenpairs(op, k=2)
        assert np.allclose(spec.eigenvalues, [0.0, 2.0], atol=1e-12)
        ground = spec.eigenvectors[:, 0]
        target = np.array([1.0, 1.0]) / np.sqrt(2)
        assert abs(abs(np.vdot(ground, target)) - 1.0) < 1e-12

    def test_mixer_ground_is_uniform(self):
        n = 4
        terms = [PauliTerm(1.0, {})] + [PauliTerm(-1.0 / n, {i: "X"}) for i in range(n)]
        op = build_operator(n, terms)
        spec = lowest_eigenpairs(op, k=1)
        assert spec.eigenvalues[0] == pytest.approx(0.0, abs=1e-12)
        uniform = uniform_superposition(n).amplitudes
        assert abs(abs(np.vdot(spec.eigenvectors[:, 0], uniform)) - 1.0) < 1e-10

    def test_degenerate_ising_ground(self):
        # oracle: brute force over the 4 configurations of J12 = 1, h = 0
        energies = {}
        for b in range(4):
            s0 = 1 - 2 * (b & 1)
            s1 = 1 - 2 * ((b >> 1) & 1)
            energies[b] = -1.0 * s0 * s1
        ground_energy = min(energies.values())
        degeneracy = sum(1 for e in energies.values() if e == ground_energy)
        assert ground_energy == -1.0 and degeneracy == 2

        op = build_operator(2, [PauliTerm(-1.0, {0: "Z", 1: "Z"})])
        spec = lowest_eigenpairs(op, k=3)
        assert np.allclose(spec.eigenvalues[:2], [-1.0, -1.0], atol=1e-12)
        assert spec.eigenvalues[2] == pytest.approx(1.0, abs=1e-12)
        overlaps = spec.eigenvectors[:, :2].conj().T @ spec.eigenvectors[:, :2]
        assert np.allclose(overlaps, np.eye(2), atol=1e-8)

    def test_residuals_and_orthonormality(self):
        rng = np.random.default_rng(3)
        raw = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
        op = HermitianOperator.from_matrix(0.5 * (raw + raw.conj().T))
        spec = lowest_eigenpairs(op, k=5)
        assert np.all(spec.residuals <= 1e-10)
        gram = spec.eigenvectors.conj().T @ spec.eigenvectors
        assert np.abs(gram - np.eye(5)).max() < 1e-8

    def test_sparse_dense_agreement(self):
        rng = np.random.default_rng(7)
        terms = [PauliTerm(rng.normal(), {i: "Z"}) for i in range(6)]
        terms += [PauliTerm(rng.normal(), {i: "X"}) for i in range(6)]
        terms += [PauliTerm(rng.normal(), {i: "Z", i + 1: "Z"}) for i in range(5)]
        dense_op = build_operator(6, terms, dense=True)
        sparse_op = build_operator(6, terms, dense=False)
        e_dense = lowest_eigenpairs(dense_op, k=1).eigenvalues[0]
        e_sparse = lowest_eigenpairs(sparse_op, k=1).eigenvalues[0]
        assert abs(e_dense - e_sparse) < 1e-9

    def test_k_bounds(self):
        op = build_operator(1, [PauliTerm(1.0, {0: "Z"})])
        with pytest.raises(ValueError):
            lowest_eigenpairs(op, k=0)
        with pytest.raises(ValueError):
            lowest_eigenpairs(op, k=3)


class TestGroundStateHelpers:
    def test_ground_state_unique(self):
        op = build_operator(1, [PauliTerm(1.0, {0: "Z"})])
        energy, state = ground_state(op)
        assert energy == pytest.approx(-1.0)
        assert state.fidelity(basis_state(1, 1)) == pytest.approx(1.0)

    def test_ground_state_degenerate_raises(self):
        op = build_operator(2, [PauliTerm(-1.0, {0: "Z", 1: "Z"})])
        with pytest.raises(DegenerateGroundError):
            ground_state(op)

    def test_ground_space_overlap_degenerate(self):
        op = build_operator(2, [PauliTerm(-1.0, {0: "Z", 1: "Z"})])
        # uniform state overlaps the two-dimensional ground space with 1/2
        assert ground_space_overlap(op, uniform_superposition(2)) == pytest.approx(0.5)

    def test_ground_space_overlap_nondiagonal(self):
        op = build_operator(2, [PauliTerm(-1.0, {0: "X"}), PauliTerm(-0.3, {1: "Z"})])
        _, state = ground_state(op)
        assert ground_space_overlap(op, state) == pytest.approx(1.0, abs=1e-9)


class TestEvolveReal:
    def test_zero_hamiltonian_is_identity(self):
        op = HermitianOperator.from_matrix(np.zeros((4, 4), dtype=complex), n_qubits=2)
        psi0 = uniform_superposition(2)
        psi = evolve_real(op, psi0, t_end=3.0, dt=0.1)
        assert np.allclose(psi.amplitudes, psi0.amplitudes, atol=1e-12)

    def test_diagonal_phase(self):
        op = build_operator(1, [PauliTerm(1.0, {0: "Z"})])
        psi = evolve_real(op, basis_state(1, 0), t_end=np.pi / 2, dt=np.pi / 2)
        assert np.allclose(psi.amplitudes, [-1j, 0.0], atol=1e-12)
        assert abs(psi.amplitudes[0]) ** 2 == pytest.approx(1.0)

    def test_norm_preservation(self):
        rng = np.random.default_rng(1)
        raw = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        op = HermitianOperator.from_matrix(0.5 * (raw + raw.conj().T), n_qubits=3)
        psi = evolve_real(op, uniform_superposition(3), t_end=5.0, dt=0.05)
        assert abs(psi.norm() - 1.0) < 1e-8 * 5.0

    def test_second_order_convergence(self):
        # Richardson comparison on a single-qubit sweep against a fine run
        sx, sz = SX, SZ

        def ham(t):
            s = t / 4.0
            return HermitianOperator.from_matrix(
                0.5 * np.eye(2) - 0.5 * ((1 - s) * sx + s * sz), n_qubits=1
            )

        psi0 = StateVector(np.array([1.0, 1.0]) / np.sqrt(2), 1)
        ref = evolve_real(ham, psi0, t_end=4.0, dt=4.0 / 4096).amplitudes
        err = []
        for steps in (32, 64):
            out = evolve_real(ham, psi0, t_end=4.0, dt=4.0 / steps).amplitudes
            err.append(np.linalg.norm(out - ref))
        # halving dt should cut the error by about 4 (second order)
        assert err[1] < 0.35 * err[0]

    def test_time_dependent_callable_and_sparse(self):
        op = build_operator(13, [PauliTerm(1.0, {0: "Z"})])
        psi = evolve_real(lambda t: op, basis_state(13, 0), t_end=np.pi / 2, dt=np.pi / 4)
        assert psi.amplitudes[0] == pytest.approx(-1j, abs=1e-10)

    def test_dt_validation(self):
        op = build_operator(1, [PauliTerm(1.0, {0: "Z"})])
        with pytest.raises(ValueError):
            evolve_real(op, basis_state(1, 0), t_end=1.0, dt=0.0)


class TestEvolveImaginary:
    def test_closed_form_decay(self):
        op = HermitianOperator.from_diagonal([0.0, 1.0], n_qubits=1)
        psi0 = uniform_superposition(1)
        res = evolve_imaginary(op, psi0, tau=50.0, dt=0.5)
        assert res.state.fidelity(basis_state(1, 0)) == pytest.approx(1.0, abs=1e-10)
        assert not res.warning

    def test_excited_eigenvector_is_invariant(self):
        op = HermitianOperator.from_diagonal([0.0, 1.0], n_qubits=1)
        res = evolve_imaginary(op, basis_state(1, 1), tau=5.0, dt=0.25)
        assert res.state.fidelity(basis_state(1, 1)) == pytest.approx(1.0, abs=1e-10)
        assert res.warning  # zero overlap with the ground space

    def test_matches_eigensolver_on_random_ising(self):
        rng = np.random.default_rng(23)
        diag_terms = [PauliTerm(rng.normal(), {i: "Z"}) for i in range(3)]
        x_terms = [PauliTerm(0.7 * rng.normal(), {i: "X"}) for i in range(3)]
        op = build_operator(3, diag_terms + x_terms)
        spec = lowest_eigenpairs(op, k=2)
        tau = 40.0 / spec.gap()
        res = evolve_imaginary(op, uniform_superposition(3), tau=tau, dt=tau / 400)
        overlap = abs(np.vdot(spec.eigenvectors[:, 0], res.state.amplitudes)) ** 2
        assert overlap > 1.0 - 1e-6

    def test_rayleigh_monotone(self):
        rng = np.random.default_rng(5)
        raw = rng.normal(size=(16, 16))
        op = HermitianOperator.from_matrix(0.5 * (raw + raw.T) + 0j, n_qubits=4)
        res = evolve_imaginary(op, uniform_superposition(4), tau=8.0, dt=0.1)
        assert np.all(np.diff(res.rayleigh) <= 1e-12)
