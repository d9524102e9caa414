"""Gap profiling, adiabatic runs, susceptibility, and Zeno transport."""

import numpy as np
import pytest

from aqlab.adiabatic import (
    DwellDistribution,
    GapProfile,
    InterpolationPath,
    LevelCrossingError,
    ZenoSchedule,
    adiabatic_time_estimate,
    gap_profile,
    run_adiabatic,
    standard_anneal_path,
    susceptibility,
    write_gap_profile,
    zeno_cost,
    zeno_run,
    zeno_schedule_from_path,
)
from aqlab.operators import (
    DegenerateGroundError,
    HermitianOperator,
    PauliTerm,
    build_operator,
    ground_state,
)
from aqlab.problems import IsingInstance

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1, -1]).astype(complex)


def single_qubit_path(tau=1.0):
    """H0 = (I - X)/2, HT = (I - Z)/2: closed-form two-level benchmark."""
    h0 = build_operator(1, [PauliTerm(0.5, {}), PauliTerm(-0.5, {0: "X"})])
    ht = build_operator(1, [PauliTerm(0.5, {}), PauliTerm(-0.5, {0: "Z"})])
    return InterpolationPath(h0=h0, ht=ht, tau=tau)


def closed_form_gap(s):
    return np.sqrt((1 - s) ** 2 + s**2)


class TestInterpolationPath:
    def test_schedule_validation(self):
        h = build_operator(1, [PauliTerm(1.0, {0: "Z"})])
        with pytest.raises(ValueError, match="monotone|s\\(0\\)"):
            InterpolationPath(h0=h, ht=h, schedule=lambda u: 1 - u)

    def test_dimension_mismatch(self):
        a = build_operator(1, [PauliTerm(1.0, {0: "Z"})])
        b = build_operator(2, [PauliTerm(1.0, {0: "Z"})])
        with pytest.raises(ValueError):
            InterpolationPath(h0=a, ht=b)

    def test_nonlinear_schedule_reparametrizes_time(self):
        path = single_qubit_path()
        slow_middle = InterpolationPath(
            h0=path.h0, ht=path.ht, schedule=lambda u: u**2, tau=1.0
        )
        assert np.allclose(slow_middle.at_time(0.5), path.hamiltonian(0.25))


class TestGapProfile:
    def test_single_qubit_closed_form(self):
        profile = gap_profile(single_qubit_path(), grid=101)
        min_gap, at_s = profile.min_gap()
        assert min_gap == pytest.approx(np.sqrt(0.5), abs=1e-12)
        assert at_s == pytest.approx(0.5)
        for s, gap in zip(profile.s_grid, profile.gap):
            assert gap == pytest.approx(closed_form_gap(s), abs=1e-10)

    def test_flat_path_has_zero_matrix_element(self):
        h = build_operator(1, [PauliTerm(1.0, {0: "Z"})])
        profile = gap_profile(InterpolationPath(h0=h, ht=h), grid=11)
        assert np.allclose(profile.matrix_element, 0.0, atol=1e-12)
        assert np.allclose(profile.gap, 2.0, atol=1e-12)

    def test_three_spin_against_dense_oracle(self):
        inst = IsingInstance(n=3, couplings={(0, 1): 1.0, (1, 2): 1.0}, h=[0.4, 0.0, 0.0])
        path = standard_anneal_path(inst)
        profile = gap_profile(path, grid=21)
        # oracle: independent kron construction + eigh at every grid point
        eye = np.eye(2, dtype=complex)

        def op_on(qubit, mat):
            mats = [eye, eye, eye]
            mats[2 - qubit] = mat
            return np.kron(np.kron(mats[0], mats[1]), mats[2])

        h_problem = -(op_on(0, SZ) @ op_on(1, SZ)) - (op_on(1, SZ) @ op_on(2, SZ)) - 0.4 * op_on(0, SZ)
        h_driver = sum(op_on(i, SX) for i in range(3))
        for idx, s in enumerate(profile.s_grid):
            vals = np.linalg.eigvalsh((1 - s) * (-h_driver) + s * h_problem)
            assert profile.gap[idx] == pytest.approx(vals[1] - vals[0], abs=1e-9)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            gap_profile(single_qubit_path(), grid=2)

    def test_export_columns(self, tmp_path):
        profile = gap_profile(single_qubit_path(), grid=5)
        out = tmp_path / "profile.csv"
        write_gap_profile(profile, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "s,E0,E1,gap,m"
        assert len(lines) == 6
        first = [float(x) for x in lines[1].split(",")]
        assert first[0] == 0.0 and first[3] == pytest.approx(1.0)


class TestTimeEstimate:
    def test_zero_matrix_element_gives_zero(self):
        profile = GapProfile(
            s_grid=np.linspace(0, 1, 5),
            energies=np.zeros((5, 2)),
            gap=np.ones(5),
            matrix_element=np.zeros(5),
        )
        assert adiabatic_time_estimate(profile) == 0.0

    def test_single_qubit_closed_form(self):
        # m(s) = 1/(2 r(s)) peaks where the gap r(s) is smallest, so the
        # estimate is (1/(2 r_min)) / r_min^2 = sqrt(2) for r_min = 1/sqrt(2)
        profile = gap_profile(single_qubit_path(), grid=101)
        assert adiabatic_time_estimate(profile) == pytest.approx(np.sqrt(2), abs=1e-9)

    def test_halving_gap_quadruples_estimate(self):
        profile = gap_profile(single_qubit_path(), grid=41)
        halved = GapProfile(
            s_grid=profile.s_grid,
            energies=profile.energies,
            gap=profile.gap / 2,
            matrix_element=profile.matrix_element,
        )
        assert adiabatic_time_estimate(halved) == pytest.approx(
            4 * adiabatic_time_estimate(profile)
        )

    def test_level_crossing_error(self):
        profile = GapProfile(
            s_grid=np.linspace(0, 1, 3),
            energies=np.zeros((3, 2)),
            gap=np.array([1.0, 1e-12, 1.0]),
            matrix_element=np.ones(3),
        )
        with pytest.raises(LevelCrossingError):
            adiabatic_time_estimate(profile)


class TestRunAdiabatic:
    def test_zero_tau_success_is_endpoint_overlap(self):
        path = single_qubit_path()
        result = run_adiabatic(path, tau=0.0, dt=0.1, trace_points=0)
        _, g0 = ground_state(path.h0)
        _, gT = ground_state(path.ht)
        assert result.success == pytest.approx(g0.fidelity(gT), abs=1e-12)

    def test_slow_run_succeeds(self):
        path = single_qubit_path()
        est = adiabatic_time_estimate(gap_profile(path, grid=101))
        result = run_adiabatic(path, tau=100 * est, dt=0.01, trace_points=9)
        assert result.success >= 0.99
        # ground population stays high at every recorded time
        assert result.trace.populations[:, 0].min() >= 0.99

    def test_fast_run_fails(self):
        path = single_qubit_path()
        est = adiabatic_time_estimate(gap_profile(path, grid=101))
        result = run_adiabatic(path, tau=est / 100, dt=est / 10000, trace_points=0)
        assert result.success < 0.9

    def test_degenerate_start_demands_explicit_state(self):
        degenerate = build_operator(2, [PauliTerm(-1.0, {0: "Z", 1: "Z"})])
        target = build_operator(2, [PauliTerm(-1.0, {0: "X"}), PauliTerm(-0.5, {1: "X"})])
        path = InterpolationPath(h0=degenerate, ht=target)
        with pytest.raises(DegenerateGroundError):
            run_adiabatic(path, tau=1.0, dt=0.1)

    def test_trace_populations_bounded(self):
        path = single_qubit_path()
        result = run_adiabatic(path, tau=5.0, dt=0.05, trace_points=7)
        pops = result.trace.populations
        assert pops.min() >= -1e-9 and pops.max() <= 1 + 1e-9
        assert np.all(pops.sum(axis=1) <= 1 + 1e-6)


class TestSusceptibility:
    def test_symmetric_instance_gives_zero(self):
        # J-only ring with a transverse driver keeps <sigma_z> = 0 exactly
        inst = IsingInstance(n=3, couplings={(0, 1): -1.0, (1, 2): -1.0, (0, 2): -1.0})
        path = standard_anneal_path(inst)
        chi = susceptibility(path, qubit=0, s=0.4, ds=1e-4)
        assert chi == pytest.approx(0.0, abs=1e-6)

    def test_flat_path_gives_zero(self):
        h = build_operator(1, [PauliTerm(1.0, {0: "X"}), PauliTerm(0.3, {0: "Z"})])
        path = InterpolationPath(h0=h, ht=h)
        assert susceptibility(path, 0, 0.5, 1e-4) == pytest.approx(0.0, abs=1e-8)

    def test_single_qubit_analytic_derivative(self):
        # ground of -(1-s) X - s Z has <sigma_z> = s / r(s); d/ds at 0.5 is sqrt(2)
        inst = IsingInstance(n=1, h=[1.0])
        path = standard_anneal_path(inst)
        chi = susceptibility(path, qubit=0, s=0.5, ds=1e-5)
        assert chi == pytest.approx(np.sqrt(2), abs=1e-6)

    def test_range_validation(self):
        path = single_qubit_path()
        with pytest.raises(ValueError):
            susceptibility(path, 0, 0.0, 1e-3)


class TestZeno:
    def test_constant_sequence_keeps_fidelity_one(self):
        h = build_operator(1, [PauliTerm(1.0, {0: "Z"})])
        schedule = ZenoSchedule(
            hamiltonians=(h, h), dwell=DwellDistribution("exponential", 100.0)
        )
        result = zeno_run(schedule, rng=0)
        assert result.fidelity == pytest.approx(1.0, abs=1e-12)

    def test_zero_dwell_reduces_to_initial_overlap(self):
        path = single_qubit_path()
        schedule = zeno_schedule_from_path(path, steps=4, dwell=DwellDistribution("fixed", 0.0))
        result = zeno_run(schedule, rng=1, enforce_dwell=False)
        _, start = ground_state(path.h0)
        _, target = ground_state(path.ht)
        assert result.fidelity == pytest.approx(target.fidelity(start), abs=1e-12)

    def test_mean_dwell_enforced(self):
        path = single_qubit_path()
        schedule = zeno_schedule_from_path(path, steps=4, dwell=DwellDistribution("fixed", 0.0))
        with pytest.raises(ValueError, match="mean dwell"):
            zeno_run(schedule, rng=1)

    def test_transport_reaches_target(self):
        path = single_qubit_path()
        min_gap, _ = gap_profile(path, grid=33).min_gap()
        schedule = zeno_schedule_from_path(
            path, steps=50, dwell=DwellDistribution("exponential", 100.0 / min_gap)
        )
        fidelities = [zeno_run(schedule, rng=seed).fidelity for seed in range(30)]
        assert np.mean(fidelities) >= 0.9
        # structural claim: one dwell application per Hamiltonian
        assert len(zeno_run(schedule, rng=0).dwell_times) == schedule.length + 1

    def test_degenerate_target_rejected(self):
        degenerate = build_operator(2, [PauliTerm(-1.0, {0: "Z", 1: "Z"})])
        schedule = ZenoSchedule(
            hamiltonians=(degenerate, degenerate),
            dwell=DwellDistribution("exponential", 1000.0),
        )
        with pytest.raises(DegenerateGroundError):
            zeno_run(schedule, rng=0)

    def test_characteristic_function(self):
        exp_dwell = DwellDistribution("exponential", 2.0)
        omega = np.array([0.0, 0.5, 2.0])
        assert np.allclose(exp_dwell.characteristic(omega), 1.0 / (1.0 - 2.0j * omega))
        fixed = DwellDistribution("fixed", 3.0)
        assert np.allclose(fixed.characteristic(omega), np.exp(3j * omega))


class TestZenoCost:
    def test_stated_values(self):
        assert zeno_cost(10, 0.9, 0.1) == pytest.approx(
            100 * np.log(100) / 0.01, rel=1e-12
        )
        assert zeno_cost(1, 0.5, 1.0) == pytest.approx(np.log(2) / 0.5, rel=1e-12)

    def test_doubling_length_more_than_quadruples(self):
        assert zeno_cost(20, 0.9, 0.1) > 4 * zeno_cost(10, 0.9, 0.1)

    def test_divergence_guard(self):
        with pytest.raises(ValueError):
            zeno_cost(10, 1.0, 0.1)
        with pytest.raises(ValueError):
            zeno_cost(0, 0.5, 0.1)
