"""Interpolated-Hamiltonian evolution: spectral-gap profiling, the adiabatic
run-time estimate, eigenbasis population traces, qubit susceptibility, and
randomized-dwell (Zeno) state transport.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import (
    DegenerateGroundError,
    HermitianOperator,
    StateVector,
    _as_matrix,
    evolve_real,
    ground_space_overlap,
    ground_state,
    lowest_eigenpairs,
    sigma_z_expectation,
)
from .problems import IsingInstance, driver_hamiltonian, problem_hamiltonian

__all__ = [
    "InterpolationPath",
    "GapProfile",
    "EvolutionTrace",
    "AdiabaticRunResult",
    "DwellDistribution",
    "ZenoSchedule",
    "ZenoResult",
    "LevelCrossingError",
    "gap_profile",
    "adiabatic_time_estimate",
    "run_adiabatic",
    "susceptibility",
    "zeno_schedule_from_path",
    "zeno_run",
    "zeno_cost",
    "standard_anneal_path",
    "write_gap_profile",
]

GAP_FLOOR = 1e-9
#: how much bigger than the 1/Delta scale a "much larger" dwell must be
DWELL_SLACK = 10.0


class LevelCrossingError(RuntimeError):
    """The minimum gap hit the numerical floor; the path (nearly) crosses."""


def _identity_schedule(u: float) -> float:
    return u


@dataclass(frozen=True)
class InterpolationPath:
    """One adiabatic run specification: H(s) = (1-s) H0 + s HT with a
    monotone schedule s(t/tau) mapping [0,1] onto [0,1]."""

    h0: HermitianOperator
    ht: HermitianOperator
    schedule: object = None
    tau: float = 1.0

    def __post_init__(self):
        if self.h0.dim != self.ht.dim:
            raise ValueError("endpoint operators must share a dimension")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        sched = self.schedule or _identity_schedule
        probe = np.linspace(0.0, 1.0, 33)
        values = np.array([sched(u) for u in probe])
        if abs(values[0]) > 1e-12 or abs(values[-1] - 1.0) > 1e-12:
            raise ValueError("schedule must satisfy s(0)=0 and s(1)=1")
        if np.any(np.diff(values) < -1e-12):
            raise ValueError("schedule must be monotone non-decreasing")
        object.__setattr__(self, "schedule", sched)

    @property
    def dim(self) -> int:
        return self.h0.dim

    def hamiltonian(self, s: float):
        """Matrix of H(s); stays sparse when the endpoints are sparse."""
        return (1.0 - s) * self.h0.matrix + s * self.ht.matrix

    def derivative(self):
        """dH/ds, constant for the linear interpolation family."""
        return self.ht.matrix - self.h0.matrix

    def at_time(self, t: float, tau: float | None = None):
        tau = self.tau if tau is None else tau
        return self.hamiltonian(self.schedule(min(max(t / tau, 0.0), 1.0)))


def standard_anneal_path(instance: IsingInstance, tau: float = 1.0, schedule=None) -> InterpolationPath:
    """Driver-to-problem path for an Ising instance: H0 = -sum delta_i X_i
    (uniform-superposition ground state), HT the diagonal problem operator."""
    driver = driver_hamiltonian(instance)
    h0 = HermitianOperator(
        matrix=-driver.matrix, terms=None, n_qubits=instance.n
    )
    return InterpolationPath(h0=h0, ht=problem_hamiltonian(instance), schedule=schedule, tau=tau)


@dataclass(frozen=True)
class GapProfile:
    """Low spectrum along the path: energies (grid x k), first gap, and the
    driving matrix element |<1(s)| dH/ds |0(s)>|."""

    s_grid: np.ndarray
    energies: np.ndarray
    gap: np.ndarray
    matrix_element: np.ndarray

    def min_gap(self) -> tuple[float, float]:
        i = int(np.argmin(self.gap))
        return float(self.gap[i]), float(self.s_grid[i])

    def max_matrix_element(self) -> float:
        return float(self.matrix_element.max())


def gap_profile(path: InterpolationPath, grid: int = 65, k: int = 2) -> GapProfile:
    """Lowest-k eigensolve of H(s) on a uniform s-grid (k >= 2)."""
    if grid < 3:
        raise ValueError("grid must have at least 3 points")
    if k < 2:
        raise ValueError("profile needs k >= 2")
    s_grid = np.linspace(0.0, 1.0, grid)
    d_matrix = path.derivative()
    energies = np.empty((grid, k))
    gap = np.empty(grid)
    melem = np.empty(grid)
    for idx, s in enumerate(s_grid):
        try:
            spec = lowest_eigenpairs(path.hamiltonian(s), k=k)
        except Exception as exc:
            raise RuntimeError(f"eigensolve failed at s={s:.4f}") from exc
        energies[idx] = spec.eigenvalues
        gap[idx] = spec.eigenvalues[1] - spec.eigenvalues[0]
        v0 = spec.eigenvectors[:, 0]
        v1 = spec.eigenvectors[:, 1]
        melem[idx] = abs(np.vdot(v1, d_matrix @ v0))
    return GapProfile(s_grid=s_grid, energies=energies, gap=gap, matrix_element=melem)


def adiabatic_time_estimate(profile: GapProfile, gap_floor: float = GAP_FLOOR) -> float:
    """max_s |<1|dH/ds|0>| / min_s gap^2 -- the run-time scale the adiabatic
    condition demands; callers multiply by their own safety factor."""
    min_gap, s_at = profile.min_gap()
    if min_gap <= gap_floor:
        raise LevelCrossingError(
            f"minimum gap {min_gap:.3e} at s={s_at:.3f} is at the numerical floor"
        )
    return profile.max_matrix_element() / min_gap**2


@dataclass(frozen=True)
class EvolutionTrace:
    """Populations in the instantaneous eigenbasis at sample times, with
    optional accumulated dynamic phases."""

    times: np.ndarray
    s_values: np.ndarray
    populations: np.ndarray
    energies: np.ndarray
    phases: np.ndarray | None = None

    def __post_init__(self):
        pops = np.asarray(self.populations)
        if pops.size and (pops.min() < -1e-9 or pops.max() > 1.0 + 1e-9):
            raise ValueError("populations must lie in [0, 1]")
        if pops.size and np.any(pops.sum(axis=1) > 1.0 + 1e-6):
            raise ValueError("tracked populations exceed 1")


@dataclass(frozen=True)
class AdiabaticRunResult:
    final_state: StateVector
    success: float
    trace: EvolutionTrace


def run_adiabatic(
    path: InterpolationPath,
    tau: float | None = None,
    dt: float = 0.01,
    track: int = 2,
    trace_points: int = 25,
    initial_state: StateVector | None = None,
    track_phases: bool = False,
    degeneracy_tol: float = 1e-9,
) -> AdiabaticRunResult:
    """Evolve the ground state of H0 along the path and score it against the
    full (degeneracy-aware) ground eigenspace of HT.

    A degenerate H0 ground space is an error unless an explicit
    ``initial_state`` is supplied. The trace samples instantaneous
    eigen-populations at ``trace_points`` uniformly spaced times.
    """
    tau = path.tau if tau is None else tau
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if initial_state is None:
        try:
            _, initial_state = ground_state(path.h0, degeneracy_tol=degeneracy_tol)
        except DegenerateGroundError as exc:
            raise DegenerateGroundError(
                "H0 ground space is degenerate; pass initial_state explicitly"
            ) from exc
    psi = initial_state

    sample_times = np.linspace(0.0, tau, max(2, trace_points)) if trace_points else np.array([0.0, tau])
    pops = []
    energies = []
    recorded_t = []
    phases = [np.zeros(track)] if track_phases else None

    def record(t, state):
        s = path.schedule(t / tau if tau > 0 else 1.0)
        spec = lowest_eigenpairs(path.hamiltonian(s), k=track)
        coeff = spec.eigenvectors.conj().T @ state.amplitudes
        pops.append(np.abs(coeff) ** 2)
        energies.append(spec.eigenvalues.copy())
        recorded_t.append(t)
        if track_phases and len(recorded_t) > 1:
            dt_seg = recorded_t[-1] - recorded_t[-2]
            phases.append(phases[-1] - 0.5 * dt_seg * (energies[-1] + energies[-2]))

    if trace_points:
        record(0.0, psi)
    if tau > 0:
        source = lambda t: path.at_time(t, tau)
        t_prev = 0.0
        segments = sample_times[1:] if trace_points else np.array([tau])
        for t_next in segments:
            psi = evolve_real(source, psi, t_end=t_next, dt=dt, t_start=t_prev)
            if trace_points:
                record(t_next, psi)
            t_prev = t_next
    elif trace_points:
        record(tau, psi)

    success = ground_space_overlap(path.ht, psi, degeneracy_tol=degeneracy_tol)
    trace = EvolutionTrace(
        times=np.asarray(recorded_t),
        s_values=np.asarray([path.schedule(t / tau) if tau > 0 else 1.0 for t in recorded_t]),
        populations=np.asarray(pops) if pops else np.zeros((0, track)),
        energies=np.asarray(energies) if energies else np.zeros((0, track)),
        phases=np.asarray(phases) if track_phases else None,
    )
    return AdiabaticRunResult(final_state=psi, success=float(success), trace=trace)


def susceptibility(
    path: InterpolationPath, qubit: int, s: float, ds: float = 1e-4, degeneracy_tol: float = 1e-9
) -> float:
    """Central finite difference of <sigma_z^qubit> in the instantaneous
    ground state with respect to the interpolation parameter."""
    if ds <= 0 or s - ds < 0.0 or s + ds > 1.0:
        raise ValueError("need ds > 0 with s +- ds inside [0, 1]")
    values = []
    for point in (s - ds, s + ds):
        ham = HermitianOperator.from_matrix(
            path.hamiltonian(point), n_qubits=_infer_qubits(path.dim)
        )
        _, state = ground_state(ham, degeneracy_tol=degeneracy_tol)
        values.append(sigma_z_expectation(state, qubit))
    return (values[1] - values[0]) / (2.0 * ds)


def _infer_qubits(dim: int) -> int | None:
    n = dim.bit_length() - 1
    return n if 2**n == dim else None


# ----------------------------------------------------------------------
# randomized-dwell (Zeno) transport
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class DwellDistribution:
    """Dwell-time law for one Zeno step, with its characteristic function
    available analytically for frequency-domain diagnostics."""

    kind: str = "exponential"
    mean: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exponential", "fixed"):
            raise ValueError(f"unknown dwell kind {self.kind!r}")
        if not np.isfinite(self.mean) or self.mean < 0:
            raise ValueError("dwell mean must be finite and >= 0")

    def sample(self, rng) -> float:
        if self.kind == "fixed":
            return self.mean
        return float(rng.exponential(self.mean))

    def characteristic(self, omega):
        """E[exp(i omega t)]."""
        omega = np.asarray(omega, dtype=float)
        if self.kind == "fixed":
            return np.exp(1j * omega * self.mean)
        return 1.0 / (1.0 - 1j * omega * self.mean)


@dataclass(frozen=True)
class ZenoSchedule:
    """Discrete Hamiltonian sequence H(0..L), a dwell distribution, and a
    fidelity target."""

    hamiltonians: tuple
    dwell: DwellDistribution
    fidelity_target: float = 0.9

    def __post_init__(self):
        hams = tuple(self.hamiltonians)
        if len(hams) < 2:
            raise ValueError("need at least H(0) and H(1)")
        dims = {h.dim for h in hams}
        if len(dims) != 1:
            raise ValueError("all Hamiltonians must share a dimension")
        if not 0.0 < self.fidelity_target < 1.0:
            raise ValueError("fidelity target must be in (0, 1)")
        object.__setattr__(self, "hamiltonians", hams)

    @property
    def length(self) -> int:
        return len(self.hamiltonians) - 1


@dataclass(frozen=True)
class ZenoResult:
    final_state: StateVector
    fidelity: float
    dwell_times: np.ndarray
    min_gap: float


def zeno_schedule_from_path(
    path: InterpolationPath, steps: int, dwell: DwellDistribution, fidelity_target: float = 0.9
) -> ZenoSchedule:
    """H(l) = H(l/steps) sampled along an interpolation path."""
    hams = tuple(
        HermitianOperator.from_matrix(path.hamiltonian(l / steps), n_qubits=_infer_qubits(path.dim))
        for l in range(steps + 1)
    )
    return ZenoSchedule(hamiltonians=hams, dwell=dwell, fidelity_target=fidelity_target)


def zeno_run(
    schedule: ZenoSchedule,
    psi0: StateVector | None = None,
    rng=None,
    enforce_dwell: bool = True,
    degeneracy_tol: float = 1e-9,
) -> ZenoResult:
    """Evolve under each H(l) for a random dwell time and score the final
    state against the target eigenvector of H(L).

    Each H(l) must have a nondegenerate ground state (the transported
    eigenvector). With ``enforce_dwell`` the mean dwell must exceed
    ``DWELL_SLACK`` times 1/Delta, Delta being the smallest gap along the
    sequence; disable it only for deliberately degenerate diagnostics.
    """
    rng = np.random.default_rng(rng)
    gaps = []
    for ham in schedule.hamiltonians:
        spec = lowest_eigenpairs(ham, k=2)
        if spec.gap() < degeneracy_tol:
            raise DegenerateGroundError("a step Hamiltonian has a degenerate target")
        gaps.append(spec.gap())
    min_gap = float(min(gaps))
    if enforce_dwell and schedule.dwell.mean < DWELL_SLACK / min_gap:
        raise ValueError(
            f"mean dwell {schedule.dwell.mean:g} violates <t> >= {DWELL_SLACK:g}/Delta "
            f"= {DWELL_SLACK / min_gap:g}"
        )
    if psi0 is None:
        _, psi0 = ground_state(schedule.hamiltonians[0], degeneracy_tol=degeneracy_tol)
    psi = psi0
    dwells = []
    for ham in schedule.hamiltonians:
        t = schedule.dwell.sample(rng)
        dwells.append(t)
        if t > 0.0:
            psi = evolve_real(ham, psi, t_end=t, dt=t)
    _, target = ground_state(schedule.hamiltonians[-1], degeneracy_tol=degeneracy_tol)
    fidelity = target.fidelity(psi)
    return ZenoResult(
        final_state=psi, fidelity=float(fidelity), dwell_times=np.asarray(dwells), min_gap=min_gap
    )


def zeno_cost(L: int, p: float, gap: float) -> float:
    """Step-count cost L^2 ln(L/(1-p)) / ((1-p) Delta) of the randomized
    Zeno transport at fidelity p across L segments."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError("fidelity p must satisfy 0 < p < 1 (p >= 1 diverges)")
    if gap <= 0:
        raise ValueError("gap must be positive")
    return L**2 * np.log(L / (1.0 - p)) / ((1.0 - p) * gap)


def write_gap_profile(profile: GapProfile, path) -> None:
    """Columnar text export (s, E0, E1, gap, m) for external plotting."""
    with open(path, "w") as fh:
        fh.write("s,E0,E1,gap,m\n")
        for i, s in enumerate(profile.s_grid):
            row = (s, profile.energies[i, 0], profile.energies[i, 1], profile.gap[i], profile.matrix_element[i])
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
