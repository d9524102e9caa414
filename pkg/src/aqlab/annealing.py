"""Classical simulated annealing, Schroedinger-picture quantum annealing,
closed-form freeze-time estimates, and free-energy diagnostics.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .operators import StateVector, evolve_real, ground_space_overlap, uniform_superposition
from .problems import CostFunction, IsingInstance, driver_hamiltonian, problem_hamiltonian, spin_config

__all__ = [
    "SAConfig",
    "QAConfig",
    "AnnealResult",
    "simulated_anneal",
    "quantum_anneal",
    "freeze_time",
    "free_energy",
    "append_run_log",
]


@dataclass(frozen=True)
class SAConfig:
    """Simulated-annealing schedule and budget.

    ``paper-log`` follows T(t) = n / (k ln t) with t counted in sweeps from
    ``t_start`` (>= 2 so that ln t > 0); ``linear`` ramps T from t_high to
    t_low; ``geometric`` multiplies by ``ratio`` each sweep. Temperatures
    must stay non-negative (T = 0 runs greedy descent).
    """

    schedule: str = "paper-log"
    k: float = 1.0
    t_start: float = 2.0
    sweeps: int = 1000
    t_high: float = 2.0
    t_low: float = 0.01
    ratio: float = 0.97
    lazy: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.schedule not in ("paper-log", "linear", "geometric"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.schedule == "paper-log":
            if self.k <= 0:
                raise ValueError("k must be positive")
            if self.t_start < 2.0:
                raise ValueError("t_start must be >= 2 so ln(t) > 0")
        if self.schedule == "linear" and (self.t_high < 0 or self.t_low < 0):
            raise ValueError("linear schedule temperatures must be >= 0")
        if self.schedule == "geometric" and not (0 < self.ratio < 1 and self.t_high > 0):
            raise ValueError("geometric schedule needs t_high > 0 and 0 < ratio < 1")

    def temperature(self, sweep: int, n: int) -> float:
        if self.schedule == "paper-log":
            t = self.t_start + sweep
            return n / (self.k * np.log(t))
        if self.schedule == "linear":
            if self.sweeps == 1:
                return self.t_low
            frac = sweep / (self.sweeps - 1)
            return self.t_high + (self.t_low - self.t_high) * frac
        return self.t_high * self.ratio**sweep


@dataclass(frozen=True)
class QAConfig:
    """Quantum-annealing schedule: transverse-field strength Gamma(t).

    ``paper-power`` uses Gamma(t) = t^(-gamma/n) with t running from 1 to
    tau; ``linear`` ramps Gamma from gamma0 to 0. Gamma is clamped to 0 at
    the end of the run either way.
    """

    gamma: float = 1.0
    tau: float = 10.0
    dt: float = 0.02
    schedule: str = "paper-power"
    gamma0: float = 1.0

    def __post_init__(self):
        if self.schedule not in ("paper-power", "linear"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.gamma <= 0 or self.tau <= 0 or self.dt <= 0:
            raise ValueError("gamma, tau and dt must be positive")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be >= 0")

    def strength(self, t: float, n: int) -> float:
        if self.schedule == "paper-power":
            return max(1.0, t) ** (-self.gamma / n) if t < self.tau else 0.0
        return self.gamma0 * max(0.0, 1.0 - t / self.tau)


@dataclass(frozen=True)
class AnnealResult:
    """Outcome of one annealing run.

    ``best_energy`` tracks the lowest cost seen anywhere along the run, so
    it is never above the final configuration's energy. ``residual`` and
    ``success`` are filled only when the true minimum is known.
    """

    solver: str
    seed: int
    best_energy: float
    best_config: np.ndarray | None
    final_config: np.ndarray | None
    final_state: StateVector | None
    final_energy: float | None
    success: float | None
    residual: float | None
    wall_time: float
    cost_units: float

    def __post_init__(self):
        if self.final_energy is not None and self.best_energy > self.final_energy + 1e-12:
            raise ValueError("best energy exceeds final energy")


def _resolve_oracle(best_energy, true_minimum, tol=1e-9):
    if true_minimum is None:
        return None, None
    residual = best_energy - true_minimum
    return float(best_energy <= true_minimum + tol), residual


def simulated_anneal(
    cost: CostFunction, cfg: SAConfig, rng=None, start=None, true_minimum=None
) -> AnnealResult:
    """Single-spin-flip Metropolis annealing over the configured schedule.

    Proposes a uniformly random spin flip (optionally lazily: stay with
    probability 1/2) and accepts with min(1, exp(-dE/T)); T = 0 accepts
    only non-increasing moves. Deterministic under (cfg, seed).
    """
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    n = cost.n
    t0 = time.perf_counter()
    if start is None:
        config = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
    else:
        config = spin_config(start).copy()
    current = float(cost.evaluate(config))
    best = current
    best_config = config.copy()
    proposals = 0
    for sweep in range(cfg.sweeps):
        temp = cfg.temperature(sweep, n)
        if temp < 0:
            raise ValueError("schedule produced a negative temperature")
        for _ in range(n):
            proposals += 1
            if cfg.lazy and rng.random() < 0.5:
                continue
            site = int(rng.integers(n))
            delta = cost.flip_delta(config, site)
            if delta <= 0 or (temp > 0 and rng.random() < np.exp(-delta / temp)):
                config[site] = -config[site]
                current += delta
                if current < best:
                    best = current
                    best_config = config.copy()
    success, residual = _resolve_oracle(best, true_minimum)
    return AnnealResult(
        solver="sa",
        seed=cfg.seed,
        best_energy=best,
        best_config=best_config,
        final_config=config,
        final_state=None,
        final_energy=current,
        success=success,
        residual=residual,
        wall_time=time.perf_counter() - t0,
        cost_units=float(proposals),
    )


def quantum_anneal(instance: IsingInstance, cfg: QAConfig, true_minimum=None) -> AnnealResult:
    """Schroedinger evolution under H_problem - Gamma(t) * sum_i delta_i X_i.

    Starts from the uniform superposition (the driver's ground state) and
    integrates to t = tau, after which the transverse field is clamped to
    zero. Success is the squared overlap of the final state with the full
    ground eigenspace of the diagonal problem operator.
    """
    t0 = time.perf_counter()
    problem = problem_hamiltonian(instance)
    driver = driver_hamiltonian(instance)
    n = instance.n

    def ham(t):
        return problem.matrix - cfg.strength(t, n) * driver.matrix

    psi = uniform_superposition(n)
    t_start = 1.0 if cfg.schedule == "paper-power" else 0.0
    psi = evolve_real(ham, psi, t_end=cfg.tau, dt=cfg.dt, t_start=t_start)
    steps = int(np.ceil((cfg.tau - t_start) / cfg.dt))

    diag = problem.diagonal()
    success_overlap = ground_space_overlap(problem, psi)
    measured_energy = float(diag[int(np.argmax(psi.probabilities()))])
    residual = None if true_minimum is None else measured_energy - true_minimum
    return AnnealResult(
        solver="qa",
        seed=0,
        best_energy=measured_energy,
        best_config=None,
        final_config=None,
        final_state=psi,
        final_energy=measured_energy,
        success=float(success_overlap),
        residual=residual,
        wall_time=time.perf_counter() - t0,
        cost_units=float(steps),
    )


def freeze_time(mode: str, n: int, delta: float, gamma: float = 1.0, k: float = 1.0) -> float:
    """Closed-form relaxation horizons: t_f = exp(-n ln(delta) / (2 gamma))
    for the power-law quantum schedule and t_f = exp(n / (delta k)) for the
    logarithmic classical schedule."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    if mode == "qa":
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        return float(np.exp(-n * np.log(delta) / (2.0 * gamma)))
    if mode == "sa":
        if k <= 0:
            raise ValueError("k must be positive")
        return float(np.exp(n / (delta * k)))
    raise ValueError(f"mode must be 'qa' or 'sa', got {mode!r}")


def free_energy(distribution, energies, temperature: float) -> float:
    """Helmholtz free energy F = <E> - T S with S = -sum p ln p (0 ln 0 = 0)."""
    p = np.asarray(distribution, dtype=float)
    e = np.asarray(energies, dtype=float)
    if p.shape != e.shape:
        raise ValueError("distribution and energies must have the same length")
    if np.any(p < 0):
        raise ValueError("negative probabilities")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"distribution sums to {p.sum()!r}, not 1")
    nz = p > 0
    entropy = -float(np.sum(p[nz] * np.log(p[nz])))
    return float(np.dot(p, e)) - temperature * entropy


def append_run_log(path, instance: IsingInstance, result: AnnealResult) -> None:
    """Append one structured record per run to a JSON-lines log file."""
    record = {
        "instance": instance.content_hash(),
        "solver": result.solver,
        "seed": result.seed,
        "best_energy": result.best_energy,
        "success": result.success,
        "wall_time": result.wall_time,
        "cost_units": result.cost_units,
    }
    with open(path, "a") as fh:
        fh.write(json.dumps(record) + "\n")
