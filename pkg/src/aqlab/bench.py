"""Ensemble experiments and the success-probability / repeats / speedup /
bimodality / Hamming-distance diagnostics.

Benchmark runs are reproducible from (config, master seed): per-run seeds
are spawned deterministically, results are keyed by (instance, run) so the
execution order never matters, and the summary tables carry the simulated
cost measure rather than wall-clock time.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .annealing import AnnealResult, QAConfig, SAConfig, quantum_anneal, simulated_anneal
from .problems import (
    IsingCost,
    IsingInstance,
    brute_force_ground,
    config_from_index,
    energy,
    hamming_distance,
    spin_config,
)

__all__ = [
    "RunRecord",
    "InstanceStats",
    "SolverReport",
    "SpeedupReport",
    "HistogramReport",
    "TunnelingDiagnostic",
    "SASolver",
    "QASolver",
    "RandomGuessSolver",
    "PerfectSolver",
    "success_probability",
    "run_ensemble",
    "repeats_needed",
    "speedup_metrics",
    "success_histogram",
    "hamming_tunneling_diagnostic",
    "lower_quantile",
    "BIMODALITY_THRESHOLD",
]

#: Sarle's cutoff: a uniform distribution scores exactly 5/9
BIMODALITY_THRESHOLD = 5.0 / 9.0


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    run_index: int
    seed: int
    best_energy: float
    success: bool
    sim_cost: float
    wall_time: float
    config: tuple | None = None


@dataclass(frozen=True)
class InstanceStats:
    """Per-instance aggregate: hardness s = successes / runs and the time
    per run in the chosen cost measure."""

    instance_id: str
    runs: int
    successes: int
    s: float
    t_a: float

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.successes != round(self.s * self.runs):
            raise ValueError("s must equal successes / runs exactly")


@dataclass(frozen=True)
class SolverReport:
    solver_id: str
    entries: tuple[InstanceStats, ...]
    records: tuple[RunRecord, ...] = ()

    def stats_by_instance(self) -> dict:
        return {e.instance_id: e for e in self.entries}

    def instance_ids(self) -> tuple:
        return tuple(e.instance_id for e in self.entries)


@dataclass(frozen=True)
class SpeedupReport:
    """Quotient-of-quantiles and quantile-of-quotient speedups of solver A
    over solver B, restricted to the hard sub-ensembles at level s0."""

    s0: float
    quotient_of_quantiles: float
    quantile_of_quotient: float
    per_instance_quotients: tuple
    excluded_instances: int
    p_target: float = 0.99


@dataclass(frozen=True)
class HistogramReport:
    bin_edges: np.ndarray
    counts: np.ndarray
    bimodality: float | None
    bimodal: bool | None
    undefined_reason: str | None = None


@dataclass(frozen=True)
class TunnelingDiagnostic:
    """Rows (instance, run, hamming distance d, Gamma^d weight) and the
    per-instance (s, median d) pairs used for hardness correlation plots."""

    rows: tuple
    per_instance: tuple
    gamma: float


# ----------------------------------------------------------------------
# solver adapters (picklable, deterministic under seed)
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SASolver:
    """Simulated annealing on the instance's classical cost."""

    cfg: SAConfig
    solver_id: str = "sa"

    def __call__(self, instance: IsingInstance, seed: int) -> AnnealResult:
        cfg = replace(self.cfg, seed=seed)
        return simulated_anneal(IsingCost(instance), cfg)


@dataclass(frozen=True)
class QASolver:
    """Schroedinger-picture quantum annealing; each run draws one
    measurement from the final state."""

    cfg: QAConfig
    solver_id: str = "qa"

    def __call__(self, instance: IsingInstance, seed: int) -> AnnealResult:
        evolved = quantum_anneal(instance, self.cfg)
        rng = np.random.default_rng(seed)
        probs = evolved.final_state.probabilities()
        outcome = int(rng.choice(probs.size, p=probs / probs.sum()))
        config = config_from_index(outcome, instance.n)
        e = energy(instance, config)
        return replace(
            evolved,
            seed=seed,
            best_energy=e,
            final_energy=e,
            best_config=config,
            final_config=config,
        )


@dataclass(frozen=True)
class RandomGuessSolver:
    """Uniform random configuration; the null model for metric tests."""

    solver_id: str = "random"

    def __call__(self, instance: IsingInstance, seed: int) -> AnnealResult:
        rng = np.random.default_rng(seed)
        config = np.where(rng.random(instance.n) < 0.5, 1, -1).astype(np.int8)
        e = energy(instance, config)
        return AnnealResult(
            solver=self.solver_id,
            seed=seed,
            best_energy=e,
            best_config=config,
            final_config=config,
            final_state=None,
            final_energy=e,
            success=None,
            residual=None,
            wall_time=0.0,
            cost_units=1.0,
        )


@dataclass(frozen=True)
class PerfectSolver:
    """Brute-force oracle dressed as a solver."""

    solver_id: str = "perfect"

    def __call__(self, instance: IsingInstance, seed: int) -> AnnealResult:
        e, minimizers = brute_force_ground(IsingCost(instance))
        return AnnealResult(
            solver=self.solver_id,
            seed=seed,
            best_energy=e,
            best_config=minimizers[0],
            final_config=minimizers[0],
            final_state=None,
            final_energy=e,
            success=1.0,
            residual=0.0,
            wall_time=0.0,
            cost_units=1.0,
        )


def _run_seed(master_seed: int, instance_index: int, run_index: int) -> int:
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(instance_index, run_index))
    return int(seq.generate_state(1)[0])


def _one_run(args):
    solver, instance, instance_id, instance_index, run_index, master_seed, ground = args
    seed = _run_seed(master_seed, instance_index, run_index)
    result = solver(instance, seed)
    success = bool(result.best_energy <= ground + 1e-9)
    config = result.best_config if result.best_config is not None else result.final_config
    return RunRecord(
        instance_id=instance_id,
        run_index=run_index,
        seed=seed,
        best_energy=result.best_energy,
        success=success,
        sim_cost=result.cost_units,
        wall_time=result.wall_time,
        config=tuple(int(x) for x in config) if config is not None else None,
    )


def success_probability(solver, instance: IsingInstance, runs: int, master_seed: int = 0) -> float:
    """Fraction of seeded runs whose best configuration attains the
    brute-force ground energy."""
    report = run_ensemble(solver, [instance], runs=runs, master_seed=master_seed)
    return report.entries[0].s


def run_ensemble(
    solver,
    instances,
    runs: int,
    master_seed: int = 0,
    threads: int = 1,
    keep_records: bool = True,
    time_metric: str = "simulated",
) -> SolverReport:
    """Execute the instance x run grid and aggregate per-instance stats.

    The brute-force oracle pins the ground energy of every instance
    (n <= 24 required). ``time_metric`` selects whether t_a carries the
    simulated cost (reproducible) or measured wall time.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if time_metric not in ("simulated", "wall"):
        raise ValueError("time_metric must be 'simulated' or 'wall'")
    instances = list(instances)
    grounds = []
    ids = []
    for inst in instances:
        e, _ = brute_force_ground(IsingCost(inst))
        grounds.append(e)
        ids.append(inst.content_hash())
    tasks = [
        (solver, inst, ids[i], i, r, master_seed, grounds[i])
        for i, inst in enumerate(instances)
        for r in range(runs)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_one_run, tasks, chunksize=1))
    else:
        records = [_one_run(t) for t in tasks]
    records.sort(key=lambda rec: (rec.instance_id, rec.run_index))
    entries = []
    for i, inst in enumerate(instances):
        recs = [r for r in records if r.instance_id == ids[i]]
        successes = sum(r.success for r in recs)
        metric = [r.sim_cost if time_metric == "simulated" else r.wall_time for r in recs]
        entries.append(
            InstanceStats(
                instance_id=ids[i],
                runs=runs,
                successes=successes,
                s=successes / runs,
                t_a=float(np.mean(metric)),
            )
        )
    solver_id = getattr(solver, "solver_id", getattr(solver, "__name__", "solver"))
    return SolverReport(
        solver_id=solver_id,
        entries=tuple(entries),
        records=tuple(records) if keep_records else (),
    )


# ----------------------------------------------------------------------
# metrics
# ----------------------------------------------------------------------


def repeats_needed(s: float, p: float) -> int:
    """Smallest R with 1 - (1-s)^R >= p."""
    if not 0.0 < s <= 1.0:
        raise ValueError("need success probability 0 < s <= 1 (s = 0 never succeeds)")
    if not 0.0 < p < 1.0:
        raise ValueError("need target probability 0 < p < 1")
    if s == 1.0 or s >= p:
        return 1
    r = max(1, math.ceil(math.log(1.0 - p) / math.log(1.0 - s)))
    while 1.0 - (1.0 - s) ** r < p:  # guard the ceil against roundoff
        r += 1
    while r > 1 and 1.0 - (1.0 - s) ** (r - 1) >= p:
        r -= 1
    return r


def lower_quantile(values, level: float) -> float:
    """Smallest sample value v with fraction(values <= v) >= level.

    This pinned definition keeps the speedup metrics exactly reproducible
    by independent recomputation.
    """
    if not 0.0 < level <= 1.0:
        raise ValueError("quantile level must be in (0, 1]")
    ordered = sorted(values)
    if not ordered:
        raise ValueError("empty sample")
    rank = math.ceil(level * len(ordered))
    return ordered[max(rank, 1) - 1]


def time_to_solution(stats: InstanceStats, p_target: float = 0.99) -> float:
    """R(s) * t_a: expected cost to hit the optimum at least once with
    probability p_target."""
    return repeats_needed(stats.s, p_target) * stats.t_a


def speedup_metrics(
    report_a: SolverReport,
    report_b: SolverReport,
    s0: float = 0.5,
    p_target: float = 0.99,
) -> SpeedupReport:
    """Both of the ensemble speedup definitions for A relative to B.

    Hardness is the per-solver success probability; the "hard" sub-ensemble
    at level s0 keeps instances with s at or below that solver's s0
    lower-quantile. The quotient of quantiles divides the mean
    time-to-solution of A on its hard set by that of B on its own; the
    quantile of the quotient is the median per-instance T_A/T_B over the
    jointly hard set. Instances with s = 0 in either report are excluded
    and counted.
    """
    stats_a = report_a.stats_by_instance()
    stats_b = report_b.stats_by_instance()
    common = [i for i in report_a.instance_ids() if i in stats_b]
    if not common:
        raise ValueError("reports share no instances")
    excluded = [i for i in common if stats_a[i].s == 0.0 or stats_b[i].s == 0.0]
    usable = [i for i in common if i not in excluded]
    if not usable:
        raise ValueError("every shared instance has s = 0 in one of the reports")

    qa = lower_quantile([stats_a[i].s for i in usable], s0)
    qb = lower_quantile([stats_b[i].s for i in usable], s0)
    hard_a = [i for i in usable if stats_a[i].s <= qa]
    hard_b = [i for i in usable if stats_b[i].s <= qb]
    mean_ta = float(np.mean([time_to_solution(stats_a[i], p_target) for i in hard_a]))
    mean_tb = float(np.mean([time_to_solution(stats_b[i], p_target) for i in hard_b]))
    quotient_of_quantiles = mean_ta / mean_tb

    joint = [i for i in usable if stats_a[i].s <= qa and stats_b[i].s <= qb]
    if not joint:
        joint = usable
    quotients = tuple(
        time_to_solution(stats_a[i], p_target) / time_to_solution(stats_b[i], p_target)
        for i in joint
    )
    quantile_of_quotient = lower_quantile(quotients, 0.5)
    return SpeedupReport(
        s0=s0,
        quotient_of_quantiles=quotient_of_quantiles,
        quantile_of_quotient=quantile_of_quotient,
        per_instance_quotients=quotients,
        excluded_instances=len(excluded),
        p_target=p_target,
    )


def success_histogram(report: SolverReport, bins: int = 20) -> HistogramReport:
    """Fixed-width histogram of per-instance success probabilities with
    Sarle's bimodality coefficient (threshold 5/9)."""
    values = np.array([e.s for e in report.entries], dtype=float)
    if values.size == 0:
        raise ValueError("empty report")
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    n = values.size
    reason = None
    coefficient = None
    bimodal = None
    if n < 4:
        reason = "need at least 4 instances for the finite-sample coefficient"
    elif np.ptp(values) == 0.0:
        reason = "all success probabilities identical; moments degenerate"
    else:
        g1 = stats.skew(values, bias=False)
        g2 = stats.kurtosis(values, fisher=True, bias=False)
        denom = g2 + 3.0 * (n - 1) ** 2 / ((n - 2) * (n - 3))
        coefficient = float((g1**2 + 1.0) / denom)
        bimodal = coefficient > BIMODALITY_THRESHOLD
    return HistogramReport(
        bin_edges=edges,
        counts=counts,
        bimodality=coefficient,
        bimodal=bimodal,
        undefined_reason=reason,
    )


def hamming_tunneling_diagnostic(report: SolverReport, ground_states: dict, gamma: float) -> TunnelingDiagnostic:
    """Per-run minimum Hamming distance to the ground set with the
    perturbative tunneling weight Gamma^d attached.

    ``ground_states`` maps instance id -> list of ground configurations.
    Successful runs sit at d = 0 with weight 1.
    """
    rows = []
    by_instance: dict = {}
    for rec in report.records:
        if rec.config is None:
            continue
        grounds = ground_states[rec.instance_id]
        if rec.success:
            d = 0
        else:
            cfg = spin_config(rec.config)
            d = min(hamming_distance(cfg, g) for g in grounds)
        rows.append((rec.instance_id, rec.run_index, d, gamma**d))
        by_instance.setdefault(rec.instance_id, []).append(d)
    per_instance = []
    stats_map = report.stats_by_instance()
    for instance_id, dists in by_instance.items():
        s = stats_map[instance_id].s if instance_id in stats_map else float("nan")
        per_instance.append((s, float(np.median(dists))))
    return TunnelingDiagnostic(rows=tuple(rows), per_instance=tuple(per_instance), gamma=gamma)
