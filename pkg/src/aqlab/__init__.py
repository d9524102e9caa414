"""aqlab: a desk-scale laboratory for adiabatic quantum computation and
quantum annealing.

Exact state-vector simulation of transverse-field Ising evolution, the
circuit-to-adiabatic clock-Hamiltonian compiler, the classical <-> quantum
annealing bridge, minor embedding onto Chimera hardware graphs, and a
benchmarking harness for success-probability and speedup metrics.
"""

__version__ = "0.1.0"

from .operators import (
    DENSE_CUTOFF,
    HermitianOperator,
    PauliTerm,
    Spectrum,
    StateVector,
    basis_state,
    build_operator,
    evolve_imaginary,
    evolve_real,
    ground_state,
    lowest_eigenpairs,
    uniform_superposition,
)
from .problems import (
    CostFunction,
    ExactCoverCost,
    HammingSpikeCost,
    IsingCost,
    IsingInstance,
    VanDamCost,
    brute_force_ground,
    driver_hamiltonian,
    energy,
    gen_exact_cover,
    gen_hamming_family,
    gen_spin_glass,
    problem_hamiltonian,
)
from .adiabatic import (
    DwellDistribution,
    GapProfile,
    InterpolationPath,
    ZenoSchedule,
    adiabatic_time_estimate,
    gap_profile,
    run_adiabatic,
    standard_anneal_path,
    susceptibility,
    zeno_cost,
    zeno_run,
    zeno_schedule_from_path,
)
from .annealing import (
    AnnealResult,
    QAConfig,
    SAConfig,
    free_energy,
    freeze_time,
    quantum_anneal,
    simulated_anneal,
)
from .stochastic import (
    GibbsState,
    PerronData,
    StochasticMatrix,
    conductance,
    gap_bounds_check,
    gibbs_state,
    metropolis_matrix,
    perron_stochasticize,
    quantize,
)
from .clock import (
    ClockHamiltonian,
    HistoryState,
    QuantumCircuit,
    clock_hamiltonian,
    compile_to_path,
    grover_circuit,
    history_vector,
    measure_history,
    pad_identities,
    parse_circuit,
    reduced_toeplitz,
)
from .chimera import (
    ChimeraGraph,
    MinorEmbedding,
    build_chimera,
    embed_instance,
    find_embedding,
    unembed,
    validate_embedding,
)
from .bench import (
    QASolver,
    SASolver,
    SolverReport,
    SpeedupReport,
    hamming_tunneling_diagnostic,
    repeats_needed,
    run_ensemble,
    speedup_metrics,
    success_histogram,
    success_probability,
)
