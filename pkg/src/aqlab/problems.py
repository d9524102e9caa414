"""Ising instances, their Hamiltonians, cost-function families, brute-force
oracles, and seeded instance generators.

Spin configurations are plain numpy arrays with entries +-1; the global
convention |0> <-> sigma = +1 maps basis index ``b`` to the configuration
``sigma_i = 1 - 2*((b >> i) & 1)``.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .operators import HermitianOperator, PauliTerm, build_operator

__all__ = [
    "IsingInstance",
    "CostFunction",
    "IsingCost",
    "TableCost",
    "VanDamCost",
    "HammingSpikeCost",
    "ExactCoverCost",
    "spin_config",
    "config_from_index",
    "index_from_config",
    "all_configs",
    "hamming_distance",
    "energy",
    "energies_all",
    "problem_hamiltonian",
    "driver_hamiltonian",
    "brute_force_ground",
    "gen_spin_glass",
    "gen_exact_cover",
    "gen_hamming_family",
    "ExactCoverGenerationError",
]

#: exhaustive enumeration budget
BRUTE_FORCE_MAX_N = 24
_CHUNK_BITS = 16


class ExactCoverGenerationError(RuntimeError):
    """The clause process could not reach a unique satisfying assignment."""


def spin_config(values) -> np.ndarray:
    """Validate and canonicalize a +-1 spin configuration."""
    arr = np.asarray(values, dtype=np.int8).ravel()
    if arr.size == 0:
        raise ValueError("empty configuration")
    if not np.all(np.abs(arr) == 1):
        raise ValueError("spin entries must be +1 or -1")
    return arr


def config_from_index(index: int, n: int) -> np.ndarray:
    """Basis index -> spin configuration under the |0> <-> +1 map."""
    bits = (index >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def index_from_config(config) -> int:
    config = spin_config(config)
    bits = ((1 - config.astype(np.int64)) // 2).astype(np.int64)
    return int(np.sum(bits << np.arange(config.size)))


def all_configs(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Spin configurations for basis indices [start, stop) as a (m, n) array."""
    stop = 2**n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def hamming_distance(a, b) -> int:
    return int(np.count_nonzero(spin_config(a) != spin_config(b)))


@dataclass(frozen=True)
class IsingInstance:
    """Couplings J (i<j), longitudinal fields h, transverse strengths delta.

    The classical energy is E(sigma) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i;
    delta enters only through the quantum driver.
    """

    n: int
    couplings: dict = field(default_factory=dict)
    h: np.ndarray = None
    delta: np.ndarray = None
    family: str = "ising"
    seed: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        canon = {}
        for (i, j), val in dict(self.couplings).items():
            if i == j:
                raise ValueError(f"self-coupling on spin {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"coupling ({i},{j}) out of range for n={self.n}")
            if not np.isfinite(val):
                raise ValueError(f"non-finite coupling on ({i},{j})")
            key = (i, j) if i < j else (j, i)
            canon[key] = canon.get(key, 0.0) + float(val)
        h = np.zeros(self.n) if self.h is None else np.asarray(self.h, dtype=float)
        delta = (
            np.ones(self.n) if self.delta is None else np.asarray(self.delta, dtype=float)
        )
        if h.size != self.n or delta.size != self.n:
            raise ValueError("h and delta must have length n")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(delta))):
            raise ValueError("non-finite field values")
        h.flags.writeable = False
        delta.flags.writeable = False
        object.__setattr__(self, "couplings", canon)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "delta", delta)

    def edges(self):
        return sorted(self.couplings)

    def max_abs_coupling(self) -> float:
        return max((abs(v) for v in self.couplings.values()), default=0.0)

    # -- serialization: canonical field order, byte-reproducible ---------

    def to_json(self) -> str:
        doc = {
            "format": "ising-instance",
            "n": self.n,
            "couplings": [[i, j, self.couplings[(i, j)]] for (i, j) in self.edges()],
            "h": list(map(float, self.h)),
            "delta": list(map(float, self.delta)),
            "family": self.family,
            "seed": self.seed,
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "IsingInstance":
        doc = json.loads(text)
        if doc.get("format") != "ising-instance":
            raise ValueError("not an ising-instance document")
        couplings = {(int(i), int(j)): float(v) for i, j, v in doc["couplings"]}
        return cls(
            n=int(doc["n"]),
            couplings=couplings,
            h=np.asarray(doc["h"], dtype=float),
            delta=np.asarray(doc["delta"], dtype=float),
            family=doc.get("family", "ising"),
            seed=doc.get("seed"),
        )

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "IsingInstance":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def energy(instance: IsingInstance, config) -> float:
    """Classical Ising energy of one configuration."""
    config = spin_config(config)
    if config.size != instance.n:
        raise ValueError(f"configuration length {config.size} != n={instance.n}")
    s = config.astype(float)
    e = -float(np.dot(instance.h, s))
    for (i, j), val in instance.couplings.items():
        e -= val * s[i] * s[j]
    return e


def energies_all(instance: IsingInstance) -> np.ndarray:
    """Energies of all 2^n configurations, indexed by basis state."""
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"n={n} beyond enumeration budget {BRUTE_FORCE_MAX_N}")
    idx = np.arange(2**n, dtype=np.int64)
    out = np.zeros(2**n)
    sigma = {}

    def col(i):
        if i not in sigma:
            sigma[i] = (1 - 2 * ((idx >> i) & 1)).astype(float)
        return sigma[i]

    for (i, j), val in instance.couplings.items():
        out -= val * col(i) * col(j)
    for i in range(n):
        if instance.h[i] != 0.0:
            out -= instance.h[i] * col(i)
    return out


def problem_hamiltonian(instance: IsingInstance) -> HermitianOperator:
    """Diagonal operator whose basis-state entries are the classical energies."""
    terms = tuple(
        PauliTerm(-val, {i: "Z", j: "Z"}) for (i, j), val in sorted(instance.couplings.items())
    ) + tuple(
        PauliTerm(-instance.h[i], {i: "Z"}) for i in range(instance.n) if instance.h[i] != 0.0
    )
    return HermitianOperator.from_diagonal(
        energies_all(instance), n_qubits=instance.n, terms=terms
    )


def driver_hamiltonian(instance: IsingInstance) -> HermitianOperator:
    """Transverse tunneling term sum_i delta_i sigma_x^i.

    The ground state of the *negated* driver (with all delta > 0) is the
    uniform superposition over the computational basis.
    """
    terms = tuple(
        PauliTerm(instance.delta[i], {i: "X"})
        for i in range(instance.n)
        if instance.delta[i] != 0.0
    )
    if not terms:
        return HermitianOperator.from_diagonal(
            np.zeros(2**instance.n), n_qubits=instance.n, terms=()
        )
    return build_operator(instance.n, terms)


# ----------------------------------------------------------------------
# cost-function families
# ----------------------------------------------------------------------


class CostFunction:
    """Total deterministic map from spin configurations to real cost.

    Subclasses set ``n`` and ``family`` and implement ``evaluate``;
    ``batch`` may be overridden with a vectorized version (rows of the
    input are configurations).
    """

    n: int
    family: str

    def evaluate(self, config) -> float:
        raise NotImplementedError

    def __call__(self, config) -> float:
        return self.evaluate(config)

    def batch(self, configs: np.ndarray) -> np.ndarray:
        return np.array([self.evaluate(row) for row in configs])

    def flip_delta(self, config, i: int) -> float:
        """Cost change from flipping spin i (generic two-evaluation form)."""
        flipped = np.array(config, dtype=np.int8)
        flipped[i] = -flipped[i]
        return self.evaluate(flipped) - self.evaluate(config)

    def energies_all(self) -> np.ndarray:
        if self.n > BRUTE_FORCE_MAX_N:
            raise ValueError(f"n={self.n} beyond enumeration budget")
        total = 2**self.n
        chunk = 2**_CHUNK_BITS
        if total <= chunk:
            return self.batch(all_configs(self.n))
        parts = [
            self.batch(all_configs(self.n, start, min(start + chunk, total)))
            for start in range(0, total, chunk)
        ]
        return np.concatenate(parts)


class IsingCost(CostFunction):
    """Classical energy of an Ising instance, with O(degree) flip updates."""

    family = "ising"

    def __init__(self, instance: IsingInstance):
        self.instance = instance
        self.n = instance.n

    def evaluate(self, config) -> float:
        return energy(self.instance, config)

    def batch(self, configs) -> np.ndarray:
        s = np.asarray(configs, dtype=float)
        out = -(s @ self.instance.h)
        for (i, j), val in self.instance.couplings.items():
            out -= val * s[:, i] * s[:, j]
        return out

    def flip_delta(self, config, i: int) -> float:
        s = np.asarray(config, dtype=float)
        local = self.instance.h[i]
        for (a, b), val in self.instance.couplings.items():
            if a == i:
                local += val * s[b]
            elif b == i:
                local += val * s[a]
        return 2.0 * s[i] * local

    def energies_all(self) -> np.ndarray:
        return energies_all(self.instance)


class TableCost(CostFunction):
    """Cost read from an explicit 2^n table (testing and synthetic work)."""

    family = "table"

    def __init__(self, n: int, table):
        table = np.asarray(table, dtype=float)
        if table.size != 2**n:
            raise ValueError("table length must be 2^n")
        self.n = n
        self.table = table

    def evaluate(self, config) -> float:
        return float(self.table[index_from_config(config)])

    def energies_all(self) -> np.ndarray:
        return self.table.copy()


def _weights(configs) -> np.ndarray:
    """Hamming weights (number of -1 spins, i.e. set bits) per row."""
    arr = np.atleast_2d(np.asarray(configs))
    return np.sum(arr == -1, axis=1)


class VanDamCost(CostFunction):
    """Hamming-weight deceit: cost equals the weight below the threshold
    (1+epsilon)/2 * n and drops to the global minimum -1 at or above it."""

    family = "van-dam"

    def __init__(self, n: int, epsilon: float = 0.0):
        if not 0.0 <= epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1)")
        self.n = n
        self.epsilon = epsilon
        self.threshold = (1.0 + epsilon) / 2.0 * n

    def evaluate(self, config) -> float:
        return float(self.batch(np.atleast_2d(spin_config(config)))[0])

    def batch(self, configs) -> np.ndarray:
        w = _weights(configs).astype(float)
        return np.where(w < self.threshold, w, -1.0)


class HammingSpikeCost(CostFunction):
    """Hamming weight plus a barrier of height ``barrier`` for weights within
    ``width`` of the spike position (default n/4)."""

    family = "hamming-spike"

    def __init__(self, n: int, barrier: float = 0.0, width: float = 1.0, position: float | None = None):
        if width <= 0:
            raise ValueError("width must be positive")
        self.n = n
        self.barrier = float(barrier)
        self.width = float(width)
        self.position = n / 4.0 if position is None else float(position)

    def evaluate(self, config) -> float:
        return float(self.batch(np.atleast_2d(spin_config(config)))[0])

    def batch(self, configs) -> np.ndarray:
        w = _weights(configs).astype(float)
        spike = np.abs(w - self.position) < self.width
        return w + np.where(spike, self.barrier, 0.0)


class ExactCoverCost(CostFunction):
    """Sum over one-in-three clauses of (x_i + x_j + x_k - 1)^2 with boolean
    x = (1 - sigma)/2."""

    family = "exact-cover"

    def __init__(self, n: int, clauses):
        self.n = n
        self.clauses = tuple(tuple(sorted(map(int, c))) for c in clauses)
        for c in self.clauses:
            if len(set(c)) != 3 or min(c) < 0 or max(c) >= n:
                raise ValueError(f"bad clause {c}")

    def evaluate(self, config) -> float:
        return float(self.batch(np.atleast_2d(spin_config(config)))[0])

    def batch(self, configs) -> np.ndarray:
        arr = np.atleast_2d(np.asarray(configs))
        x = (1 - arr.astype(np.int64)) // 2
        out = np.zeros(arr.shape[0], dtype=float)
        for i, j, k in self.clauses:
            out += (x[:, i] + x[:, j] + x[:, k] - 1) ** 2
        return out

    @property
    def clause_ratio(self) -> float:
        return len(self.clauses) / self.n


# ----------------------------------------------------------------------
# oracles and generators
# ----------------------------------------------------------------------


def brute_force_ground(cost: CostFunction):
    """Exact minimum and all minimizers by exhaustive enumeration (n <= 24)."""
    if cost.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"n={cost.n} beyond enumeration budget {BRUTE_FORCE_MAX_N}")
    total = 2**cost.n
    chunk = 2**_CHUNK_BITS
    best = np.inf
    argmin_idx: list[int] = []
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        vals = cost.batch(all_configs(cost.n, start, stop))
        lo = vals.min()
        if lo < best - 1e-12:
            best = lo
            argmin_idx = []
        hits = np.nonzero(vals <= best + 1e-12)[0]
        argmin_idx.extend(int(start + i) for i in hits)
    minimizers = [config_from_index(i, cost.n) for i in argmin_idx]
    return float(best), minimizers


def gen_spin_glass(n, edges, j_choices=(-1.0, 1.0), seed=0, h_choices=None) -> IsingInstance:
    """Random spin glass on an explicit edge set, deterministic under seed.

    Couplings are drawn uniformly from the discrete set ``j_choices``
    (+-1 by default); fields stay zero unless ``h_choices`` is given.
    """
    rng = np.random.default_rng(seed)
    edges = [tuple(sorted((int(i), int(j)))) for i, j in edges]
    couplings = {e: float(rng.choice(j_choices)) for e in sorted(set(edges))}
    h = None
    if h_choices is not None:
        h = np.array([float(rng.choice(h_choices)) for _ in range(n)])
    return IsingInstance(n=n, couplings=couplings, h=h, family="spin-glass", seed=seed)


def _satisfying_mask(n, clause, indices):
    x = ((indices[:, None] >> np.array(clause)) & 1).sum(axis=1)
    return x == 1


def gen_exact_cover(n, seed=0, max_iterations=10_000, _depth=0):
    """Random one-in-three Exact Cover instance with a unique solution.

    Clauses are drawn uniformly over variable triples and kept only when
    they leave at least one satisfying assignment; the process stops the
    moment exactly one remains. Seeds that stall past the iteration budget
    restart from a perturbed seed (reported in the clause list's cost
    object via the ``seed`` attribute).
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if n > 20:
        raise ValueError("uniqueness tracking beyond n=20 is not supported")
    rng = np.random.default_rng(seed)
    surviving = np.arange(2**n, dtype=np.int64)
    clauses: list[tuple[int, int, int]] = []
    for _ in range(max_iterations):
        clause = tuple(sorted(rng.choice(n, size=3, replace=False).tolist()))
        keep = surviving[_satisfying_mask(n, clause, surviving)]
        if keep.size == 0:
            continue  # would kill every assignment; re-pick
        clauses.append(clause)
        surviving = keep
        if surviving.size == 1:
            cost = ExactCoverCost(n, clauses)
            cost.seed = seed
            cost.solution_index = int(surviving[0])
            return cost, clauses
    if _depth >= 5:
        raise ExactCoverGenerationError(
            f"no unique-solution instance within budget (n={n}, seed={seed})"
        )
    warnings.warn(
        f"exact-cover seed {seed} stalled before uniqueness; retrying with a perturbed seed",
        stacklevel=2,
    )
    return gen_exact_cover(n, seed=seed + 7919, max_iterations=max_iterations, _depth=_depth + 1)


def gen_hamming_family(kind, n, **params) -> CostFunction:
    """Hamming-weight cost families: ``spike`` or ``van-dam``."""
    if kind == "spike":
        return HammingSpikeCost(n, **params)
    if kind == "van-dam":
        return VanDamCost(n, **params)
    raise ValueError(f"unknown Hamming family {kind!r}")
