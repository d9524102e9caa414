"""Classical <-> quantum bridge: detailed-balance Metropolis kernels, their
quantized Hamiltonians with Gibbs ground states, Perron stochasticization of
nonnegative kernels, conductance, and the spectral-gap bounds.

Stochastic matrices are column-stochastic throughout: ``P[i, j]`` is the
probability of moving j -> i. This single orientation is enforced at
construction to keep transposition bugs out of the detailed-balance and
conductance arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .operators import HermitianOperator, lowest_eigenpairs
from .problems import CostFunction

__all__ = [
    "StochasticMatrix",
    "GibbsState",
    "PerronData",
    "ConductanceResult",
    "GapBoundReport",
    "NonStationaryError",
    "ReducibleKernelError",
    "metropolis_matrix",
    "gibbs_state",
    "quantize",
    "perron_stochasticize",
    "conductance",
    "gap_bounds_check",
]

COLUMN_SUM_TOL = 1e-12
STATIONARITY_TOL = 1e-10
QUANTIZE_RESIDUAL_TOL = 1e-10
EXACT_CUT_MAX_STATES = 20


class NonStationaryError(ValueError):
    """The supplied distribution is not stationary for the kernel."""


class ReducibleKernelError(ValueError):
    """Perron construction needs a primitive (irreducible, aperiodic) kernel."""


@dataclass(frozen=True)
class StochasticMatrix:
    """Column-stochastic transition kernel with an optional cached
    limiting distribution."""

    matrix: object
    pi: np.ndarray | None = None

    def __post_init__(self):
        m = self.matrix
        if sp.issparse(m):
            m = m.tocsr()
            data_min = m.data.min() if m.nnz else 0.0
            sums = np.asarray(m.sum(axis=0)).ravel()
        else:
            m = np.asarray(m, dtype=float)
            data_min = m.min() if m.size else 0.0
            sums = m.sum(axis=0)
        if m.shape[0] != m.shape[1]:
            raise ValueError("transition matrix must be square")
        if data_min < -COLUMN_SUM_TOL:
            raise ValueError(f"negative transition probability {data_min:.3e}")
        if np.abs(sums - 1.0).max() > COLUMN_SUM_TOL:
            raise ValueError(
                f"columns must sum to 1 (max defect {np.abs(sums - 1.0).max():.3e})"
            )
        object.__setattr__(self, "matrix", m)
        if self.pi is not None:
            pi = np.asarray(self.pi, dtype=float)
            pi.flags.writeable = False
            object.__setattr__(self, "pi", pi)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if sp.issparse(self.matrix) else self.matrix

    def transition(self, frm: int, to: int) -> float:
        return float(self.matrix[to, frm])

    def evolve(self, dist: np.ndarray) -> np.ndarray:
        return self.matrix @ dist


@dataclass(frozen=True)
class GibbsState:
    """Amplitude vector proportional to exp(-beta E / 2) with its partition
    function; the zero mode of the quantized Metropolis Hamiltonian."""

    beta: float
    partition: float
    amplitudes: np.ndarray
    cost: CostFunction | None = None

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=float)
        if np.any(amps <= 0):
            raise ValueError("Gibbs amplitudes must be strictly positive")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError("Gibbs amplitudes must be normalized")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def distribution(self) -> np.ndarray:
        return self.amplitudes**2


@dataclass(frozen=True)
class PerronData:
    """Top eigenpair of a primitive nonnegative kernel and the limiting
    distribution alpha_i^2 / Z it induces on the stochasticized chain."""

    mu: float
    alpha: np.ndarray
    limit: np.ndarray


@dataclass(frozen=True)
class ConductanceResult:
    phi: float
    cut: tuple
    exact: bool


@dataclass(frozen=True)
class GapBoundReport:
    gap: float
    phi: float
    half_phi_sq: float
    bound_ok: bool
    cut: tuple
    exact_cut: bool
    clock_length: int | None = None
    clock_bound: float | None = None
    clock_ok: bool | None = None
    hamiltonian_gap_ratio: float | None = None


def _stationary_check(P: StochasticMatrix, pi: np.ndarray):
    pi = np.asarray(pi, dtype=float)
    if pi.size != P.dim:
        raise ValueError("pi length mismatch")
    if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-9:
        raise ValueError("pi must be a probability distribution")
    defect = np.abs(P.evolve(pi) - pi).max()
    if defect > STATIONARITY_TOL:
        raise NonStationaryError(f"pi is not stationary (defect {defect:.3e})")
    return pi


def metropolis_matrix(cost: CostFunction, beta: float, lazy: bool = False) -> StochasticMatrix:
    """Exact single-spin-flip Metropolis kernel over all 2^n configurations.

    This is an analysis tool, not a sampler: the full matrix is built, so
    n is capped at 12. With ``lazy`` the chain stays put with probability
    1/2, which makes it aperiodic. Detailed balance with respect to
    pi_beta ~ exp(-beta E) holds entrywise by construction.
    """
    n = cost.n
    if n > 12:
        raise ValueError("metropolis_matrix builds the full 2^n kernel; n <= 12 only")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    energies = cost.energies_all()
    dim = 2**n
    idx = np.arange(dim, dtype=np.int64)
    P = np.zeros((dim, dim))
    for bit in range(n):
        dest = idx ^ (1 << bit)
        accept = np.minimum(1.0, np.exp(-beta * (energies[dest] - energies[idx])))
        P[dest, idx] += accept / n
    P[idx, idx] += 1.0 - P.sum(axis=0)
    if lazy:
        P = 0.5 * np.eye(dim) + 0.5 * P
    weights = np.exp(-beta * (energies - energies.min()))
    pi = weights / weights.sum()
    return StochasticMatrix(P, pi=pi)


def gibbs_state(cost: CostFunction, beta: float) -> GibbsState:
    """Gibbs amplitude vector exp(-beta E / 2) / sqrt(Z) for a cost function."""
    energies = cost.energies_all()
    shifted = energies - energies.min()
    partition = float(np.exp(-beta * shifted).sum())
    amps = np.exp(-0.5 * beta * shifted)
    amps /= np.linalg.norm(amps)
    return GibbsState(beta=beta, partition=partition, amplitudes=amps, cost=cost)


def quantize(S: StochasticMatrix, cost: CostFunction, beta: float) -> HermitianOperator:
    """Hermitian operator H[i,j] = delta_ij - sqrt(S_ij S_ji) from a
    detailed-balance kernel.

    The Gibbs amplitude vector is verified to be a zero mode; a residual
    above tolerance means the kernel does not satisfy detailed balance for
    this cost/beta and the construction is rejected.
    """
    M = S.dense()
    sym = np.sqrt(M * M.T)
    ham = np.eye(S.dim) - sym
    ham = 0.5 * (ham + ham.T)  # scrub roundoff asymmetry from the sqrt
    state = gibbs_state(cost, beta)
    residual = float(np.linalg.norm(ham @ state.amplitudes))
    if residual > QUANTIZE_RESIDUAL_TOL:
        raise ValueError(
            f"Gibbs vector is not a zero mode (residual {residual:.3e}); "
            "kernel/cost/beta mismatch"
        )
    return HermitianOperator.from_matrix(ham.astype(complex), n_qubits=cost.n)


def _is_primitive(G: np.ndarray, tol: float = 0.0) -> bool:
    """Primitivity via boolean powers up to the Wielandt bound."""
    n = G.shape[0]
    if n == 1:
        return G[0, 0] > tol
    reach = G > tol
    step = reach.copy()
    bound = n * n - 2 * n + 2
    for _ in range(bound):
        if reach.all():
            return True
        step = (step.astype(np.int8) @ (G > tol).astype(np.int8)) > 0
        reach = step
    return bool(reach.all())


def perron_stochasticize(H) -> tuple[StochasticMatrix, PerronData]:
    """Stochasticize G = I - H for a Hamiltonian with nonnegative kernel.

    Requires G entrywise nonnegative and primitive on the supplied basis.
    Returns the column-stochastic chain P[i,j] = alpha_i G_ij / (mu alpha_j)
    together with the Perron eigenpair and the limiting distribution
    alpha^2 / Z. The chain's spectral gap equals (E1 - E0)/mu of H.
    """
    M = H.dense() if isinstance(H, HermitianOperator) else np.asarray(H)
    if np.abs(np.imag(M)).max() > 1e-12:
        raise ValueError("Perron construction needs a real kernel")
    M = np.real(M)
    G = np.eye(M.shape[0]) - M
    if G.min() < -1e-12:
        i, j = np.unravel_index(np.argmin(G), G.shape)
        raise ValueError(f"kernel entry G[{i},{j}] = {G[i, j]:.3e} is negative")
    G = np.clip(G, 0.0, None)
    if not _is_primitive(G):
        raise ReducibleKernelError("kernel I - H is reducible or periodic")
    vals, vecs = np.linalg.eigh(0.5 * (G + G.T))
    mu = float(vals[-1])
    alpha = vecs[:, -1]
    if alpha.sum() < 0:
        alpha = -alpha
    if alpha.min() <= 0:
        raise ReducibleKernelError("Perron vector is not strictly positive")
    P = (alpha[:, None] * G) / (mu * alpha[None, :])
    limit = alpha**2 / np.sum(alpha**2)
    data = PerronData(mu=mu, alpha=alpha, limit=limit)
    return StochasticMatrix(P, pi=limit), data


def _cut_flow_weights(P: StochasticMatrix, pi: np.ndarray) -> np.ndarray:
    """w[i, j] = pi_i * Pr(i -> j); F(B) = sum_{i in B, j not in B} w[i, j]."""
    return pi[:, None] * P.dense().T


def conductance(P: StochasticMatrix, pi=None) -> ConductanceResult:
    """Minimal normalized probability flow out of a subset with at most half
    the stationary mass.

    Exact subset enumeration up to 20 states; beyond that only threshold
    (prefix/suffix) cuts in the given state order are scanned and the
    result is flagged approximate. Ties pi(B) = 1/2 are admitted.
    """
    pi = P.pi if pi is None else pi
    if pi is None:
        raise ValueError("no stationary distribution supplied or cached")
    pi = _stationary_check(P, pi)
    m = P.dim
    if m < 2:
        raise ValueError("conductance needs at least 2 states")
    w = _cut_flow_weights(P, pi)

    if m <= EXACT_CUT_MAX_STATES:
        best_phi, best_mask = np.inf, None
        chunk = 1 << 14
        bit_cols = np.arange(m, dtype=np.int64)
        for start in range(1, 2**m, chunk):
            stop = min(start + chunk, 2**m)
            masks = np.arange(start, stop, dtype=np.int64)
            x = ((masks[:, None] >> bit_cols) & 1).astype(float)
            mass = x @ pi
            ok = (mass <= 0.5 + 1e-12) & (mass > 0)
            if not ok.any():
                continue
            x = x[ok]
            masks = masks[ok]
            mass = mass[ok]
            flow = np.einsum("bi,ij,bj->b", x, w, 1.0 - x)
            ratio = flow / mass
            i = int(np.argmin(ratio))
            if ratio[i] < best_phi:
                best_phi = float(ratio[i])
                best_mask = int(masks[i])
        cut = tuple(i for i in range(m) if (best_mask >> i) & 1)
        return ConductanceResult(phi=best_phi, cut=cut, exact=True)

    best_phi, best_cut = np.inf, ()
    candidates = [tuple(range(k + 1)) for k in range(m - 1)]
    candidates += [tuple(range(k, m)) for k in range(1, m)]
    for cut in candidates:
        mass = float(pi[list(cut)].sum())
        if not 0 < mass <= 0.5 + 1e-12:
            continue
        inside = np.zeros(m, dtype=bool)
        inside[list(cut)] = True
        flow = float(w[inside][:, ~inside].sum())
        ratio = flow / mass
        if ratio < best_phi:
            best_phi, best_cut = ratio, cut
    return ConductanceResult(phi=best_phi, cut=best_cut, exact=False)


def _chain_gap(P: StochasticMatrix, pi: np.ndarray) -> float:
    """1 - lambda_2 of the kernel; reversible chains go through a symmetric
    similarity transform so the spectrum is real by construction."""
    M = P.dense()
    scale = np.sqrt(pi)
    A = M * (scale[None, :] / scale[:, None])
    if np.abs(A - A.T).max() <= 1e-9:
        vals = np.linalg.eigvalsh(0.5 * (A + A.T))
    else:
        vals = np.sort(np.real(np.linalg.eigvals(M)))
    return float(vals[-1] - vals[-2])


def gap_bounds_check(P: StochasticMatrix, pi=None, H=None, clock_length=None) -> GapBoundReport:
    """Report-only check of gap(P) >= phi^2 / 2 and, for clock chains,
    phi >= 1/(6L); optionally cross-checks gap(P) = (E1-E0)/mu against H."""
    pi = P.pi if pi is None else pi
    pi = _stationary_check(P, pi)
    cond = conductance(P, pi)
    gap = _chain_gap(P, pi)
    half_sq = 0.5 * cond.phi**2
    report = {
        "gap": gap,
        "phi": cond.phi,
        "half_phi_sq": half_sq,
        "bound_ok": gap + 1e-12 >= half_sq,
        "cut": cond.cut,
        "exact_cut": cond.exact,
    }
    if clock_length is not None:
        bound = 1.0 / (6.0 * clock_length)
        report["clock_length"] = clock_length
        report["clock_bound"] = bound
        report["clock_ok"] = cond.phi + 1e-12 >= bound
    if H is not None:
        spec = lowest_eigenpairs(H, k=2)
        mu = 1.0 - spec.eigenvalues[0]
        report["hamiltonian_gap_ratio"] = float(spec.gap() / mu)
    return GapBoundReport(**report)
