"""Numeric substrate: state vectors, Pauli-sum Hermitian operators,
eigensolvers, and real/imaginary-time propagators.

Conventions, fixed across the whole package:

* Basis order: qubit 0 is the least significant bit of the basis index,
  so basis state ``b`` assigns qubit ``i`` the bit ``(b >> i) & 1``.
* Spin map: the computational |0> of a qubit is spin sigma = +1 (the +1
  eigenvector of sigma_z).
* Units: hbar = 1; time is measured in inverse energy units.

Operators are realized as dense arrays up to ``DENSE_CUTOFF`` qubits and as
scipy CSR matrices above that, where eigenproblems fall back to ARPACK.
Operators and states are treated as immutable after construction and are
safe to share across workers.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "PAULI_MATRICES",
    "DENSE_CUTOFF",
    "MAX_SPARSE_QUBITS",
    "PauliTerm",
    "StateVector",
    "HermitianOperator",
    "Spectrum",
    "EigensolverConvergenceError",
    "NormDriftError",
    "DegenerateGroundError",
    "ImaginaryTimeResult",
    "build_operator",
    "basis_state",
    "uniform_superposition",
    "lowest_eigenpairs",
    "ground_state",
    "ground_space_overlap",
    "evolve_real",
    "evolve_imaginary",
    "sigma_z_expectation",
]

PAULI_MATRICES = {
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

#: full dense realization / diagonalization up to this many qubits
DENSE_CUTOFF = 12
#: hard memory guard for sparse realizations
MAX_SPARSE_QUBITS = 26

HERMITICITY_TOL = 1e-12
DENSE_EIG_TOL = 1e-10
ITERATIVE_EIG_TOL = 1e-8
#: dimension at or below which propagators use exact dense exponentials
SMALL_DENSE_DIM = 64


class EigensolverConvergenceError(RuntimeError):
    """Iterative eigensolver ran out of its iteration budget.

    Carries the best residual reached so the caller can decide whether the
    partial answer is usable.
    """

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class NormDriftError(RuntimeError):
    """Real-time propagation lost more norm than the tolerance allows."""


class DegenerateGroundError(RuntimeError):
    """An operation that needs a unique ground state met a degenerate one."""


class PauliTerm:
    """One weighted tensor product of Pauli factors.

    ``factors`` maps qubit index -> one of "X", "Y", "Z"; qubits absent from
    the map carry the identity. An empty map is a multiple of the identity.
    """

    __slots__ = ("coefficient", "factors")

    def __init__(self, coefficient: float, factors: Mapping[int, str] | None = None):
        coefficient = float(coefficient)
        if not np.isfinite(coefficient):
            raise ValueError("Pauli coefficient must be finite")
        items = tuple(sorted((factors or {}).items()))
        for qubit, letter in items:
            if qubit < 0:
                raise ValueError(f"negative qubit index {qubit}")
            if letter not in PAULI_MATRICES:
                raise ValueError(f"unknown Pauli letter {letter!r} (use X, Y or Z)")
        object.__setattr__(self, "coefficient", coefficient)
        object.__setattr__(self, "factors", items)

    def __setattr__(self, name, value):
        raise AttributeError("PauliTerm is immutable")

    def max_index(self) -> int:
        return max((q for q, _ in self.factors), default=-1)

    def as_dict(self) -> dict[int, str]:
        return dict(self.factors)

    def __repr__(self):
        body = " ".join(f"{letter}{q}" for q, letter in self.factors) or "I"
        return f"PauliTerm({self.coefficient:+g} * {body})"

    def __eq__(self, other):
        if not isinstance(other, PauliTerm):
            return NotImplemented
        return self.coefficient == other.coefficient and self.factors == other.factors

    def __hash__(self):
        return hash((self.coefficient, self.factors))


@dataclass(frozen=True)
class StateVector:
    """A normalized-or-not complex vector over the computational basis.

    ``n_qubits`` is optional so that the same container can hold vectors in
    composite spaces (e.g. system x clock) whose dimension is not a power
    of two.
    """

    amplitudes: np.ndarray
    n_qubits: int | None = None

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if self.n_qubits is not None and amps.size != 2**self.n_qubits:
            raise ValueError(
                f"amplitude length {amps.size} does not match 2^{self.n_qubits}"
            )
        if amps.size == 0:
            raise ValueError("empty state vector")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / nrm, self.n_qubits)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(self.overlap(other)) ** 2)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def basis_state(n_qubits: int, index: int) -> StateVector:
    """Computational basis state |index> on ``n_qubits`` qubits."""
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps, n_qubits)


def uniform_superposition(n_qubits: int) -> StateVector:
    """Equal-amplitude sum of all computational basis states."""
    dim = 2**n_qubits
    return StateVector(np.full(dim, 1.0 / np.sqrt(dim), dtype=complex), n_qubits)


def _hermiticity_defect(matrix) -> float:
    if sp.issparse(matrix):
        diff = (matrix - matrix.conj().T).tocoo()
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0
    return float(np.abs(matrix - matrix.conj().T).max())


@dataclass(frozen=True)
class HermitianOperator:
    """A finite-dimensional Hermitian operator with optional Pauli structure.

    ``matrix`` is dense (ndarray) or sparse (CSR). ``terms`` records the
    Pauli decomposition when the operator was built from one, for symbolic
    reuse; operators assembled from explicit matrices (quantized Markov
    kernels, clock constructions) leave it as None. ``n_qubits`` is set
    whenever the dimension is a plain qubit register.
    """

    matrix: object
    terms: tuple[PauliTerm, ...] | None = None
    n_qubits: int | None = None

    def __post_init__(self):
        m = self.matrix
        if sp.issparse(m):
            m = m.tocsr()
        else:
            m = np.asarray(m, dtype=complex)
            if m.ndim != 2:
                raise ValueError("operator matrix must be 2-D")
            m.flags.writeable = False
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got {m.shape}")
        defect = _hermiticity_defect(m)
        if defect > HERMITICITY_TOL:
            raise ValueError(f"matrix is not Hermitian (max asymmetry {defect:.3e})")
        if self.n_qubits is not None and m.shape[0] != 2**self.n_qubits:
            raise ValueError("dimension does not match 2^n_qubits")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            if self.dim > 2**DENSE_CUTOFF:
                raise ValueError(f"refusing to densify a {self.dim}-dimensional operator")
            return self.matrix.toarray()
        return self.matrix

    def is_diagonal(self) -> bool:
        if self.is_sparse:
            off = self.matrix - sp.diags(self.matrix.diagonal())
            return off.nnz == 0 or float(np.abs(off.data).max()) == 0.0
        return not np.any(self.matrix - np.diag(np.diag(self.matrix)))

    def diagonal(self) -> np.ndarray:
        return np.real(self.matrix.diagonal())

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def expectation(self, state: StateVector) -> float:
        amps = state.amplitudes
        return float(np.real(np.vdot(amps, self.matrix @ amps)))

    @classmethod
    def from_matrix(cls, matrix, n_qubits=None, terms=None) -> "HermitianOperator":
        return cls(matrix=matrix, terms=terms, n_qubits=n_qubits)

    @classmethod
    def from_diagonal(cls, diag, n_qubits=None, terms=None) -> "HermitianOperator":
        diag = np.asarray(diag, dtype=float)
        if diag.size > 2**DENSE_CUTOFF:
            matrix = sp.diags(diag, format="csr").astype(complex)
        else:
            matrix = np.diag(diag).astype(complex)
        return cls(matrix=matrix, terms=terms, n_qubits=n_qubits)


def _term_matrix(term: PauliTerm, n_qubits: int):
    """Sparse realization of one Pauli term, identity on untouched qubits."""
    factors = dict(term.factors)
    blocks = []
    q = n_qubits - 1
    while q >= 0:
        if q in factors:
            blocks.append(sp.csr_matrix(PAULI_MATRICES[factors[q]]))
            q -= 1
        else:
            # contiguous identity stretch collapses into one block
            stop = q
            while stop >= 0 and stop not in factors:
                stop -= 1
            blocks.append(sp.identity(2 ** (q - stop), dtype=complex, format="csr"))
            q = stop
    acc = blocks[0]
    for blk in blocks[1:]:
        acc = sp.kron(acc, blk, format="csr")
    return term.coefficient * acc


def build_operator(
    n_qubits: int,
    terms,
    dense: bool | None = None,
) -> HermitianOperator:
    """Sum of Pauli terms as a concrete Hermitian operator.

    ``dense=None`` picks the realization automatically (dense up to
    DENSE_CUTOFF qubits). Indices out of range and register sizes beyond
    the memory budget are rejected.
    """
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if n_qubits > MAX_SPARSE_QUBITS:
        raise ValueError(
            f"{n_qubits} qubits exceeds the {MAX_SPARSE_QUBITS}-qubit memory budget"
        )
    if dense is None:
        dense = n_qubits <= DENSE_CUTOFF
    elif dense and n_qubits > DENSE_CUTOFF:
        raise ValueError(
            f"dense realization limited to {DENSE_CUTOFF} qubits, got {n_qubits}"
        )
    terms = tuple(terms)
    for t in terms:
        if not isinstance(t, PauliTerm):
            raise TypeError(f"expected PauliTerm, got {type(t).__name__}")
        if t.max_index() >= n_qubits:
            raise ValueError(
                f"term {t!r} touches qubit {t.max_index()} but register has {n_qubits}"
            )
    dim = 2**n_qubits
    acc = sp.csr_matrix((dim, dim), dtype=complex)
    for t in terms:
        acc = acc + _term_matrix(t, n_qubits)
    matrix = acc.toarray() if dense else acc
    return HermitianOperator(matrix=matrix, terms=terms, n_qubits=n_qubits)


@dataclass(frozen=True)
class Spectrum:
    """Lowest-k eigenpairs: ascending eigenvalues, orthonormal eigenvectors
    (as columns), and the residual norms ||Hv - lambda v||."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(vals) < -1e-12):
            raise ValueError("eigenvalues must be ascending")
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def k(self) -> int:
        return self.eigenvalues.size

    def state(self, i: int) -> StateVector:
        dim = self.eigenvectors.shape[0]
        n = dim.bit_length() - 1 if dim == 2 ** (dim.bit_length() - 1) else None
        return StateVector(self.eigenvectors[:, i], n)

    def gap(self) -> float:
        if self.k < 2:
            raise ValueError("need at least 2 eigenvalues for a gap")
        return float(self.eigenvalues[1] - self.eigenvalues[0])


def _as_matrix(operator):
    if isinstance(operator, HermitianOperator):
        return operator.matrix
    return operator


def _residuals(matrix, vals, vecs):
    resid = matrix @ vecs - vecs * vals[np.newaxis, :]
    return np.linalg.norm(resid, axis=0)


def lowest_eigenpairs(hamiltonian, k: int, tol: float | None = None) -> Spectrum:
    """Lowest ``k`` eigenpairs of a Hermitian operator.

    Dense operators go through LAPACK; sparse ones through ARPACK
    (shift-free ``which='SA'``). Degenerate eigenspaces come back as an
    orthonormal basis. Non-convergence raises
    :class:`EigensolverConvergenceError` carrying the best residual.
    """
    matrix = _as_matrix(hamiltonian)
    dim = matrix.shape[0]
    if not 1 <= k <= dim:
        raise ValueError(f"k must be in [1, {dim}], got {k}")
    sparse = sp.issparse(matrix)
    if tol is None:
        tol = ITERATIVE_EIG_TOL if sparse else DENSE_EIG_TOL
    if tol <= 0:
        raise ValueError("tol must be positive")

    if sparse and k > dim - 2:
        # ARPACK needs k < dim-1; small problems just densify
        if dim <= 2**13:
            matrix = matrix.toarray()
            sparse = False
        else:
            raise ValueError(f"k={k} too close to dim={dim} for the iterative solver")

    if not sparse:
        if k <= dim // 4 and dim > 128:
            vals, vecs = scipy.linalg.eigh(matrix, subset_by_index=(0, k - 1))
        else:
            vals, vecs = scipy.linalg.eigh(matrix)
            vals, vecs = vals[:k], vecs[:, :k]
    else:
        try:
            vals, vecs = spla.eigsh(matrix, k=k, which="SA", tol=tol)
        except spla.ArpackNoConvergence as exc:
            best = None
            if exc.eigenvalues is not None and len(exc.eigenvalues):
                best = float(
                    _residuals(matrix, exc.eigenvalues, exc.eigenvectors).min()
                )
            raise EigensolverConvergenceError(
                f"ARPACK did not converge for k={k} (dim={dim})", best_residual=best
            ) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    resid = _residuals(matrix, vals, vecs)
    if np.any(resid > max(tol, 1e-13)):
        raise EigensolverConvergenceError(
            f"eigensolver residual {resid.max():.3e} exceeds tol {tol:.1e}",
            best_residual=float(resid.max()),
        )
    return Spectrum(eigenvalues=vals, eigenvectors=vecs, residuals=resid)


def ground_state(
    hamiltonian, degeneracy_tol: float = 1e-9, tol: float | None = None
) -> tuple[float, StateVector]:
    """Unique ground state of an operator.

    Raises :class:`DegenerateGroundError` when the first gap falls below
    ``degeneracy_tol`` (callers that can handle degeneracy should use
    :func:`lowest_eigenpairs` or :func:`ground_space_overlap` instead).
    """
    matrix = _as_matrix(hamiltonian)
    dim = matrix.shape[0]
    if dim == 1:
        return float(np.real(matrix[0, 0])), StateVector(np.ones(1), None)
    spec = lowest_eigenpairs(hamiltonian, k=2, tol=tol)
    if spec.gap() < degeneracy_tol:
        raise DegenerateGroundError(
            f"ground state degenerate within {degeneracy_tol:.1e} "
            f"(E1-E0 = {spec.gap():.3e})"
        )
    n = getattr(hamiltonian, "n_qubits", None)
    return float(spec.eigenvalues[0]), StateVector(spec.eigenvectors[:, 0], n)


def ground_space_overlap(
    hamiltonian, state: StateVector, degeneracy_tol: float = 1e-9
) -> float:
    """Squared overlap of ``state`` with the full (possibly degenerate)
    ground eigenspace of ``hamiltonian``."""
    matrix = _as_matrix(hamiltonian)
    amps = state.amplitudes
    if isinstance(hamiltonian, HermitianOperator) and hamiltonian.is_diagonal():
        diag = hamiltonian.diagonal()
        mask = diag <= diag.min() + degeneracy_tol
        return float(np.sum(np.abs(amps[mask]) ** 2))
    dim = matrix.shape[0]
    k = min(4, dim)
    while True:
        spec = lowest_eigenpairs(hamiltonian, k=k)
        inside = spec.eigenvalues <= spec.eigenvalues[0] + degeneracy_tol
        if not inside.all() or k == dim:
            basis = spec.eigenvectors[:, inside]
            break
        if k >= 64:
            raise EigensolverConvergenceError(
                "ground-space degeneracy exceeds 64; refusing to expand further"
            )
        k = min(2 * k, dim)
    coeffs = basis.conj().T @ amps
    return float(np.sum(np.abs(coeffs) ** 2))


def _exp_apply_hermitian(matrix, vec, scale):
    """Apply exp(scale * M) to vec for Hermitian M; scale may be complex.

    Small dense matrices use an exact eigenbasis exponential; anything
    larger goes through scipy's Krylov-free expm_multiply.
    """
    if not sp.issparse(matrix) and matrix.shape[0] <= SMALL_DENSE_DIM:
        vals, vecs = np.linalg.eigh(matrix)
        return vecs @ (np.exp(scale * vals) * (vecs.conj().T @ vec))
    return spla.expm_multiply(scale * matrix, vec)


def evolve_real(
    hamiltonian,
    psi0: StateVector,
    t_end: float,
    dt: float,
    t_start: float = 0.0,
    norm_tol: float = 1e-8,
) -> StateVector:
    """Integrate the Schroedinger equation from ``t_start`` to ``t_end``.

    ``hamiltonian`` is either a fixed operator or a callable t -> operator
    (or raw matrix). Each step applies the exact exponential of the
    Hamiltonian frozen at the interval midpoint, which is unitary by
    construction and second-order accurate in ``dt`` for time-dependent
    generators.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    duration = t_end - t_start
    if duration < 0:
        raise ValueError("t_end must be >= t_start")
    source = hamiltonian if callable(hamiltonian) else (lambda _t: hamiltonian)
    psi = psi0.amplitudes.astype(complex)
    n_steps = max(1, int(np.ceil(duration / dt))) if duration > 0 else 0
    t = t_start
    for step in range(n_steps):
        step_dt = min(dt, t_end - t)
        matrix = _as_matrix(source(t + 0.5 * step_dt))
        psi = _exp_apply_hermitian(matrix, psi, -1j * step_dt)
        t += step_dt
    drift = abs(np.linalg.norm(psi) - psi0.norm())
    if drift > norm_tol * max(1.0, abs(duration)):
        raise NormDriftError(
            f"norm drifted by {drift:.3e} over t={duration:g}; reduce dt"
        )
    return StateVector(psi, psi0.n_qubits)


@dataclass(frozen=True)
class ImaginaryTimeResult:
    """Outcome of imaginary-time relaxation.

    ``ground_overlap`` is the squared overlap of the *initial* state with
    the ground eigenspace (None when the check was skipped); ``warning`` is
    set when that overlap is numerically zero, in which case the returned
    state lives in the orthogonal complement of the ground space.
    """

    state: StateVector
    rayleigh: np.ndarray
    warning: bool = False
    ground_overlap: float | None = None


def evolve_imaginary(
    hamiltonian,
    psi0: StateVector,
    tau: float,
    dt: float,
    check_ground_overlap: bool = True,
) -> ImaginaryTimeResult:
    """Normalized exp(-H tau) |psi0> by repeated short imaginary-time steps.

    The Rayleigh quotient after each step is recorded; it is non-increasing
    up to roundoff. With ``check_ground_overlap`` the initial overlap with
    the ground eigenspace is measured and a warning flag raised when it is
    numerically zero.
    """
    if dt <= 0 or tau < 0:
        raise ValueError("tau must be >= 0 and dt > 0")
    matrix = _as_matrix(hamiltonian)
    overlap = None
    if check_ground_overlap:
        overlap = ground_space_overlap(hamiltonian, psi0)
    psi = psi0.amplitudes.astype(complex)
    n_steps = max(1, int(np.ceil(tau / dt))) if tau > 0 else 0

    small = not sp.issparse(matrix) and matrix.shape[0] <= 2**DENSE_CUTOFF
    propagator = scipy.linalg.expm(-dt * matrix) if small and n_steps > 1 else None

    quotients = []
    remaining = tau
    for _ in range(n_steps):
        step_dt = min(dt, remaining)
        if propagator is not None and step_dt == dt:
            psi = propagator @ psi
        else:
            psi = _exp_apply_hermitian(matrix, psi, -step_dt)
        nrm = np.linalg.norm(psi)
        if nrm < 1e-300:
            raise FloatingPointError("imaginary-time norm underflow; reduce dt")
        psi = psi / nrm
        quotients.append(float(np.real(np.vdot(psi, matrix @ psi))))
        remaining -= step_dt
    state = StateVector(psi, psi0.n_qubits).normalized()
    warning = overlap is not None and overlap < 1e-12
    return ImaginaryTimeResult(
        state=state,
        rayleigh=np.asarray(quotients),
        warning=warning,
        ground_overlap=overlap,
    )


def sigma_z_expectation(state: StateVector, qubit: int) -> float:
    """<sigma_z> on one qubit of a register state."""
    if state.n_qubits is None:
        raise ValueError("state has no qubit structure")
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    idx = np.arange(state.dim)
    signs = 1.0 - 2.0 * ((idx >> qubit) & 1)
    return float(np.sum(signs * state.probabilities()))
