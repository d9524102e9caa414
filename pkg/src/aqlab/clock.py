"""Compile small quantum circuits into history-state Hamiltonians on a
system (x) clock register, verify their spectral structure, and sample the
clock readout.

Layout convention: the joint space is system (x) clock, with joint index
``s * (L + 1) + l`` for system basis state ``s`` and clock value ``l``. The
clock is an explicit (L+1)-dimensional orthogonal register.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .adiabatic import InterpolationPath
from .operators import HermitianOperator, StateVector

__all__ = [
    "QuantumCircuit",
    "HistoryState",
    "ClockHamiltonian",
    "CircuitParseError",
    "NAMED_GATES",
    "apply_gate",
    "history_vector",
    "clock_hamiltonian",
    "reduced_toeplitz",
    "compile_to_path",
    "pad_identities",
    "measure_history",
    "grover_circuit",
    "random_circuit",
    "parse_circuit",
    "format_circuit",
    "load_circuit",
    "save_circuit",
]

UNITARITY_TOL = 1e-12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j]).astype(complex)
_T = np.diag([1, np.exp(1j * np.pi / 4)]).astype(complex)

#: named gates usable in circuit files; CNOT/CZ/SWAP act on (control, target)
#: in the package's little-endian index convention
NAMED_GATES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": _H,
    "S": _S,
    "T": _T,
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}


class CircuitParseError(ValueError):
    """Circuit file rejection with the offending line and token column."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Gate:
    matrix: np.ndarray
    targets: tuple[int, ...]
    name: str | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        targets = tuple(int(t) for t in self.targets)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError(f"gate matrix must be 2x2 or 4x4, got {m.shape}")
        expected = 1 if m.shape == (2, 2) else 2
        if len(targets) != expected:
            raise ValueError(f"{m.shape[0]}x{m.shape[0]} gate needs {expected} target(s)")
        if len(set(targets)) != len(targets):
            raise ValueError("gate targets must be distinct")
        defect = np.abs(m.conj().T @ m - np.eye(m.shape[0])).max()
        if defect > UNITARITY_TOL:
            raise ValueError(f"gate is not unitary (defect {defect:.3e})")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "targets", targets)


@dataclass(frozen=True)
class QuantumCircuit:
    """Ordered list of explicit 1- and 2-qubit unitary gates."""

    n_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        gates = tuple(
            g if isinstance(g, Gate) else Gate(matrix=g[0], targets=tuple(g[1:]))
            for g in self.gates
        )
        for g in gates:
            if max(g.targets) >= self.n_qubits:
                raise ValueError(
                    f"gate targets {g.targets} out of range for {self.n_qubits} qubits"
                )
        object.__setattr__(self, "gates", gates)

    @property
    def length(self) -> int:
        return len(self.gates)


def apply_gate(amplitudes: np.ndarray, gate: Gate, n_qubits: int) -> np.ndarray:
    """Apply a 1- or 2-qubit gate to a system state vector."""
    psi = np.asarray(amplitudes, dtype=complex).reshape([2] * n_qubits)
    k = len(gate.targets)
    # the gate matrix packs target bits little-endian (first target = least
    # significant bit) while ndarray axes are big-endian, so the tensor's
    # per-target axes run in reversed target order; axis of qubit q is n-1-q
    axes = tuple(n_qubits - 1 - q for q in reversed(gate.targets))
    tensor = gate.matrix.reshape([2] * (2 * k))
    psi = np.tensordot(tensor, psi, axes=(tuple(range(k, 2 * k)), axes))
    psi = np.moveaxis(psi, tuple(range(k)), axes)
    return psi.reshape(-1)


def expand_gate(gate: Gate, n_qubits: int) -> sp.csr_matrix:
    """Full 2^n x 2^n sparse realization of a gate."""
    dim = 2**n_qubits
    idx = np.arange(dim, dtype=np.int64)
    k = len(gate.targets)
    sub = np.zeros(dim, dtype=np.int64)
    for pos, q in enumerate(gate.targets):
        sub |= ((idx >> q) & 1) << pos
    cleared = idx
    for q in gate.targets:
        cleared = cleared & ~(1 << q)
    rows, cols, vals = [], [], []
    for new_sub in range(2**k):
        target_bits = cleared.copy()
        for pos, q in enumerate(gate.targets):
            target_bits |= ((new_sub >> pos) & 1) << q
        amp = gate.matrix[new_sub, sub]
        nz = np.abs(amp) > 0
        rows.append(target_bits[nz])
        cols.append(idx[nz])
        vals.append(amp[nz])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )


@dataclass(frozen=True)
class HistoryState:
    """Uniform-weight superposition of (intermediate state, clock value)
    pairs encoding an entire circuit execution."""

    n_qubits: int
    length: int
    amplitudes: np.ndarray
    intermediates: tuple[np.ndarray, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.size != 2**self.n_qubits * (self.length + 1):
            raise ValueError("history vector has the wrong dimension")
        if abs(np.linalg.norm(amps) - 1.0) > 1e-10:
            raise ValueError("history vector must be normalized")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def as_state(self) -> StateVector:
        return StateVector(self.amplitudes, None)

    def grid(self) -> np.ndarray:
        """(system_dim, L+1) view: column l holds alpha_l / sqrt(L+1)."""
        return self.amplitudes.reshape(2**self.n_qubits, self.length + 1)


def history_vector(circuit: QuantumCircuit, input_state: StateVector) -> HistoryState:
    """Run the circuit and assemble the uniform-clock history vector."""
    if input_state.dim != 2**circuit.n_qubits:
        raise ValueError("input state dimension mismatch")
    if abs(input_state.norm() - 1.0) > 1e-10:
        raise ValueError("input state must be normalized")
    alphas = [input_state.amplitudes.astype(complex)]
    for gate in circuit.gates:
        alphas.append(apply_gate(alphas[-1], gate, circuit.n_qubits))
    L = circuit.length
    grid = np.stack(alphas, axis=1) / np.sqrt(L + 1)
    return HistoryState(
        n_qubits=circuit.n_qubits,
        length=L,
        amplitudes=grid.reshape(-1),
        intermediates=tuple(alphas),
    )


@dataclass(frozen=True)
class ClockHamiltonian:
    """Positive-semidefinite propagation Hamiltonian whose zero modes are
    exactly the history vectors (one per input, unless the input penalty
    pins the all-zeros input)."""

    operator: HermitianOperator
    n_qubits: int
    length: int
    with_input_penalty: bool
    encoding: str = "explicit orthogonal clock register"

    @property
    def dim(self) -> int:
        return self.operator.dim


def _clock_unit(L: int, i: int, j: int) -> sp.csr_matrix:
    return sp.csr_matrix(([1.0], ([i], [j])), shape=(L + 1, L + 1), dtype=complex)


def _penalty_matrix(n_qubits: int, L: int) -> sp.csr_matrix:
    """sum_i |1><1|_i (x) |0><0|_clock, pinning the input to |0...0>."""
    dim = 2**n_qubits
    idx = np.arange(dim)
    ones = np.zeros(dim)
    for qubit in range(n_qubits):
        ones += (idx >> qubit) & 1
    system = sp.diags(ones).astype(complex)
    return sp.kron(system, _clock_unit(L, 0, 0), format="csr")


def clock_hamiltonian(circuit: QuantumCircuit, with_input_penalty: bool = False) -> ClockHamiltonian:
    """Half-sum of per-step verification terms on system (x) clock.

    Each gate l contributes
    I (x) |l><l| - U_l (x) |l+1><l| - U_l^dag (x) |l><l+1| + I (x) |l+1><l+1|,
    so every history vector is a zero mode; the optional input penalty
    collapses the zero space to the |0...0>-input history.
    """
    L = circuit.length
    if L < 1:
        raise ValueError("need at least one gate")
    n = circuit.n_qubits
    dim = 2**n * (L + 1)
    if dim > 2**22:
        raise ValueError(f"joint dimension {dim} beyond the construction budget")
    eye = sp.identity(2**n, dtype=complex, format="csr")
    acc = sp.csr_matrix((dim, dim), dtype=complex)
    for l, gate in enumerate(circuit.gates):
        u_full = expand_gate(gate, n)
        acc = acc + (
            sp.kron(eye, _clock_unit(L, l, l))
            - sp.kron(u_full, _clock_unit(L, l + 1, l))
            - sp.kron(u_full.conj().T, _clock_unit(L, l, l + 1))
            + sp.kron(eye, _clock_unit(L, l + 1, l + 1))
        )
    ham = 0.5 * acc.tocsr()
    if with_input_penalty:
        ham = ham + _penalty_matrix(n, L)
    matrix = ham.toarray() if dim <= 2**11 else ham
    op = HermitianOperator.from_matrix(matrix)
    return ClockHamiltonian(
        operator=op, n_qubits=n, length=L, with_input_penalty=with_input_penalty
    )


def reduced_toeplitz(circuit: QuantumCircuit, input_state: StateVector) -> np.ndarray:
    """Matrix of the (penalty-free) clock Hamiltonian in the orthonormal
    history basis gamma_l = alpha_l (x) |l>.

    Unitarity makes the gates cancel: the result is tridiagonal with
    interior diagonal 1, boundary diagonal 1/2, and off-diagonals -1/2,
    independent of the gate content.
    """
    hist = history_vector(circuit, input_state)
    L = circuit.length
    ham = clock_hamiltonian(circuit, with_input_penalty=False).operator.matrix
    basis = np.zeros((hist.dim, L + 1), dtype=complex)
    for l, alpha in enumerate(hist.intermediates):
        grid = np.zeros((2**circuit.n_qubits, L + 1), dtype=complex)
        grid[:, l] = alpha
        basis[:, l] = grid.reshape(-1)
    overlaps = basis.conj().T @ basis
    if np.abs(overlaps - np.eye(L + 1)).max() > 1e-10:
        raise AssertionError("history basis lost orthonormality")
    reduced = basis.conj().T @ (ham @ basis)
    if np.abs(np.imag(reduced)).max() > 1e-12:
        raise AssertionError("reduced matrix acquired imaginary parts")
    return np.real(reduced)


def compile_to_path(circuit: QuantumCircuit, tau: float = 1.0) -> InterpolationPath:
    """Linear adiabatic path whose endpoint is the penalized clock
    Hamiltonian.

    H0 keeps the input penalty and adds the bare clock Laplacian with the
    system decoupled, so its unique ground state |0...0> (x) (uniform
    clock) is easy to prepare; HT is the compiled circuit Hamiltonian with
    the penalty. This H0 is a documented choice, not forced by the
    construction.
    """
    L = circuit.length
    n = circuit.n_qubits
    kinetic = sp.csr_matrix((L + 1, L + 1), dtype=complex)
    for l in range(L):
        kinetic = kinetic + 0.5 * (
            _clock_unit(L, l, l)
            + _clock_unit(L, l + 1, l + 1)
            - _clock_unit(L, l, l + 1)
            - _clock_unit(L, l + 1, l)
        )
    eye = sp.identity(2**n, dtype=complex, format="csr")
    h0 = sp.kron(eye, kinetic, format="csr") + _penalty_matrix(n, L)
    dim = 2**n * (L + 1)
    h0_matrix = h0.toarray() if dim <= 2**11 else h0
    h0_op = HermitianOperator.from_matrix(h0_matrix)
    ht_op = clock_hamiltonian(circuit, with_input_penalty=True).operator
    return InterpolationPath(h0=h0_op, ht=ht_op, tau=tau)


def pad_identities(circuit: QuantumCircuit, m: int) -> QuantumCircuit:
    """Append m identity gates so the clock readout lands on (or past) the
    original output with probability (m+1)/(L+m+1)."""
    if m < 0:
        raise ValueError("m must be >= 0")
    extra = tuple(Gate(NAMED_GATES["I"], (0,), name="I") for _ in range(m))
    return QuantumCircuit(n_qubits=circuit.n_qubits, gates=circuit.gates + extra)


def measure_history(hist: HistoryState, rng=None) -> tuple[int, StateVector]:
    """Sample the clock register and return the collapsed system state."""
    rng = np.random.default_rng(rng)
    grid = hist.grid()
    clock_probs = np.sum(np.abs(grid) ** 2, axis=0)
    total = clock_probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError("history state is not normalized")
    l = int(rng.choice(hist.length + 1, p=clock_probs / total))
    column = grid[:, l]
    column = column / np.linalg.norm(column)
    return l, StateVector(column, hist.n_qubits)


def grover_circuit(marked: int = 2) -> QuantumCircuit:
    """Two-qubit search circuit: uniformize, phase-mark one element, then
    reflect all amplitudes about their average. One iteration suffices on
    two qubits."""
    if not 0 <= marked < 4:
        raise ValueError("marked element must be a 2-qubit basis index")
    oracle = np.eye(4, dtype=complex)
    oracle[marked, marked] = -1.0
    diffusion = 0.5 * np.ones((4, 4), dtype=complex) - np.eye(4, dtype=complex)
    return QuantumCircuit(
        n_qubits=2,
        gates=(
            Gate(NAMED_GATES["H"], (0,), name="H"),
            Gate(NAMED_GATES["H"], (1,), name="H"),
            Gate(oracle, (0, 1), name=None),
            Gate(diffusion, (0, 1), name=None),
        ),
    )


def random_circuit(n_qubits: int, length: int, rng=None) -> QuantumCircuit:
    """Haar-ish random circuit from QR-orthonormalized Gaussian matrices."""
    rng = np.random.default_rng(rng)
    gates = []
    for _ in range(length):
        two = n_qubits >= 2 and rng.random() < 0.5
        size = 4 if two else 2
        raw = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
        q, r = np.linalg.qr(raw)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        if two:
            targets = tuple(rng.choice(n_qubits, size=2, replace=False).tolist())
        else:
            targets = (int(rng.integers(n_qubits)),)
        gates.append(Gate(q, targets))
    return QuantumCircuit(n_qubits=n_qubits, gates=tuple(gates))


# ----------------------------------------------------------------------
# circuit file format: one gate per line, named or explicit matrix
# ----------------------------------------------------------------------


def _parse_complex(token: str, line_no: int, col: int) -> complex:
    try:
        return complex(token.replace("(", "").replace(")", ""))
    except ValueError:
        raise CircuitParseError(line_no, col, f"bad complex literal {token!r}") from None


def parse_circuit(text: str) -> QuantumCircuit:
    """Parse the one-gate-per-line circuit format.

    First directive must be ``qubits <n>``. Gate lines are either a named
    gate (``H 0``, ``CNOT 0 1``) or an explicit matrix:
    ``gate2 <target> <4 row-major complex entries>`` /
    ``gate4 <t1> <t2> <16 entries>``. ``#`` starts a comment.
    """
    n_qubits = None
    gates = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if n_qubits is None:
            if head != "qubits":
                raise CircuitParseError(line_no, 1, "expected 'qubits <n>' first")
            if len(tokens) != 2 or not tokens[1].isdigit() or int(tokens[1]) < 1:
                raise CircuitParseError(line_no, 2, "qubit count must be a positive integer")
            n_qubits = int(tokens[1])
            continue
        if head in NAMED_GATES:
            matrix = NAMED_GATES[head]
            want = 1 if matrix.shape == (2, 2) else 2
            if len(tokens) != 1 + want:
                raise CircuitParseError(line_no, 2, f"{head} takes {want} target(s)")
            targets = _parse_targets(tokens[1:], n_qubits, line_no)
            gates.append(Gate(matrix, targets, name=head))
        elif head in ("gate2", "gate4"):
            size = 2 if head == "gate2" else 4
            n_targets = 1 if size == 2 else 2
            expected = 1 + n_targets + size * size
            if len(tokens) != expected:
                raise CircuitParseError(
                    line_no, len(tokens), f"{head} needs {n_targets} target(s) and {size * size} entries"
                )
            targets = _parse_targets(tokens[1 : 1 + n_targets], n_qubits, line_no)
            entries = [
                _parse_complex(tok, line_no, 1 + n_targets + i + 1)
                for i, tok in enumerate(tokens[1 + n_targets :])
            ]
            matrix = np.array(entries, dtype=complex).reshape(size, size)
            try:
                gates.append(Gate(matrix, targets))
            except ValueError as exc:
                raise CircuitParseError(line_no, 1, str(exc)) from None
        else:
            raise CircuitParseError(line_no, 1, f"unknown gate {head!r}")
    if n_qubits is None:
        raise CircuitParseError(1, 1, "empty circuit file")
    return QuantumCircuit(n_qubits=n_qubits, gates=tuple(gates))


def _parse_targets(tokens, n_qubits, line_no):
    targets = []
    for col, tok in enumerate(tokens, start=2):
        if not tok.lstrip("-").isdigit():
            raise CircuitParseError(line_no, col, f"bad target index {tok!r}")
        t = int(tok)
        if not 0 <= t < n_qubits:
            raise CircuitParseError(line_no, col, f"target {t} out of range")
        targets.append(t)
    return tuple(targets)


def format_circuit(circuit: QuantumCircuit) -> str:
    """Deterministic textual form accepted back by :func:`parse_circuit`."""
    lines = [f"qubits {circuit.n_qubits}"]
    for gate in circuit.gates:
        targets = " ".join(str(t) for t in gate.targets)
        if gate.name and gate.name in NAMED_GATES:
            lines.append(f"{gate.name} {targets}")
        else:
            head = "gate2" if gate.matrix.shape == (2, 2) else "gate4"
            entries = " ".join(repr(complex(x)) for x in gate.matrix.reshape(-1))
            lines.append(f"{head} {targets} {entries}")
    return "\n".join(lines) + "\n"


def load_circuit(path) -> QuantumCircuit:
    with open(path) as fh:
        return parse_circuit(fh.read())


def save_circuit(circuit: QuantumCircuit, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_circuit(circuit))
