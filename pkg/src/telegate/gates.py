"""Named gate library: canonical matrices under the shared basis convention.

Qubit 0 is the leftmost tensor factor and the most significant bit of a
basis index, so a basis state |x_0 x_1 ... x_{n-1}> has index
sum(x_q * 2**(n-1-q)).  Multi-qubit gates list control qubits first; the
first listed target is the most significant bit of the gate's own index
space.
"""
from __future__ import annotations

import numpy as np

from .errors import ClassificationError

SQRT2_INV = 1.0 / np.sqrt(2.0)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT2_INV
S = np.array([[1, 0], [0, 1j]], dtype=complex)
T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)
# Q = S†·H·S, the Clifford that enters the controlled-Hadamard decomposition.
Q = S.conj().T @ H @ S


def controlled(matrix: np.ndarray, n_controls: int = 1) -> np.ndarray:
    """Return the gate applying `matrix` when all control qubits are |1>.

    Controls occupy the most significant qubit positions.
    """
    dim = matrix.shape[0]
    for _ in range(n_controls):
        full = np.eye(2 * dim, dtype=complex)
        full[dim:, dim:] = matrix
        matrix, dim = full, 2 * dim
    return matrix


def kron(*factors: np.ndarray) -> np.ndarray:
    """Tensor product with qubit 0 as the leftmost factor."""
    out = np.array([[1.0 + 0j]])
    for f in factors:
        out = np.kron(out, f)
    return out


def embed(matrix: np.ndarray, targets, n: int) -> np.ndarray:
    """Extend a k-qubit gate to n qubits, acting on the listed targets."""
    targets = tuple(targets)
    k = len(targets)
    dim = 2**n
    tensor = np.eye(dim, dtype=complex).reshape([2] * n + [dim])
    moved = np.moveaxis(tensor, targets, range(k))
    rest = moved.shape[k:]
    flat = np.asarray(matrix, dtype=complex) @ moved.reshape(2**k, -1)
    moved = flat.reshape([2] * k + list(rest))
    return np.moveaxis(moved, range(k), targets).reshape(dim, dim)


CNOT = controlled(X)
CZ = controlled(Z)
CS = controlled(S)
CH = controlled(H)
TOFFOLI = controlled(X, n_controls=2)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)

_GATES: dict[str, np.ndarray] = {
    "I": I2,
    "X": X,
    "Y": Y,
    "Z": Z,
    "H": H,
    "S": S,
    "S†": S.conj().T,
    "T": T,
    "T†": T.conj().T,
    "Q": Q,
    "Q†": Q.conj().T,
    "CNOT": CNOT,
    "CZ": CZ,
    "SWAP": SWAP,
    "CS": CS,
    "CS†": CS.conj().T,
    "CH": CH,
    "TOFFOLI": TOFFOLI,
}

# ASCII-friendly spellings accepted on input; canonical names are the keys above.
_ALIASES = {
    "SDG": "S†",
    "TDG": "T†",
    "QDG": "Q†",
    "CSDG": "CS†",
    "CX": "CNOT",
    "CCX": "TOFFOLI",
    "CCNOT": "TOFFOLI",
}

GATE_NAMES = tuple(_GATES)

# The subset whose conjugation action maps Pauli operators to Pauli operators.
CLIFFORD_NAMES = frozenset(
    {"I", "X", "Y", "Z", "H", "S", "S†", "Q", "Q†", "CNOT", "CZ", "SWAP"}
)


def canonical_name(name: str) -> str:
    """Resolve aliases and case; raise for unknown names."""
    if name in _GATES:
        return name
    upper = name.upper()
    if upper in _GATES:
        return upper
    if upper in _ALIASES:
        return _ALIASES[upper]
    raise ClassificationError(f"unknown gate name {name!r}")


def matrix_of(name: str) -> np.ndarray:
    """Matrix of a named gate (copy-safe: callers must not mutate)."""
    return _GATES[canonical_name(name)]


def arity_of(name: str) -> int:
    return int(round(np.log2(matrix_of(name).shape[0])))


def is_clifford_name(name: str) -> bool:
    return canonical_name(name) in CLIFFORD_NAMES
