"""Exact n-qubit Pauli algebra in binary-symplectic form.

A PauliOperator stores per-qubit X and Z exponents plus a quarter-turn
phase: the operator is  i**phase_quarters * (X^x0 Z^z0) (x) ... (x)
(X^x{n-1} Z^z{n-1}).  The letter Y corresponds to (x, z) = (1, 1) with an
extra factor of i (Y = i X Z), which the literal formatter folds into the
printed phase prefix.

Qubit 0 is the leftmost tensor factor and the most significant bit of a
basis index.  All values are immutable and all operations are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import gates
from .errors import DimensionMismatch, ValidationError, WidthOverflow

MAX_QUBITS = 12
DEFAULT_TOL = 1e-9

_LETTER_TO_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_TO_LETTER = {v: k for k, v in _LETTER_TO_BITS.items()}
_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PREFIX_PHASE = {"+": 0, "+i": 1, "-": 2, "-i": 3, "": 0, "i": 1}


@dataclass(frozen=True)
class PauliOperator:
    """i**phase_quarters times a tensor product of X^x Z^z factors."""

    n: int
    x_bits: tuple[int, ...]
    z_bits: tuple[int, ...]
    phase_quarters: int = 0

    def __post_init__(self):
        if len(self.x_bits) != self.n or len(self.z_bits) != self.n:
            raise DimensionMismatch("bit-vector lengths must equal qubit count")
        object.__setattr__(self, "phase_quarters", self.phase_quarters % 4)

    @property
    def is_identity(self) -> bool:
        return not any(self.x_bits) and not any(self.z_bits) and self.phase_quarters == 0

    def with_phase(self, phase_quarters: int) -> "PauliOperator":
        return PauliOperator(self.n, self.x_bits, self.z_bits, phase_quarters)

    def phase_free(self) -> "PauliOperator":
        return self.with_phase(0)


def identity(n: int) -> PauliOperator:
    return PauliOperator(n, (0,) * n, (0,) * n, 0)


def single(n: int, qubit: int, letter: str) -> PauliOperator:
    """Embed a single-qubit Pauli letter at the given position."""
    x, z = _LETTER_TO_BITS[letter.upper()]
    xs, zs = [0] * n, [0] * n
    xs[qubit], zs[qubit] = x, z
    phase = 1 if letter.upper() == "Y" else 0
    return PauliOperator(n, tuple(xs), tuple(zs), phase)


def pauli_mul(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    """Group product p·q with the accumulated quarter-turn phase.

    Per qubit, (X^a Z^b)(X^c Z^d) = (-1)^(b c) X^(a xor c) Z^(b xor d);
    squared exponents cancel exactly with no extra phase.
    """
    if p.n != q.n:
        raise DimensionMismatch(f"qubit counts differ: {p.n} != {q.n}")
    swaps = sum(pb & qa for pb, qa in zip(p.z_bits, q.x_bits))
    phase = p.phase_quarters + q.phase_quarters + 2 * swaps
    xs = tuple(a ^ b for a, b in zip(p.x_bits, q.x_bits))
    zs = tuple(a ^ b for a, b in zip(p.z_bits, q.z_bits))
    return PauliOperator(p.n, xs, zs, phase)


def inverse(p: PauliOperator) -> PauliOperator:
    """The unique Pauli with pauli_mul(p, inverse(p)) = identity."""
    bare = p.phase_free()
    square = pauli_mul(bare, bare)  # equals i^k * I with k in {0, 2}
    return bare.with_phase(-p.phase_quarters - square.phase_quarters)


def commutes(p: PauliOperator, q: PauliOperator) -> bool:
    """True iff pq = qp, via the symplectic inner product of bit-vectors."""
    if p.n != q.n:
        raise DimensionMismatch(f"qubit counts differ: {p.n} != {q.n}")
    inner = sum((px & qz) ^ (pz & qx) for px, pz, qx, qz
                in zip(p.x_bits, p.z_bits, q.x_bits, q.z_bits)) % 2
    return inner == 0


def projectively_equal(p: PauliOperator, q: PauliOperator) -> bool:
    """Equality ignoring the global quarter-turn phase."""
    return p.n == q.n and p.x_bits == q.x_bits and p.z_bits == q.z_bits


def pauli_to_matrix(p: PauliOperator) -> np.ndarray:
    """Exact dense matrix, qubit 0 as the leftmost tensor factor."""
    if p.n > MAX_QUBITS:
        raise WidthOverflow(f"{p.n} qubits exceeds the {MAX_QUBITS}-qubit limit")
    factors = []
    for x, z in zip(p.x_bits, p.z_bits):
        f = np.eye(2, dtype=complex)
        if z:
            f = gates.Z @ f
        if x:
            f = gates.X @ f  # X applied after Z: matrix X^x Z^z
        factors.append(f)
    m = reduce(np.kron, factors, np.array([[1.0 + 0j]]))
    return (1j ** p.phase_quarters) * m


def pauli_from_matrix(
    m: np.ndarray, tol: float = DEFAULT_TOL
) -> tuple[complex, PauliOperator, bool] | None:
    """Recognize m = c·P for a unit-modulus scalar c and phase-free Pauli P.

    Returns (c, P, strict) where strict is True iff c is one of {1, i, -1, -i}
    within tol, or None when m is not a scaled Pauli.  The phase of m is
    folded entirely into c; the returned P has phase_quarters == 0.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("matrix must be square")
    dim = m.shape[0]
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise ValidationError(f"dimension {dim} is not a power of two")

    # Column 0 of a scaled Pauli has its single nonzero at the row index given
    # by the X bit-vector; signs on the weight-one columns give the Z bits.
    col0 = m[:, 0]
    row = int(np.argmax(np.abs(col0)))
    c = complex(col0[row])
    if abs(abs(c) - 1.0) > tol:
        return None
    x_bits = tuple((row >> (n - 1 - qubit)) & 1 for qubit in range(n))

    z_bits = []
    for qubit in range(n):
        col = 1 << (n - 1 - qubit)
        ratio = m[row ^ col, col] / c
        if abs(ratio - 1.0) <= 0.5:
            z_bits.append(0)
        elif abs(ratio + 1.0) <= 0.5:
            z_bits.append(1)
        else:
            return None
    candidate = PauliOperator(n, x_bits, tuple(z_bits), 0)
    if np.max(np.abs(m - c * pauli_to_matrix(candidate))) > tol:
        return None
    strict = any(abs(c - 1j**k) <= tol for k in range(4))
    return c, candidate, strict


def format_literal(p: PauliOperator) -> str:
    """Render as e.g. '+XZI' or '-iYXI' (each Y absorbs one factor of i)."""
    letters = []
    y_count = 0
    for x, z in zip(p.x_bits, p.z_bits):
        letter = _BITS_TO_LETTER[(x, z)]
        if letter == "Y":
            y_count += 1
        letters.append(letter)
    prefix = _PHASE_PREFIX[(p.phase_quarters - y_count) % 4]
    return prefix + "".join(letters)


def parse_literal(text: str) -> PauliOperator:
    """Inverse of format_literal; accepts prefixes +, -, +i, -i (or none)."""
    body = text.strip()
    prefix = ""
    while body and body[0] in "+-i":
        prefix += body[0]
        body = body[1:]
    if prefix not in _PREFIX_PHASE:
        raise ValidationError(f"bad phase prefix in Pauli literal {text!r}")
    phase = _PREFIX_PHASE[prefix]
    xs, zs = [], []
    for ch in body:
        if ch.upper() not in _LETTER_TO_BITS:
            raise ValidationError(f"bad Pauli letter {ch!r} in {text!r}")
        x, z = _LETTER_TO_BITS[ch.upper()]
        xs.append(x)
        zs.append(z)
        if ch.upper() == "Y":
            phase += 1
    if not xs:
        raise ValidationError(f"empty Pauli literal {text!r}")
    return PauliOperator(len(xs), tuple(xs), tuple(zs), phase)
