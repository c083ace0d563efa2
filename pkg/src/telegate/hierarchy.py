"""Numeric classification of a unitary's minimal level in the gate hierarchy.

Level 1 is the Pauli group (recognized projectively: any unit-modulus
scalar is ignored), level 2 the Clifford group, and level k membership is
tested recursively by conjugating the 2n Pauli generators and classifying
every image at level k-1.  Recognition tolerances loosen one decade below
the top level because conjugation compounds rounding.

Classification is projective throughout: multiplying the input by a global
phase never changes the verdict.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from . import clifford, pauli
from .errors import ValidationError, WidthOverflow
from .pauli import MAX_QUBITS

DEFAULT_K_MAX = 6
DEFAULT_TOL = 1e-9
DEEP_TOL = 1e-8


@dataclass(frozen=True)
class HierarchyVerdict:
    """Outcome of a bounded minimal-level search.

    level is None when membership could not be certified for any k <= k_max
    (a normal result, not an error); strict records that membership one
    level down was actually refuted.
    """

    level: int | None
    k_max: int
    diagonal: bool
    strict: bool

    @property
    def exceeded(self) -> bool:
        return self.level is None

    def describe(self) -> str:
        if self.exceeded:
            return f"exceeds k_max {self.k_max}"
        parts = [f"level {self.level}"]
        if self.diagonal:
            parts.append("diagonal")
        if self.strict:
            parts.append("strict")
        return ", ".join(parts)


class _MemoTable:
    """Atomic get-or-insert map from (fingerprint, k) to membership booleans."""

    def __init__(self):
        self._data: dict = {}
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            self._data.setdefault(key, value)
            return self._data[key]


def _fingerprint(m: np.ndarray) -> bytes:
    """Canonical phase-fixed, rounded encoding of a matrix.

    The phase anchor is the first entry within 1e-9 of the peak magnitude,
    so rounding noise cannot flip which entry gets picked."""
    flat = m.ravel()
    peak = float(np.max(np.abs(flat)))
    idx = int(np.argmax(np.abs(flat) > peak - 1e-9))
    anchor = flat[idx]
    canon = m * (abs(anchor) / anchor)
    rounded = np.round(canon, 6) + 0.0  # normalize -0.0
    return rounded.tobytes()


def is_diagonal_matrix(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    off = m - np.diag(np.diag(m))
    return bool(np.max(np.abs(off)) <= tol)


def _check_input(u: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    u = np.asarray(u, dtype=complex)
    if not clifford.is_unitary(u, tol=max(tol * 10, 1e-8)):
        raise ValidationError("input matrix is not unitary within tolerance")
    dim = u.shape[0]
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise ValidationError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise WidthOverflow(f"{n} qubits exceeds the {MAX_QUBITS}-qubit limit")
    return u, n


def _member(u: np.ndarray, k: int, tol_top: float, depth: int, memo: _MemoTable) -> bool:
    """Is u in level k?  depth tracks recursion for the tolerance schedule."""
    tol = tol_top if depth <= 1 else DEEP_TOL
    if k <= 1:
        return pauli.pauli_from_matrix(u, tol=tol) is not None
    key = (_fingerprint(u), k)
    cached = memo.get(key)
    if cached is not None:
        return cached
    if k == 2:
        result = clifford.clifford_from_matrix(u, tol=tol) is not None
        return memo.put(key, result)
    n = int(round(np.log2(u.shape[0])))
    u_dag = u.conj().T
    result = True
    for qubit in range(n):
        for letter in ("X", "Z"):
            gen = pauli.pauli_to_matrix(pauli.single(n, qubit, letter))
            image = u @ gen @ u_dag
            if not _member(image, k - 1, tol_top, depth + 1, memo):
                result = False
                break
        if not result:
            break
    return memo.put(key, result)


def hierarchy_level(
    u: np.ndarray, k_max: int = DEFAULT_K_MAX, tol: float = DEFAULT_TOL
) -> HierarchyVerdict:
    """Smallest k <= k_max containing u, searched from k = 1 upward."""
    if k_max < 1:
        raise ValidationError("k_max must be at least 1")
    u, _ = _check_input(u, tol)
    diagonal = is_diagonal_matrix(u, tol=tol)
    memo = _MemoTable()
    refuted_below = False
    for k in range(1, k_max + 1):
        if _member(u, k, tol, 1, memo):
            return HierarchyVerdict(level=k, k_max=k_max, diagonal=diagonal,
                                    strict=refuted_below or k == 1)
        refuted_below = True
    return HierarchyVerdict(level=None, k_max=k_max, diagonal=diagonal, strict=False)


def is_diagonal_F(
    u: np.ndarray, k_max: int = DEFAULT_K_MAX, tol: float = DEFAULT_TOL
) -> HierarchyVerdict:
    """Level verdict with the diagonal flag gating membership in the
    diagonal subset: the gate belongs iff level is certified and every
    off-diagonal entry is below tol."""
    return hierarchy_level(u, k_max=k_max, tol=tol)
