"""Level classification: pinned gate levels, an independent recursive
oracle, monotonicity, closure, and the diagonal-correction structure."""

import numpy as np
import pytest

from telegate import gates
from telegate.errors import ValidationError
from telegate.hierarchy import hierarchy_level, is_diagonal_F, is_diagonal_matrix
from telegate.pauli import pauli_to_matrix, single


# --- independent oracle -----------------------------------------------------
# Level-1 recognition here is structural (generalized permutation matrix with
# a single unit-modulus coefficient), deliberately not the bit-vector
# extraction the implementation uses.

def _oracle_is_scaled_pauli(m, tol=1e-8):
    # c * X^a Z^b has one unit entry per column at row col^a, whose sign
    # relative to column 0 is (-1)^(b.col): a character, multiplicative
    # under XOR of column indices.
    dim = m.shape[0]
    shift = None
    signs = np.zeros(dim)
    for col in range(dim):
        rows = np.nonzero(np.abs(m[:, col]) > tol)[0]
        if len(rows) != 1:
            return False
        r = int(rows[0])
        if abs(abs(m[r, col]) - 1.0) > tol:
            return False
        if shift is None:
            shift = r ^ col
        elif (r ^ col) != shift:
            return False
        ratio = m[r, col] / m[shift, 0]
        if abs(ratio - 1) <= tol:
            signs[col] = 1
        elif abs(ratio + 1) <= tol:
            signs[col] = -1
        else:
            return False
    n = int(round(np.log2(dim)))
    generators = [1 << j for j in range(n)]
    for col in range(dim):
        product = 1.0
        for g in generators:
            if col & g:
                product *= signs[g]
        if signs[col] != product:
            return False
    return True


def _oracle_level(m, k_max=6):
    def member(u, k):
        if k == 1:
            return _oracle_is_scaled_pauli(u)
        n = int(round(np.log2(u.shape[0])))
        for q in range(n):
            for letter in ("X", "Z"):
                gen = pauli_to_matrix(single(n, q, letter))
                if not member(u @ gen @ u.conj().T, k - 1):
                    return False
        return True

    for k in range(1, k_max + 1):
        if member(m, k):
            return k
    return None


PINNED = [
    ("X", 1), ("Y", 1), ("Z", 1),
    ("H", 2), ("S", 2), ("CNOT", 2), ("CZ", 2), ("SWAP", 2),
    ("T", 3), ("CS", 3), ("TOFFOLI", 3), ("CH", 3),
]


@pytest.mark.parametrize("name,level", PINNED)
def test_pinned_levels(name, level):
    verdict = hierarchy_level(gates.matrix_of(name), k_max=6)
    assert verdict.level == level
    assert verdict.strict


def test_t_is_diagonal_level_3():
    v = hierarchy_level(gates.T)
    assert v.level == 3 and v.diagonal


def test_toffoli_not_diagonal():
    v = hierarchy_level(gates.TOFFOLI)
    assert v.level == 3 and not v.diagonal


def test_rotation_ladder_matches_2pi_formula():
    for k in range(2, 6):
        m = np.diag([1.0, np.exp(2j * np.pi / 2**k)])
        assert hierarchy_level(m, k_max=6).level == k


def test_pi_over_8_rotation_level_4_against_oracle():
    m = np.diag([1.0, np.exp(1j * np.pi / 8)])  # equals e^{i 2pi / 2^4}
    assert _oracle_level(m) == 4
    verdict = hierarchy_level(m, k_max=6)
    assert verdict.level == 4 and verdict.diagonal


def test_oracle_agrees_on_library():
    for name, level in PINNED:
        assert _oracle_level(gates.matrix_of(name)) == level


def test_doubly_controlled_s_level_4():
    ccs = gates.controlled(gates.S, n_controls=2)
    assert _oracle_level(ccs) == 4
    assert hierarchy_level(ccs, k_max=6).level == 4


def test_diagonal_subset_flags():
    cs = is_diagonal_F(gates.CS)
    assert cs.level == 3 and cs.diagonal
    ch = is_diagonal_F(gates.CH)
    assert ch.level == 3 and not ch.diagonal
    z = is_diagonal_F(gates.Z)
    assert z.level == 1 and z.diagonal


def test_exceeds_k_max_is_a_normal_result():
    v = hierarchy_level(gates.TOFFOLI, k_max=2)
    assert v.exceeded and v.level is None and not v.strict
    assert "exceeds k_max 2" in v.describe()


def test_monotonicity():
    for name, level in PINNED:
        again = hierarchy_level(gates.matrix_of(name), k_max=level + 1)
        assert again.level == level


def test_global_phase_never_changes_verdict(rng):
    for name, level in PINNED:
        phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
        assert hierarchy_level(phase * gates.matrix_of(name)).level == level


def test_closure_under_clifford_multiplication():
    cliffords = {
        1: [gates.matrix_of(n) for n in ("I", "X", "H", "S", "Q")],
        2: [gates.matrix_of(n) for n in ("CNOT", "CZ", "SWAP")],
        3: [gates.embed(gates.CNOT, (0, 1), 3), gates.embed(gates.CZ, (1, 2), 3),
            gates.embed(gates.H, (2,), 3)],
    }
    for name in ("T", "CS", "TOFFOLI"):
        u = gates.matrix_of(name)
        n = int(round(np.log2(u.shape[0])))
        for v in cliffords[n]:
            verdict = hierarchy_level(u @ v, k_max=6)
            assert verdict.level is not None and verdict.level <= 3, name


def test_diagonal_correction_structure():
    # every diagonal library gate U at level k factors U X_i U+ = D~ X_i
    # with D~ diagonal one level down or lower
    for name in ("Z", "S", "S†", "T", "T†", "CZ", "CS", "CS†"):
        u = gates.matrix_of(name)
        k = hierarchy_level(u).level
        n = int(round(np.log2(u.shape[0])))
        for i in range(n):
            x_i = pauli_to_matrix(single(n, i, "X"))
            residue = u @ x_i @ u.conj().T @ x_i
            assert is_diagonal_matrix(residue, tol=1e-10)
            r_level = hierarchy_level(residue).level
            assert r_level is not None and r_level <= max(k - 1, 1), (name, i)


def test_non_unitary_rejected():
    with pytest.raises(ValidationError):
        hierarchy_level(np.array([[1, 0], [0, 2]], dtype=complex))
