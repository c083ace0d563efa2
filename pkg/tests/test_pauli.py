"""Pauli algebra: group law, commutation, matrix round-trips, literals."""

import itertools

import numpy as np
import pytest

from telegate import gates
from telegate.errors import DimensionMismatch
from telegate.pauli import (PauliOperator, commutes, format_literal, identity,
                            inverse, parse_literal, pauli_from_matrix,
                            pauli_mul, pauli_to_matrix, projectively_equal,
                            single)


def all_phase_free(n):
    for bits in itertools.product((0, 1), repeat=2 * n):
        yield PauliOperator(n, bits[:n], bits[n:], 0)


def random_pauli(rng, n):
    return PauliOperator(
        n,
        tuple(int(b) for b in rng.integers(0, 2, n)),
        tuple(int(b) for b in rng.integers(0, 2, n)),
        int(rng.integers(0, 4)),
    )


def test_mul_identity_case():
    x = single(1, 0, "X")
    assert pauli_mul(x, x).is_identity


def test_mul_x_z_gives_minus_i_y():
    product = pauli_mul(single(1, 0, "X"), single(1, 0, "Z"))
    assert np.allclose(pauli_to_matrix(product), -1j * gates.Y)
    assert format_literal(product) == "-iY"


def test_mul_disjoint_supports():
    p = parse_literal("+XI")
    q = parse_literal("+IZ")
    assert format_literal(pauli_mul(p, q)) == "+XZ"


def test_mul_width_mismatch():
    with pytest.raises(DimensionMismatch):
        pauli_mul(single(1, 0, "X"), single(2, 0, "X"))


def test_mul_matches_dense_product(rng):
    for _ in range(100):
        n = int(rng.integers(1, 4))
        p, q = random_pauli(rng, n), random_pauli(rng, n)
        got = pauli_to_matrix(pauli_mul(p, q))
        want = pauli_to_matrix(p) @ pauli_to_matrix(q)
        assert np.max(np.abs(got - want)) < 1e-12


def test_associativity_and_inverse(rng):
    for _ in range(200):
        n = int(rng.integers(1, 7))
        p, q, r = (random_pauli(rng, n) for _ in range(3))
        assert pauli_mul(pauli_mul(p, q), r) == pauli_mul(p, pauli_mul(q, r))
        assert pauli_mul(p, inverse(p)).is_identity


def test_square_is_plus_or_minus_identity(rng):
    for _ in range(100):
        p = random_pauli(rng, int(rng.integers(1, 5)))
        square = pauli_mul(p, p)
        assert square.phase_quarters % 2 == 0
        assert not any(square.x_bits) and not any(square.z_bits)


def test_commutes_examples():
    assert not commutes(single(1, 0, "X"), single(1, 0, "Z"))
    assert commutes(parse_literal("+XX"), parse_literal("+ZZ"))
    assert commutes(identity(2), parse_literal("+XY"))


def test_commutes_matches_matrix_commutator_exhaustive():
    # all phase-free pairs up to three qubits against the dense commutator
    for n in (1, 2, 3):
        paulis = list(all_phase_free(n))
        mats = [pauli_to_matrix(p) for p in paulis]
        for i, p in enumerate(paulis):
            for j, q in enumerate(paulis):
                comm = np.max(np.abs(mats[i] @ mats[j] - mats[j] @ mats[i]))
                assert commutes(p, q) == (comm < 1e-10)


def test_to_matrix_examples():
    assert np.allclose(pauli_to_matrix(identity(1)), np.eye(2))
    assert np.allclose(pauli_to_matrix(single(1, 0, "Z")), np.diag([1, -1]))
    minus_i_y = PauliOperator(1, (1,), (1,), 0)  # XZ = -iY
    assert np.allclose(pauli_to_matrix(minus_i_y), [[0, -1], [1, 0]])
    assert format_literal(minus_i_y) == "-iY"


def test_from_matrix_y():
    c, bare, strict = pauli_from_matrix(gates.Y)
    assert abs(c - 1j) < 1e-12
    assert bare == PauliOperator(1, (1,), (1,), 0)
    assert strict


def test_from_matrix_rejects_hadamard():
    assert pauli_from_matrix(gates.H) is None


def test_from_matrix_scaled_x():
    # oracle: fit the scalar entrywise against the known X pattern
    scalar = np.exp(1j * np.pi / 4)
    m = scalar * gates.X
    fit = m[1, 0]  # X has a 1 there, so the entry is the scalar itself
    assert abs(fit - scalar) < 1e-15
    c, bare, strict = pauli_from_matrix(m)
    assert abs(c - fit) < 1e-12
    assert bare == PauliOperator(1, (1,), (0,), 0)
    assert not strict  # e^{i pi/4} is not one of {1, i, -1, -i}


def test_matrix_round_trip_exhaustive():
    for n in (1, 2, 3):
        for p in all_phase_free(n):
            c, bare, strict = pauli_from_matrix(pauli_to_matrix(p))
            assert strict and abs(c - 1.0) < 1e-12
            assert bare == p


def test_projective_equality():
    p = single(1, 0, "X")
    assert projectively_equal(p, p.with_phase(2))
    assert not projectively_equal(p, single(1, 0, "Z"))


def test_literal_round_trip():
    for text in ("+XZI", "-iYXI", "+iYY", "-Z", "+IIX"):
        assert format_literal(parse_literal(text)) == text


def test_literal_matches_matrix(rng):
    for _ in range(50):
        p = random_pauli(rng, int(rng.integers(1, 4)))
        again = parse_literal(format_literal(p))
        assert np.max(np.abs(pauli_to_matrix(again) - pauli_to_matrix(p))) < 1e-12
