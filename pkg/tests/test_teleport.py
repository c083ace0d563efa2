"""Teleportation primitives, plan search, and gate synthesis."""

import itertools

import numpy as np
import pytest

from telegate import gates
from telegate.circuit import GateOp
from telegate.clifford import clifford_from_matrix, identity_tableau, tableau_from_gate
from telegate.errors import SynthesisRefusal
from telegate.simulator import (equivalent_up_to_phase, extract_register_state,
                                random_state, run_all_branches,
                                verify_gate_equivalence, zero_state)
from telegate.teleport import (TeleportPlan, build_generalized_teleport,
                               build_one_bit_teleport, plan_commutes,
                               plan_teleportation, synthesize_sandwiched,
                               synthesize_teleported_gate)

SQ2 = 1 / np.sqrt(2)


def _elide_identities(circuit):
    kept = []
    for op in circuit.ops:
        if isinstance(op, GateOp):
            m = op.resolved_matrix()
            if np.max(np.abs(m - np.eye(m.shape[0]))) < 1e-12:
                continue
        kept.append(op)
    return tuple(kept)


# --- one-bit primitives ------------------------------------------------------

def test_z_teleport_structure_and_identity():
    c = build_one_bit_teleport("Z", 1)
    names = [op.name for op in c.ops if isinstance(op, GateOp)]
    assert names == ["CNOT", "H"]  # coupling, then the basis change on data
    report = verify_gate_equivalence(c, np.eye(2, dtype=complex), [0], [1])
    assert report.passed


def test_x_teleport_identity():
    report = verify_gate_equivalence(build_one_bit_teleport("X", 1),
                                     np.eye(2, dtype=complex), [0], [1])
    assert report.passed


def test_two_qubit_x_teleport_has_four_branches():
    c = build_one_bit_teleport("X", 2)
    report = verify_gate_equivalence(c, np.eye(4, dtype=complex), [0, 1], [2, 3])
    assert report.passed and len(report.branch_weights) == 4
    for w in report.branch_weights.values():
        assert abs(w - 0.25) < 1e-12


def test_per_measurement_probability_is_half(rng):
    for kind, n in (("X", 1), ("Z", 1), ("X", 2), ("Z", 2)):
        c = build_one_bit_teleport(kind, n)
        psi = random_state(n, rng)
        for b in run_all_branches(c, psi):
            assert abs(b.probability - 0.5**n) < 1e-10


# --- generalized frame -------------------------------------------------------

def test_generalized_identity_reduces_to_x_teleport():
    gen = build_generalized_teleport(identity_tableau(1))
    assert _elide_identities(gen) == build_one_bit_teleport("X", 1).ops


def test_generalized_hadamard_matches_z_teleport_channel(rng):
    gen = build_generalized_teleport(tableau_from_gate("H"))
    z = build_one_bit_teleport("Z", 1)
    for _ in range(5):
        psi = random_state(1, rng)
        left = run_all_branches(gen, psi)
        right = run_all_branches(z, psi)
        assert len(left) == len(right) == 2
        for lb, rb in zip(left, right):
            a = extract_register_state(lb, (1,))
            b = extract_register_state(rb, (1,))
            ok, _ = equivalent_up_to_phase(a, b)
            assert ok


def test_generalized_s_frame_is_identity_channel():
    gen = build_generalized_teleport(tableau_from_gate("S"))
    report = verify_gate_equivalence(gen, np.eye(2, dtype=complex), [0], [1])
    assert report.passed and len(report.branch_weights) == 2


# --- plan search -------------------------------------------------------------

def test_plan_for_t_is_x():
    assert plan_teleportation(gates.T).describe() == "X"


def test_plan_for_toffoli_is_xxz():
    assert plan_teleportation(gates.TOFFOLI).describe() == "XXZ"


def test_no_plan_for_controlled_hadamard():
    assert plan_teleportation(gates.CH) is None


def test_plan_prefers_all_x():
    # Z commutes with every coupling; the tie-break must pick all-X
    assert plan_teleportation(gates.Z).describe() == "X"
    assert plan_teleportation(gates.CZ).describe() == "XX"


def _oracle_commutes(u, kinds):
    """Independent coupling-layer commutation: build each CNOT as a basis
    permutation instead of the embedding helper."""
    n = len(kinds)
    dim = 2 ** (2 * n)
    e = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        data = [(idx >> (2 * n - 1 - q)) & 1 for q in range(n)]
        anc = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        for i, kind in enumerate(kinds):
            if kind == "X":
                data[i] ^= anc[i]
            else:
                anc[i] ^= data[i]
        out = 0
        for q in range(n):
            out |= data[q] << (2 * n - 1 - q)
            out |= anc[q] << (n - 1 - q)
        e[out, idx] = 1.0
    u_ext = np.kron(np.eye(2**n), u)  # u on the ancilla block (low bits)
    return np.max(np.abs(u_ext @ e - e @ u_ext)) < 1e-9


@pytest.mark.parametrize("name", ["T", "CS", "CH", "TOFFOLI"])
def test_commutation_soundness_exhaustive(name):
    u = gates.matrix_of(name)
    n = int(round(np.log2(u.shape[0])))
    for kinds in itertools.product("XZ", repeat=n):
        assert plan_commutes(u, tuple(kinds)) == _oracle_commutes(u, kinds), kinds


# --- synthesis ---------------------------------------------------------------

def test_synthesize_t():
    res = synthesize_teleported_gate(gates.T)
    want = np.array([1.0, np.exp(1j * np.pi / 4)]) * SQ2
    assert np.max(np.abs(res.ancilla_state.amplitudes - want)) < 1e-12
    corr = res.corrections[0]
    sx = gates.S @ gates.X
    assert corr.klass == "clifford"
    assert np.max(np.abs(corr.matrix - np.exp(-1j * np.pi / 4) * sx)) < 1e-12
    assert np.max(np.abs(corr.canonical - sx)) < 1e-12
    assert abs(corr.phase - np.exp(-1j * np.pi / 4)) < 1e-12
    assert res.report.passed


def test_synthesize_controlled_phase():
    res = synthesize_teleported_gate(gates.CS)
    want = np.array([1, 1, 1, 1j], dtype=complex) / 2
    assert np.max(np.abs(res.ancilla_state.amplitudes - want)) < 1e-12
    refs = (gates.kron(gates.X, gates.S) @ gates.CZ,
            gates.kron(gates.S, gates.X) @ gates.CZ)
    for corr, ref in zip(res.corrections, refs):
        fit = np.trace(ref.conj().T @ corr.matrix) / 4
        assert abs(abs(fit) - 1.0) < 1e-10
        assert np.max(np.abs(corr.matrix - fit * ref)) < 1e-10
        assert corr.klass == "clifford"
    assert res.report.passed and len(res.report.branch_weights) == 4


def test_synthesize_toffoli():
    res = synthesize_teleported_gate(gates.TOFFOLI)
    assert res.plan.describe() == "XXZ"
    want = np.zeros(8, dtype=complex)
    want[[0, 2, 4, 7]] = 0.5
    assert np.max(np.abs(res.ancilla_state.amplitudes - want)) < 1e-12
    refs = (gates.embed(gates.X, (0,), 3) @ gates.embed(gates.CNOT, (1, 2), 3),
            gates.embed(gates.X, (1,), 3) @ gates.embed(gates.CNOT, (0, 2), 3),
            gates.embed(gates.Z, (2,), 3) @ gates.embed(gates.CZ, (0, 1), 3))
    for corr, ref in zip(res.corrections, refs):
        fit = np.trace(ref.conj().T @ corr.matrix) / 8
        assert abs(abs(fit) - 1.0) < 1e-10
        assert np.max(np.abs(corr.matrix - fit * ref)) < 1e-10
    assert res.report.passed and len(res.report.branch_weights) == 8


def test_synthesis_rejects_non_commuting_plan():
    with pytest.raises(SynthesisRefusal):
        synthesize_teleported_gate(gates.TOFFOLI, TeleportPlan(("Z", "X", "X")))


def test_synthesis_refuses_gate_without_plan():
    with pytest.raises(SynthesisRefusal):
        synthesize_teleported_gate(gates.CH)


def test_ancilla_dual_route_agreement():
    # matrix action vs gate-by-gate simulation, compared inside synthesis;
    # re-check here externally for the three standard gates
    for name, a_ops in (("T", ("H",)), ("CS", ("H", "H")), ("TOFFOLI", ("H", "H", "I"))):
        u = gates.matrix_of(name)
        n = len(a_ops)
        a = gates.kron(*(gates.matrix_of(x) for x in a_ops))
        by_matrix = u @ a @ zero_state(n).amplitudes
        res = synthesize_teleported_gate(u)
        assert np.max(np.abs(res.ancilla_state.amplitudes - by_matrix)) < 1e-12


def test_synthesized_branches_verify_exhaustively(rng):
    for name in ("T", "S", "CS", "TOFFOLI"):
        res = synthesize_teleported_gate(gates.matrix_of(name))
        assert res.report.passed and res.report.worst_fidelity >= 1 - 1e-10


def test_correction_phases_dropped_in_emitted_circuit():
    res = synthesize_teleported_gate(gates.T)
    cgates = [op for op in res.circuit.ops if type(op).__name__ == "CGateOp"]
    emitted = cgates[0].matrix
    sx = gates.S @ gates.X
    assert np.max(np.abs(emitted - sx)) < 1e-12  # no e^{-i pi/4} in the circuit


# --- sandwiched synthesis ----------------------------------------------------

def _ch_frames():
    g_a = clifford_from_matrix(gates.kron(gates.I2, gates.Q.conj().T))
    g_b = clifford_from_matrix(gates.CNOT @ gates.kron(gates.I2, gates.Q))
    v = gates.kron(gates.T, gates.I2) @ gates.matrix_of("CS†")
    return g_a, v, g_b


def test_sandwiched_controlled_hadamard():
    g_a, v, g_b = _ch_frames()
    assert np.max(np.abs(gates.CH - g_b.matrix @ v @ g_a.matrix)) < 1e-12
    res = synthesize_sandwiched(gates.CH, g_a, v, g_b)
    assert res.report.passed and len(res.report.branch_weights) == 4
    want = v @ gates.kron(gates.H, gates.H) @ zero_state(2).amplitudes
    assert np.max(np.abs(res.ancilla_state.amplitudes - want)) < 1e-12
    for corr in res.corrections:
        assert corr.klass in ("pauli", "clifford")


def test_sandwiched_reduces_to_plain_synthesis():
    ident = identity_tableau(1)
    r1 = synthesize_sandwiched(gates.T, ident, gates.T, ident)
    r2 = synthesize_teleported_gate(gates.T)
    assert np.allclose(r1.ancilla_state.amplitudes, r2.ancilla_state.amplitudes)
    for c1, c2 in zip(r1.corrections, r2.corrections):
        assert np.max(np.abs(c1.matrix - c2.matrix)) < 1e-12


def test_sandwiched_hth():
    h = tableau_from_gate("H")
    res = synthesize_sandwiched(gates.H @ gates.T @ gates.H, h, gates.T, h)
    assert res.report.passed


def test_sandwiched_rejects_wrong_decomposition():
    h = tableau_from_gate("H")
    with pytest.raises(SynthesisRefusal):
        synthesize_sandwiched(gates.T, h, gates.T, h)


def test_sandwiched_rejects_non_diagonal_core():
    ident = identity_tableau(1)
    with pytest.raises(SynthesisRefusal):
        synthesize_sandwiched(gates.H, ident, gates.H, ident)


def test_sidecar_shape():
    res = synthesize_teleported_gate(gates.T)
    doc = res.sidecar()
    assert len(doc["ancilla"]) == 2
    assert doc["corrections"][0]["class"] == "clifford"
    assert len(doc["corrections"][0]["phase"]) == 2
