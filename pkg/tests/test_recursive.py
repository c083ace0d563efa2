"""Recursive expansion: all-branch equivalence, level descent, resources,
tree/flattened agreement, and recursive magic-state preparation."""

import numpy as np
import pytest

from telegate import gates
from telegate.errors import ValidationError
from telegate.hierarchy import hierarchy_level
from telegate.recursive import (controlled_rotation_spec, execute_tree,
                                matrix_spec, product_spec,
                                recursive_ancilla_prep, resource_report,
                                rotation_spec, synth_recursive,
                                tree_to_json, verify_preparation)
from telegate.simulator import (basis_state, extract_register_state,
                                random_state, run_all_branches)


def tree_walk_residues(rc):
    found = []

    def walk(node, depth):
        for rep in node.repairs:
            found.append((depth, rep.residue_level))
            if rep.child is not None:
                walk(rep.child, depth + 1)

    if rc.root is not None:
        walk(rc.root, 1)
    return found


def branch_operator_set(run, dim_in, tol=1e-8):
    """Distinct normalized branch operators (phase-canonical), as a set of
    rounded byte keys.  `run` maps a basis StateVector to branch triples."""
    per_branch: dict[str, np.ndarray] = {}
    for col in range(dim_in):
        n = int(round(np.log2(dim_in)))
        for bits, p, state in run(basis_state(n, col)):
            if state is None or p < 1e-12:
                continue
            block = per_branch.setdefault(bits, np.zeros((dim_in, dim_in), complex))
            block[:, col] = np.sqrt(p) * state.amplitudes
    keys = set()
    for block in per_branch.values():
        block = block / np.linalg.norm(block)
        flat = block.ravel()
        magnitudes = np.abs(flat)
        anchor = flat[int(np.argmax(magnitudes > magnitudes.max() - 1e-9))]
        block = block * (abs(anchor) / anchor)
        keys.add((np.round(block, 6) + 0.0).tobytes())
    return keys


def test_rotation_specs_classify_at_their_level():
    for level in (1, 2, 3, 4, 5):
        spec = rotation_spec(level)
        assert hierarchy_level(spec.matrix, k_max=6).level == level
    for controls, level in ((1, 3), (1, 4), (2, 4)):
        spec = controlled_rotation_spec(controls, level)
        assert hierarchy_level(spec.matrix, k_max=6).level == level


def test_t_expansion_is_single_level():
    rc = synth_recursive(matrix_spec(gates.T, "T"))
    rep = resource_report(rc)
    assert rc.level == 3
    assert (rep.depth, rep.ancilla_qubits, rep.measurements) == (1, 1, 1)
    assert rep.cgates_by_level == {2: 1}  # the S·X repair, applied directly
    assert rc.root.repairs[0].child is None


@pytest.mark.parametrize("level,counts", [(3, (1, 1, 1)), (4, (2, 2, 2)),
                                          (5, (3, 3, 3))])
def test_rotation_resources(level, counts):
    rc = synth_recursive(rotation_spec(level))
    rep = resource_report(rc)
    assert (rep.depth, rep.ancilla_qubits, rep.measurements) == counts


def test_level4_rotation_root_repair_is_t_like():
    rc = synth_recursive(rotation_spec(4))
    rep = rc.root.repairs[0]
    assert rep.child is not None and rep.pre_pauli_qubit == 0
    residue = rep.child.gate
    fit = np.trace(gates.T.conj().T @ residue) / 2
    assert abs(abs(fit) - 1.0) < 1e-10  # residue is T up to phase
    assert np.max(np.abs(residue - fit * gates.T)) < 1e-10


def test_controlled_phase_expansion_no_recursion():
    rc = synth_recursive(controlled_rotation_spec(1, 3))  # = CS
    assert rc.level == 3
    rep = resource_report(rc)
    assert rep.depth == 1 and rep.measurements == 2
    refs = (gates.kron(gates.X, gates.S) @ gates.CZ,
            gates.kron(gates.S, gates.X) @ gates.CZ)
    for repair, ref in zip(rc.root.repairs, refs):
        assert repair.child is None
        fit = np.trace(ref.conj().T @ repair.exact) / 4
        assert np.max(np.abs(repair.exact - fit * ref)) < 1e-10


@pytest.mark.parametrize("spec,label", [
    (rotation_spec(3), "V3"),
    (rotation_spec(4), "V4"),
    (rotation_spec(5), "V5"),
    (controlled_rotation_spec(1, 3), "CV3"),
    (controlled_rotation_spec(1, 4), "CV4"),
])
def test_flattened_all_branch_equivalence(spec, label):
    rc = synth_recursive(spec, flatten=True, tol=1e-9)
    assert rc.flattened is not None  # verification happens inside synthesis


def test_width3_level4_flattened():
    ccs = controlled_rotation_spec(2, 4)  # doubly-controlled S
    rc = synth_recursive(ccs, flatten=True, tol=1e-9)
    assert rc.level == 4
    assert rc.flattened.n_qubits == 6  # magic recycles the measured data qubits


def test_width2_level5_flattened():
    # the heavyweight case: 18 measurements, verified branch-exhaustively
    # inside synthesis (takes tens of seconds)
    rc = synth_recursive(controlled_rotation_spec(1, 5), flatten=True, tol=1e-9)
    assert rc.level == 5
    assert resource_report(rc).depth == 3


def test_width2_level5_tree_equivalence(rng):
    rc = synth_recursive(controlled_rotation_spec(1, 5), flatten=False)
    assert rc.level == 5
    for _ in range(3):
        psi = random_state(2, rng)
        want = rc.gate @ psi.amplitudes
        total = 0.0
        for bits, p, s in execute_tree(rc, psi):
            if s is None:
                continue
            total += p
            assert abs(np.vdot(want, s.amplitudes)) > 1 - 1e-9
        assert abs(total - 1.0) < 1e-9


def test_correction_level_descent():
    for spec in (rotation_spec(3), rotation_spec(4), rotation_spec(5),
                 controlled_rotation_spec(1, 4), controlled_rotation_spec(2, 4)):
        rc = synth_recursive(spec, flatten=False)
        k = rc.level
        residues = tree_walk_residues(rc)
        assert residues
        for depth, level in residues:
            assert level <= k - depth, (spec.label, depth, level)


def test_leaf_corrections_are_clifford_or_pauli():
    for spec in (rotation_spec(4), rotation_spec(5), controlled_rotation_spec(1, 4)):
        rc = synth_recursive(spec, flatten=False)

        def walk(node):
            for rep in node.repairs:
                if rep.child is None:
                    assert rep.klass in ("pauli", "clifford")
                else:
                    walk(rep.child)

        walk(rc.root)


def test_tree_depth_is_level_minus_two():
    for spec in (rotation_spec(2), rotation_spec(3), rotation_spec(4),
                 rotation_spec(5), controlled_rotation_spec(1, 3),
                 controlled_rotation_spec(1, 4)):
        rc = synth_recursive(spec, flatten=False)
        assert resource_report(rc).depth == rc.level - 2


def test_closure_of_products():
    parts = [controlled_rotation_spec(1, 3), controlled_rotation_spec(1, 4)]
    prod = product_spec(parts)
    level = hierarchy_level(prod.matrix, k_max=6).level
    assert level is not None and level <= 4


def test_flattened_and_tree_operator_sets_match(rng):
    for spec in (rotation_spec(4), controlled_rotation_spec(1, 4)):
        rc = synth_recursive(spec, flatten=True)
        dim = 2**rc.n

        def run_tree(psi, rc=rc):
            return execute_tree(rc, psi)

        def run_flat(psi, rc=rc):
            out = []
            for br in run_all_branches(rc.flattened, psi):
                state = None
                if br.state is not None:
                    state = extract_register_state(br, rc.out_map)
                out.append((br.bitstring, br.probability, state))
            return out

        assert branch_operator_set(run_tree, dim) == branch_operator_set(run_flat, dim)


def test_level_two_gate_is_direct():
    rc = synth_recursive(rotation_spec(2))  # the S gate
    assert rc.root is None and rc.level == 2
    rep = resource_report(rc)
    assert (rep.depth, rep.ancilla_qubits, rep.measurements) == (0, 0, 0)
    (bits, p, s) = execute_tree(rc, basis_state(1, 1))[0]
    assert abs(s.amplitudes[1] - 1j) < 1e-12


def test_rejects_non_diagonal():
    with pytest.raises(ValidationError):
        synth_recursive(matrix_spec(gates.H, "H"))


def test_tree_serialization_nests_children():
    import json
    rc = synth_recursive(rotation_spec(4), flatten=False)
    doc = json.loads(tree_to_json(rc))
    assert doc["mode"] == "teleport" and doc["level"] == 4
    assert len(doc["children"]) == 1
    child = doc["children"][0]
    assert child["on"] == {"cbits": [0], "equals": [1]}
    assert child["mode"] == "inject" and child["children"] == []


# --- recursive preparation ---------------------------------------------------

@pytest.mark.parametrize("spec,label", [
    (matrix_spec(gates.T, "T"), "T"),
    (rotation_spec(4), "V4"),
    (controlled_rotation_spec(1, 3), "CV3"),
])
def test_recursive_preparation_reaches_target(spec, label):
    prep = recursive_ancilla_prep(spec)
    ok, worst = verify_preparation(prep, tol=1e-9)
    assert ok, (label, worst)


def test_t_preparation_is_base_level():
    prep = recursive_ancilla_prep(matrix_spec(gates.T, "T"))
    (step,) = prep.steps
    # the stabilizer payload is e^{-i pi/4} S: Clifford, performed directly
    assert step.u_x_level == 2
    assert step.realization.mode == "direct"
    sx = gates.S @ gates.X
    assert np.max(np.abs(step.m - np.exp(-1j * np.pi / 4) * sx)) < 1e-12


def test_level4_preparation_expands_controlled_t():
    prep = recursive_ancilla_prep(rotation_spec(4))
    (step,) = prep.steps
    assert step.u_x_level == 3
    assert step.realization.mode == "injected"
    fit = np.trace(gates.T.conj().T @ step.u_x) / 2
    assert np.max(np.abs(step.u_x - fit * gates.T)) < 1e-10
    # its pattern repairs are all base-level (direct controlled diagonals)
    assert step.realization.children == ()
    assert step.realization.direct_patterns


def test_cs_preparation_two_base_level_steps():
    prep = recursive_ancilla_prep(controlled_rotation_spec(1, 3))
    assert len(prep.steps) == 2
    for step in prep.steps:
        assert step.u_x_level <= 2
        assert step.realization.mode == "direct"


def test_preparation_branch_probabilities_sum(rng):
    prep = recursive_ancilla_prep(rotation_spec(4))
    total = sum(b.probability for b in run_all_branches(prep.circuit, None))
    assert abs(total - 1.0) < 1e-10
