"""Stabilizer derivation and measurement-based ancilla preparation.

A target state U·A|0...0> is fixed by the involutions M_i = U·A·Z_i·A†·U†;
the partners Q_i = U·A·X_i·A†·U† anticommute with their own M_i and
commute with every other pair member.  Measuring the M_i in sequence and
applying Q_i on each -1 outcome drives any starting state into the target.
The shortcut route starts instead from (I+Q_i)·target, which for the
standard ancillas is a product state, and measures the single remaining
stabilizer.

Measurement of an involution is projector arithmetic here, (I±M)/2; the
circuit realization with one control qubit and a controlled-M lives in the
recursive-preparation module and is checked against this arithmetic in the
test suite.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import gates, hierarchy, pauli
from .errors import InternalConsistencyError, ValidationError
from .simulator import Branch, StateVector, zero_state

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class StabilizerPair:
    """One (M_i, Q_i) pair with informational hierarchy tags."""

    m: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    m_level: int | None = None
    q_level: int | None = None


@dataclass(frozen=True)
class StabilizerSpec:
    target: StateVector
    pairs: tuple[StabilizerPair, ...]
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class PreparationScript:
    """Measure each step's operator, applying the partner on -1 outcomes."""

    initial_state: StateVector
    steps: tuple[tuple[np.ndarray, np.ndarray], ...]
    expected_final: StateVector
    shortcut_index: int | None = None
    product_intermediate: bool | None = None
    warnings: tuple[str, ...] = ()


def _norm(m: np.ndarray) -> float:
    return float(np.max(np.abs(m)))


def check_spec(target: StateVector, pairs, tol: float = DEFAULT_TOL) -> None:
    """Numeric verification of the involution/stabilization/commutation
    conditions; raises on any violation."""
    dim = 2**target.n
    eye = np.eye(dim)
    t = target.amplitudes
    for i, pair in enumerate(pairs):
        if pair.m.shape != (dim, dim) or pair.q.shape != (dim, dim):
            raise InternalConsistencyError(f"pair {i}: operator width mismatch")
        if _norm(pair.m @ pair.m - eye) > tol:
            raise InternalConsistencyError(f"pair {i}: M is not an involution")
        if _norm(pair.m @ t - t) > tol:
            raise InternalConsistencyError(f"pair {i}: M does not stabilize the target")
        if _norm(pair.m @ pair.q + pair.q @ pair.m) > tol:
            raise InternalConsistencyError(f"pair {i}: M and Q do not anticommute")
    for i, a in enumerate(pairs):
        for j, b in enumerate(pairs):
            if i == j:
                continue
            if _norm(a.m @ b.q - b.q @ a.m) > tol:
                raise InternalConsistencyError(f"pairs {i},{j}: [M_i, Q_j] != 0")
            if i < j and _norm(a.m @ b.m - b.m @ a.m) > tol:
                raise InternalConsistencyError(f"pairs {i},{j}: [M_i, M_j] != 0")


def make_stabilizer_spec(target: StateVector, ms, qs,
                         tol: float = DEFAULT_TOL) -> StabilizerSpec:
    """Validate and tag a full set of n pairs for a width-n target."""
    warnings: list[str] = []
    pairs = []
    for i, (m, q) in enumerate(zip(ms, qs)):
        m_level = hierarchy.hierarchy_level(m).level
        q_level = hierarchy.hierarchy_level(q).level
        if m_level is None or m_level > 2:
            warnings.append(f"stabilizer {i} classifies above the Clifford group"
                            f" (level {m_level})")
        pairs.append(StabilizerPair(np.asarray(m, complex), np.asarray(q, complex),
                                    m_level, q_level))
    check_spec(target, pairs, tol=tol)
    if len(pairs) != target.n:
        raise InternalConsistencyError(
            f"width-{target.n} target needs exactly {target.n} pairs")
    return StabilizerSpec(target, tuple(pairs), tuple(warnings))


def derive_stabilizers(u: np.ndarray, a_ops) -> StabilizerSpec:
    """Pairs for the state U·A|0...0>: M_i = U·A·Z_i·A†·U†, Q_i likewise
    from X_i.  A is the per-qubit basis-change layer of the teleport plan
    ('H' on X-teleported qubits, 'I' on Z-teleported ones)."""
    u = np.asarray(u, dtype=complex)
    a_ops = tuple(a_ops)
    n = len(a_ops)
    if u.shape != (2**n, 2**n):
        raise ValidationError("gate width does not match the A layer")
    a = gates.kron(*(gates.matrix_of(name) for name in a_ops))
    ua = u @ a
    ua_dag = ua.conj().T
    target = StateVector(n, ua @ zero_state(n).amplitudes)
    ms, qs = [], []
    for i in range(n):
        z_i = pauli.pauli_to_matrix(pauli.single(n, i, "Z"))
        x_i = pauli.pauli_to_matrix(pauli.single(n, i, "X"))
        ms.append(ua @ z_i @ ua_dag)
        qs.append(ua @ x_i @ ua_dag)
    return make_stabilizer_spec(target, ms, qs)


def measure_operator(s: StateVector, m: np.ndarray,
                     tol: float = 1e-9) -> tuple[Branch, Branch]:
    """Project onto the ±1 eigenspaces of an involution.

    Outcome 0 is the +1 eigenspace; a vanishing branch is flagged with
    probability zero and no state."""
    m = np.asarray(m, dtype=complex)
    dim = 2**s.n
    if m.shape != (dim, dim):
        raise ValidationError("operator width does not match the state")
    if _norm(m @ m - np.eye(dim)) > tol:
        raise ValidationError("measured operator must square to the identity")
    branches = []
    for outcome, sign in ((0, 1.0), (1, -1.0)):
        vec = (s.amplitudes + sign * (m @ s.amplitudes)) / 2.0
        p = float(np.linalg.norm(vec) ** 2)
        if p < 1e-12:
            branches.append(Branch((outcome,), 0.0, None, {0: outcome}, {}))
        else:
            branches.append(Branch((outcome,), p, StateVector(s.n, vec),
                                   {0: outcome}, {}))
    return branches[0], branches[1]


def build_preparation(spec: StabilizerSpec,
                      initial: StateVector | None = None) -> PreparationScript:
    """Full sequential script: measure M_1..M_n, correcting with Q_i."""
    if initial is None:
        initial = zero_state(spec.target.n)
    if initial.n != spec.target.n:
        raise ValidationError("initial state width mismatch")
    steps = tuple((pair.m, pair.q) for pair in spec.pairs)
    return PreparationScript(initial, steps, spec.target, warnings=spec.warnings)


def is_product_state(s: StateVector, tol: float = DEFAULT_TOL) -> bool:
    """Sequential Schmidt-rank-1 tests across every prefix bipartition."""
    for cut in range(1, s.n):
        m = s.amplitudes.reshape(2**cut, 2 ** (s.n - cut))
        svals = np.linalg.svd(m, compute_uv=False)
        if len(svals) > 1 and svals[1] > tol:
            return False
    return True


def product_factor_stabilizers(s: StateVector,
                               tol: float = 1e-9) -> list[str | None]:
    """Per-qubit single-qubit stabilizer letters for a product state.

    Returns e.g. ['+Z', '+X'] when each factor is a Pauli eigenstate, None
    entries otherwise.  Meaningful only when is_product_state holds."""
    out: list[str | None] = []
    tensor = s.amplitudes.reshape([2] * s.n)
    for qubit in range(s.n):
        m = np.moveaxis(tensor, qubit, 0).reshape(2, -1)
        u_mat, svals, _ = np.linalg.svd(m)
        factor = u_mat[:, 0]
        found = None
        for letter, op in (("Z", gates.Z), ("X", gates.X), ("Y", gates.Y)):
            expectation = complex(np.vdot(factor, op @ factor))
            if abs(expectation - 1.0) <= tol:
                found = "+" + letter
                break
            if abs(expectation + 1.0) <= tol:
                found = "-" + letter
                break
        out.append(found)
    return out


def shortcut_preparation(spec: StabilizerSpec, i: int) -> PreparationScript:
    """Start from (I+Q_i)·target (a product state for the standard
    ancillas) and measure the single stabilizer M_i."""
    if not 0 <= i < len(spec.pairs):
        raise ValidationError(f"no stabilizer pair {i}")
    pair = spec.pairs[i]
    vec = spec.target.amplitudes + pair.q @ spec.target.amplitudes
    norm = float(np.linalg.norm(vec))
    if norm < 1e-9:
        raise InternalConsistencyError("(I+Q_i)·target vanished; Q_i does not"
                                       " flip the stabilizer as expected")
    intermediate = StateVector(spec.target.n, vec)
    product = is_product_state(intermediate)
    warnings = tuple(spec.warnings)
    if not product:
        warnings = warnings + (
            f"shortcut intermediate for pair {i} is not a product state",)
    return PreparationScript(intermediate, ((pair.m, pair.q),), spec.target,
                             shortcut_index=i, product_intermediate=product,
                             warnings=warnings)


def run_script(script: PreparationScript) -> list[Branch]:
    """Exhaustive branch execution of a preparation script."""
    results: list[Branch] = []

    def walk(step: int, vec: np.ndarray, bits: tuple[int, ...]):
        if step == len(script.steps):
            p = float(np.linalg.norm(vec) ** 2)
            state = StateVector(script.initial_state.n, vec) if p >= 1e-12 else None
            results.append(Branch(bits, p if state else 0.0, state,
                                  {k: b for k, b in enumerate(bits)}, {}))
            return
        m, q = script.steps[step]
        for outcome, sign in ((0, 1.0), (1, -1.0)):
            child = (vec + sign * (m @ vec)) / 2.0
            if float(np.linalg.norm(child) ** 2) < 1e-12:
                results.append(Branch(bits + (outcome,), 0.0, None,
                                      {k: b for k, b in enumerate(bits + (outcome,))}, {}))
                continue
            if outcome == 1:
                child = q @ child
            walk(step + 1, child, bits + (outcome,))

    walk(0, script.initial_state.amplitudes.copy(), ())
    return results


def verify_script(script: PreparationScript, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Worst-case fidelity of all nonzero branches against the target."""
    worst = 1.0
    for branch in run_script(script):
        if branch.state is None:
            continue
        fid = abs(np.vdot(script.expected_final.amplitudes, branch.state.amplitudes))
        worst = min(worst, float(fid))
    return worst >= 1.0 - tol, worst


def script_to_json(script: PreparationScript) -> str:
    def mat_doc(m):
        return [[[float(z.real), float(z.imag)] for z in row] for row in m]

    def state_doc(s: StateVector):
        return [[float(z.real), float(z.imag)] for z in s.amplitudes]

    doc = {
        "initial": state_doc(script.initial_state),
        "steps": [{"measure": {"matrix": mat_doc(m)}, "correct": {"matrix": mat_doc(q)}}
                  for m, q in script.steps],
        "target": state_doc(script.expected_final),
    }
    if script.shortcut_index is not None:
        doc["shortcut_index"] = script.shortcut_index
        doc["product_intermediate"] = script.product_intermediate
    if script.warnings:
        doc["warnings"] = list(script.warnings)
    return json.dumps(doc, indent=1)
