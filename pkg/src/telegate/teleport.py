"""One-bit teleportation primitives and gate rewriting.

The X and Z primitives move a register through one CNOT, one Z-basis
measurement, and one classically-controlled Pauli.  A gate U that commutes
with the CNOT layer is rewritten into the same skeleton with the ancilla
injected as U·A|0...0> and each classically-controlled Pauli replaced by
its conjugate U·D_i·U†, whose class (Pauli / Clifford / diagonal-times-X)
is certified before the circuit is emitted.  Every synthesis verifies all
measurement branches against the target before returning.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import clifford as clifford_mod
from . import gates, hierarchy, pauli
from .circuit import Circuit, CircuitBuilder
from .clifford import CliffordTableau
from .errors import SynthesisRefusal, ValidationError
from .simulator import (EquivalenceReport, StateVector, run_all_branches,
                        verify_gate_equivalence, zero_state)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class TeleportPlan:
    """Per-qubit choice of X- or Z-teleportation, plus the derived roles."""

    kinds: tuple[str, ...]
    generalized_g: CliffordTableau | None = None

    def __post_init__(self):
        for k in self.kinds:
            if k not in ("X", "Z"):
                raise ValidationError(f"bad teleport kind {k!r}")

    @property
    def n(self) -> int:
        return len(self.kinds)

    @property
    def a_ops(self) -> tuple[str, ...]:
        return tuple("H" if k == "X" else "I" for k in self.kinds)

    @property
    def b_ops(self) -> tuple[str, ...]:
        return tuple("I" if k == "X" else "H" for k in self.kinds)

    @property
    def d_ops(self) -> tuple[str, ...]:
        return tuple("X" if k == "X" else "Z" for k in self.kinds)

    def describe(self) -> str:
        return "".join(self.kinds)


@dataclass(frozen=True)
class Correction:
    """One classically-controlled correction U·D_i·U† with its class."""

    qubit: int
    matrix: np.ndarray
    klass: str  # "pauli" | "clifford" | "diagonal-pauli"
    phase: complex
    canonical: np.ndarray
    pauli_literal: str | None = None
    residue_level: int | None = None


@dataclass(frozen=True)
class SynthesisResult:
    circuit: Circuit
    ancilla_state: StateVector
    corrections: tuple[Correction, ...]
    plan: TeleportPlan
    report: EquivalenceReport
    gate: np.ndarray

    def sidecar(self) -> dict:
        return {
            "ancilla": [[float(z.real), float(z.imag)]
                        for z in self.ancilla_state.amplitudes],
            "corrections": [
                {
                    "qubit": c.qubit,
                    "class": c.klass,
                    "matrix": [[[float(z.real), float(z.imag)] for z in row]
                               for row in c.canonical],
                    "phase": [float(c.phase.real), float(c.phase.imag)],
                    **({"pauli": c.pauli_literal} if c.pauli_literal else {}),
                }
                for c in self.corrections
            ],
        }


def _width_of(u: np.ndarray) -> int:
    n = int(round(np.log2(u.shape[0])))
    if 2**n != u.shape[0]:
        raise ValidationError("matrix dimension is not a power of two")
    return n


def split_phase(m: np.ndarray, tol: float = 1e-8) -> tuple[complex, np.ndarray]:
    """Split m into (phase, canonical) with the first nonzero entry made
    real positive; phase * canonical reproduces m."""
    flat = m.ravel()
    for entry in flat:
        if abs(entry) > tol:
            phase = complex(entry / abs(entry))
            return phase, m / phase
    raise ValidationError("zero matrix has no phase convention")


def peel_x_pattern(m: np.ndarray, tol: float = 1e-9) -> tuple[tuple[int, ...], np.ndarray] | None:
    """Factor m = D · X^x with D diagonal, if the support pattern allows it."""
    n = _width_of(m)
    x_int = None
    for col in range(m.shape[1]):
        rows = np.nonzero(np.abs(m[:, col]) > tol)[0]
        if len(rows) != 1:
            return None
        this = int(rows[0]) ^ col
        if x_int is None:
            x_int = this
        elif x_int != this:
            return None
    if x_int is None:
        return None
    x_bits = tuple((x_int >> (n - 1 - q)) & 1 for q in range(n))
    x_op = pauli.pauli_to_matrix(pauli.PauliOperator(n, x_bits, (0,) * n, 0))
    diag = m @ x_op
    return x_bits, diag


def classify_correction(m: np.ndarray, k_hint: int, qubit: int,
                        tol: float = DEFAULT_TOL) -> Correction:
    """Certify a correction on the Pauli / Clifford / diagonal·X ladder."""
    phase, canonical = split_phase(m)
    hit = pauli.pauli_from_matrix(m, tol=max(tol, 1e-8))
    if hit is not None:
        c, bare, _ = hit
        return Correction(qubit, m, "pauli", c, pauli.pauli_to_matrix(bare),
                          pauli_literal=pauli.format_literal(bare))
    if clifford_mod.clifford_from_matrix(m, tol=max(tol, 1e-8)) is not None:
        return Correction(qubit, m, "clifford", phase, canonical)
    peeled = peel_x_pattern(m, tol=max(tol, 1e-8))
    if peeled is not None:
        _, diag = peeled
        if hierarchy.is_diagonal_matrix(diag, tol=1e-7):
            verdict = hierarchy.hierarchy_level(diag, k_max=max(k_hint, 2))
            if verdict.level is not None and verdict.level <= k_hint - 1:
                return Correction(qubit, m, "diagonal-pauli", phase, canonical,
                                  residue_level=verdict.level)
    raise SynthesisRefusal(
        f"correction on qubit {qubit} is neither Pauli, Clifford, nor"
        f" diagonal-times-X within level {k_hint - 1}")


def build_one_bit_teleport(kind: str, n: int = 1) -> Circuit:
    """The bare X- or Z-teleportation of an n-qubit register.

    Data sits on qubits 0..n-1, the receiving ancilla on n..2n-1; each
    measurement outcome i=1 triggers the Pauli repair on ancilla qubit i.
    """
    if kind not in ("X", "Z"):
        raise ValidationError(f"teleport kind must be 'X' or 'Z', got {kind!r}")
    if n < 1:
        raise ValidationError("need at least one qubit")
    b = CircuitBuilder(2 * n, n, inputs=["input"] * n + ["zero"] * n)
    if kind == "X":
        for i in range(n):
            b.gate("H", [n + i], role="A")
        for i in range(n):
            b.gate("CNOT", [n + i, i], role="E")
    else:
        for i in range(n):
            b.gate("CNOT", [i, n + i], role="E")
        for i in range(n):
            b.gate("H", [i], role="B")
    for i in range(n):
        b.measure(i, i)
    for i in range(n):
        b.cgate([i], [1], "X" if kind == "X" else "Z", [n + i], role="D")
    return b.build()


def build_generalized_teleport(g: CliffordTableau) -> Circuit:
    """Teleport through a Clifford frame: G on the data before the CNOT
    layer, G† on the ancilla after the repairs.  Reduces to X-teleportation
    for G = I and reproduces the Z-teleportation channel for G = H."""
    if g.matrix is None:
        raise ValidationError("tableau must carry its matrix for circuit emission")
    n = g.n
    b = CircuitBuilder(2 * n, n, inputs=["input"] * n + ["zero"] * n)
    for i in range(n):
        b.gate("H", [n + i], role="A")
    data = list(range(n))
    anc = list(range(n, 2 * n))
    if g.name is not None and g.name in gates.GATE_NAMES:
        b.gate(g.name, data, role="A")
    else:
        b.gate(g.matrix, data, role="A")
    for i in range(n):
        b.gate("CNOT", [n + i, i], role="E")
    for i in range(n):
        b.measure(i, i)
    for i in range(n):
        b.cgate([i], [1], "X", [n + i], role="D")
    b.gate(g.matrix.conj().T, anc, role="B")
    return b.build()


def _e_layer(kinds: tuple[str, ...]) -> np.ndarray:
    """The CNOT layer on [data 0..n-1 | ancilla n..2n-1] as a dense matrix."""
    n = len(kinds)
    total = np.eye(2 ** (2 * n), dtype=complex)
    for i, kind in enumerate(kinds):
        if kind == "X":
            e_i = gates.embed(gates.CNOT, (n + i, i), 2 * n)
        else:
            e_i = gates.embed(gates.CNOT, (i, n + i), 2 * n)
        total = e_i @ total
    return total


def plan_commutes(u: np.ndarray, kinds: tuple[str, ...], tol: float = DEFAULT_TOL) -> bool:
    """Entrywise test that the extended gate commutes with the CNOT layer."""
    n = _width_of(u)
    if len(kinds) != n:
        raise ValidationError("plan width mismatch")
    e = _e_layer(kinds)
    u_ext = gates.embed(u, tuple(range(n, 2 * n)), 2 * n)
    return bool(np.max(np.abs(u_ext @ e - e @ u_ext)) < tol)


def plan_teleportation(u: np.ndarray, tol: float = DEFAULT_TOL) -> TeleportPlan | None:
    """Search all X/Z assignments, preferring all-X then fewer Z qubits."""
    u = np.asarray(u, dtype=complex)
    if not clifford_mod.is_unitary(u, tol=1e-8):
        raise ValidationError("input matrix is not unitary within tolerance")
    n = _width_of(u)
    if n > 4:
        raise ValidationError("plan search is exhaustive and limited to width 4")
    assignments = sorted(itertools.product("XZ", repeat=n),
                         key=lambda ks: (ks.count("Z"), ks))
    for kinds in assignments:
        if plan_commutes(u, tuple(kinds), tol=tol):
            return TeleportPlan(tuple(kinds))
    return None


def _ancilla_by_simulation(u: np.ndarray, a_ops: tuple[str, ...]) -> StateVector:
    """Gate-by-gate route to U·A|0...0>, independent of the matrix action."""
    n = len(a_ops)
    b = CircuitBuilder(n, 0, inputs=["zero"] * n)
    for i, name in enumerate(a_ops):
        if name != "I":
            b.gate(name, [i], role="A")
    b.gate(u, list(range(n)), role="U")
    branches = run_all_branches(b.build(), None)
    assert len(branches) == 1
    return branches[0].state


def synthesize_teleported_gate(u: np.ndarray, plan: TeleportPlan | None = None,
                               k_hint: int = 3,
                               tol: float = DEFAULT_TOL) -> SynthesisResult:
    """Rewrite u into teleported form and verify every branch.

    The emitted circuit injects the derived ancilla, runs the CNOT layer
    and measurements, and repairs with the classified conjugated
    corrections (canonical phases dropped at emission)."""
    u = np.asarray(u, dtype=complex)
    n = _width_of(u)
    if plan is None:
        plan = plan_teleportation(u, tol=tol)
        if plan is None:
            raise SynthesisRefusal(
                "no X/Z assignment commutes with the CNOT layer for this gate")
    if plan.n != n:
        raise SynthesisRefusal("plan width does not match the gate")
    if not plan_commutes(u, plan.kinds, tol=max(tol, 1e-8)):
        raise SynthesisRefusal(
            f"plan {plan.describe()} does not commute with the CNOT layer")
    verdict = hierarchy.hierarchy_level(u, k_max=max(k_hint, 2))
    if verdict.level is None or verdict.level > k_hint:
        raise SynthesisRefusal(
            f"gate classifies above level {k_hint} (verdict: {verdict.describe()})")

    a_matrix = gates.kron(*(gates.matrix_of(name) for name in plan.a_ops))
    ancilla_vec = u @ a_matrix @ zero_state(n).amplitudes
    ancilla = StateVector(n, ancilla_vec)
    by_sim = _ancilla_by_simulation(u, plan.a_ops)
    if np.max(np.abs(ancilla.amplitudes - by_sim.amplitudes)) > 1e-10:
        raise SynthesisRefusal("ancilla state disagrees between matrix action"
                               " and gate-by-gate simulation")

    u_dag = u.conj().T
    corrections = []
    for i, d_name in enumerate(plan.d_ops):
        d_reg = pauli.pauli_to_matrix(pauli.single(n, i, d_name))
        corrections.append(classify_correction(u @ d_reg @ u_dag, k_hint, i, tol=tol))

    b = CircuitBuilder(2 * n, n, inputs=["input"] * n + ["inject"] * n)
    anc = list(range(n, 2 * n))
    b.inject(ancilla.amplitudes, anc, role="ancilla-prep")
    for i, kind in enumerate(plan.kinds):
        if kind == "X":
            b.gate("CNOT", [n + i, i], role="E")
        else:
            b.gate("CNOT", [i, n + i], role="E")
    for i, name in enumerate(plan.b_ops):
        if name != "I":
            b.gate(name, [i], role="B")
    for i in range(n):
        b.measure(i, i)
    for i, corr in enumerate(corrections):
        b.cgate([i], [1], corr.canonical, anc, role="D")
    circuit = b.build()

    report = verify_gate_equivalence(circuit, u, list(range(n)), anc, tol=1e-10)
    if not report.passed:
        raise SynthesisRefusal(
            f"branch verification failed (worst fidelity {report.worst_fidelity:.3e}"
            f" on branch {report.failing_branch})")
    return SynthesisResult(circuit, ancilla, tuple(corrections), plan, report, u)


def synthesize_sandwiched(u: np.ndarray, g_a: CliffordTableau, v: np.ndarray,
                          g_b: CliffordTableau,
                          tol: float = DEFAULT_TOL) -> SynthesisResult:
    """Teleport u = G_b·V·G_a through the frame: G_a before the CNOT layer,
    the ancilla injected as V|+...+>, G_b ahead of the classified
    corrections G_b·V·X_i·V†·G_b†."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    n = _width_of(u)
    if g_a.matrix is None or g_b.matrix is None:
        raise ValidationError("frame tableaus must carry matrices")
    if np.max(np.abs(u - g_b.matrix @ v @ g_a.matrix)) > max(tol, 1e-8):
        raise SynthesisRefusal("decomposition mismatch: u != G_b·V·G_a")
    if not hierarchy.is_diagonal_matrix(v, tol=max(tol, 1e-8)):
        raise SynthesisRefusal("the sandwiched factor V must be diagonal")
    plan = TeleportPlan(("X",) * n, generalized_g=g_a)

    h_all = gates.kron(*([gates.H] * n))
    ancilla = StateVector(n, v @ h_all @ zero_state(n).amplitudes)

    corrections = []
    gb, gb_dag = g_b.matrix, g_b.matrix.conj().T
    v_dag = v.conj().T
    for i in range(n):
        x_i = pauli.pauli_to_matrix(pauli.single(n, i, "X"))
        corrections.append(classify_correction(gb @ v @ x_i @ v_dag @ gb_dag,
                                               3, i, tol=tol))

    b = CircuitBuilder(2 * n, n, inputs=["input"] * n + ["inject"] * n)
    data = list(range(n))
    anc = list(range(n, 2 * n))
    b.inject(ancilla.amplitudes, anc, role="ancilla-prep")
    b.gate(g_a.matrix, data, role="A")
    for i in range(n):
        b.gate("CNOT", [n + i, i], role="E")
    for i in range(n):
        b.measure(i, i)
    b.gate(g_b.matrix, anc, role="B")
    for i, corr in enumerate(corrections):
        b.cgate([i], [1], corr.canonical, anc, role="D")
    circuit = b.build()

    report = verify_gate_equivalence(circuit, u, data, anc, tol=1e-10)
    if not report.passed:
        raise SynthesisRefusal(
            f"branch verification failed (worst fidelity {report.worst_fidelity:.3e}"
            f" on branch {report.failing_branch})")
    return SynthesisResult(circuit, ancilla, tuple(corrections), plan, report, u)
