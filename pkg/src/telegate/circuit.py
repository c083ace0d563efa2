"""Circuit intermediate representation: gates, Z-basis measurements,
classically-controlled gates, and known-state injection.

Circuits are immutable once built (the builder accumulates and freezes).
Validation is total: `validate` reports violations as data and never
raises on structurally well-typed input.  The file format is JSON
("telegate-circuit/1"); matrix and state element order follows the global
convention with qubit 0 as the most significant index bit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import gates
from .errors import CircuitFormatError, InvalidCircuitError

ROLE_TAGS = ("A", "B", "D", "E", "U", "ancilla-prep")
INPUT_TAGS = ("input", "zero", "inject")

FORMAT_NAME = "telegate-circuit/1"

# Known injected-state labels, resolvable without amplitudes in circuit files.
_SQ2 = 1.0 / np.sqrt(2.0)
STATE_LABELS: dict[str, np.ndarray] = {
    "epr": np.array([_SQ2, 0, 0, _SQ2], dtype=complex),
    "T-ancilla": np.array([_SQ2, _SQ2 * np.exp(1j * np.pi / 4)], dtype=complex),
    "CS-ancilla": np.array([0.5, 0.5, 0.5, 0.5j], dtype=complex),
    "TOFFOLI-ancilla": np.array([0.5, 0, 0.5, 0, 0.5, 0, 0, 0.5], dtype=complex),
}


def _as_state(amplitudes) -> np.ndarray:
    arr = np.asarray(amplitudes, dtype=complex).ravel()
    norm = np.linalg.norm(arr)
    if norm < 1e-12:
        raise InvalidCircuitError(["injected state has zero norm"])
    if abs(norm - 1.0) > 1e-12:  # keep already-normalized vectors bit-stable
        arr = arr / norm
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _matrices_equal(a: np.ndarray | None, b: np.ndarray | None) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return a.shape == b.shape and bool(np.array_equal(a, b))


@dataclass(frozen=True, eq=False)
class GateOp:
    targets: tuple[int, ...]
    name: str | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)
    role: str | None = None

    def __eq__(self, other):
        return (isinstance(other, GateOp)
                and self.targets == other.targets and self.name == other.name
                and self.role == other.role and _matrices_equal(self.matrix, other.matrix))

    def resolved_matrix(self) -> np.ndarray:
        return self.matrix if self.matrix is not None else gates.matrix_of(self.name)


@dataclass(frozen=True, eq=False)
class MeasureOp:
    qubit: int
    cbit: int
    role: str | None = None

    def __eq__(self, other):
        return (isinstance(other, MeasureOp) and self.qubit == other.qubit
                and self.cbit == other.cbit and self.role == other.role)


@dataclass(frozen=True, eq=False)
class CGateOp:
    cond_cbits: tuple[int, ...]
    cond_values: tuple[int, ...]
    targets: tuple[int, ...]
    name: str | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)
    role: str | None = None

    def __eq__(self, other):
        return (isinstance(other, CGateOp)
                and self.cond_cbits == other.cond_cbits
                and self.cond_values == other.cond_values
                and self.targets == other.targets and self.name == other.name
                and self.role == other.role and _matrices_equal(self.matrix, other.matrix))

    def resolved_matrix(self) -> np.ndarray:
        return self.matrix if self.matrix is not None else gates.matrix_of(self.name)


@dataclass(frozen=True, eq=False)
class InjectOp:
    targets: tuple[int, ...]
    amplitudes: np.ndarray = field(repr=False)
    label: str | None = None
    role: str | None = None

    def __eq__(self, other):
        return (isinstance(other, InjectOp)
                and self.targets == other.targets and self.label == other.label
                and self.role == other.role
                and _matrices_equal(self.amplitudes, other.amplitudes))


CircuitOp = GateOp | MeasureOp | CGateOp | InjectOp


@dataclass(frozen=True, eq=False)
class Circuit:
    n_qubits: int
    n_cbits: int
    inputs: tuple[str, ...]
    ops: tuple[CircuitOp, ...]

    def __eq__(self, other):
        return (isinstance(other, Circuit)
                and self.n_qubits == other.n_qubits and self.n_cbits == other.n_cbits
                and self.inputs == other.inputs and self.ops == other.ops)

    @property
    def symbolic_qubits(self) -> tuple[int, ...]:
        return tuple(q for q, tag in enumerate(self.inputs) if tag == "input")

    def measured_qubits(self) -> set[int]:
        return {op.qubit for op in self.ops if isinstance(op, MeasureOp)}


class CircuitBuilder:
    """Accumulates ops, then freezes into a validated Circuit."""

    def __init__(self, n_qubits: int, n_cbits: int, inputs=None):
        if inputs is None:
            inputs = ["input"] * n_qubits
        self.n_qubits = n_qubits
        self.n_cbits = n_cbits
        self.inputs = list(inputs)
        self.ops: list[CircuitOp] = []

    def gate(self, name_or_matrix, targets, role=None) -> "CircuitBuilder":
        name, matrix = _split_gate(name_or_matrix)
        self.ops.append(GateOp(tuple(targets), name=name, matrix=matrix, role=role))
        return self

    def measure(self, qubit: int, cbit: int, role=None) -> "CircuitBuilder":
        self.ops.append(MeasureOp(qubit, cbit, role=role))
        return self

    def cgate(self, cond_cbits, cond_values, name_or_matrix, targets, role=None) -> "CircuitBuilder":
        name, matrix = _split_gate(name_or_matrix)
        self.ops.append(CGateOp(tuple(cond_cbits), tuple(cond_values), tuple(targets),
                                name=name, matrix=matrix, role=role))
        return self

    def inject(self, amplitudes, targets, label=None, role=None) -> "CircuitBuilder":
        self.ops.append(InjectOp(tuple(targets), _as_state(amplitudes), label=label, role=role))
        return self

    def build(self) -> Circuit:
        c = Circuit(self.n_qubits, self.n_cbits, tuple(self.inputs), tuple(self.ops))
        violations = validate(c)
        if violations:
            raise InvalidCircuitError(violations)
        return c


def _split_gate(name_or_matrix):
    if isinstance(name_or_matrix, str):
        return gates.canonical_name(name_or_matrix), None
    m = np.asarray(name_or_matrix, dtype=complex)
    m.flags.writeable = False
    return None, m


def validate(c: Circuit) -> list[str]:
    """Return all invariant violations; empty means well-formed."""
    out: list[str] = []
    if len(c.inputs) != c.n_qubits:
        out.append("inputs: one tag per qubit is required")
        return out
    for q, tag in enumerate(c.inputs):
        if tag not in INPUT_TAGS:
            out.append(f"inputs: unknown tag {tag!r} on qubit {q}")
            return out

    # Per-qubit status: 'fresh', 'pending' (awaiting Inject), 'active', 'measured'.
    status = ["pending" if tag == "inject" else "fresh" for tag in c.inputs]
    tags = list(c.inputs)
    written_cbits: set[int] = set()

    def targets_ok(k: int, op, targets) -> bool:
        ok = True
        if len(set(targets)) != len(targets):
            out.append(f"op {k}: repeated targets {targets}")
            ok = False
        for q in targets:
            if not (0 <= q < c.n_qubits):
                out.append(f"op {k}: qubit {q} out of range")
                ok = False
        return ok

    def gate_shape_ok(k: int, op, targets) -> bool:
        if op.name is not None:
            try:
                arity = gates.arity_of(op.name)
            except Exception:
                out.append(f"op {k}: unknown gate name {op.name!r}")
                return False
            if arity != len(targets):
                out.append(f"op {k}: gate {op.name} expects {arity} targets")
                return False
        elif op.matrix is not None:
            dim = op.matrix.shape[0]
            if op.matrix.ndim != 2 or op.matrix.shape[0] != op.matrix.shape[1] \
                    or dim != 2 ** len(targets):
                out.append(f"op {k}: matrix shape does not match {len(targets)} targets")
                return False
        else:
            out.append(f"op {k}: gate needs a name or a matrix")
            return False
        return True

    def touch_gate(k: int, targets):
        for q in targets:
            if not (0 <= q < c.n_qubits):
                continue
            if status[q] == "measured":
                out.append(f"op {k}: gate on measured qubit {q} without re-injection"
                           " (single-measurement discipline)")
            elif status[q] == "pending":
                out.append(f"op {k}: gate on qubit {q} before its injected state arrives")
            else:
                status[q] = "active"

    for k, op in enumerate(c.ops):
        if isinstance(op, GateOp):
            if targets_ok(k, op, op.targets) and gate_shape_ok(k, op, op.targets):
                touch_gate(k, op.targets)
        elif isinstance(op, CGateOp):
            if len(op.cond_cbits) != len(op.cond_values) or not op.cond_cbits:
                out.append(f"op {k}: malformed classical condition")
                continue
            for cb in op.cond_cbits:
                if not (0 <= cb < c.n_cbits):
                    out.append(f"op {k}: cbit {cb} out of range")
                elif cb not in written_cbits:
                    out.append(f"op {k}: condition reads cbit {cb} before any measurement"
                               " writes it (causality)")
            for v in op.cond_values:
                if v not in (0, 1):
                    out.append(f"op {k}: condition values must be bits")
            if targets_ok(k, op, op.targets) and gate_shape_ok(k, op, op.targets):
                touch_gate(k, op.targets)
        elif isinstance(op, MeasureOp):
            if not (0 <= op.qubit < c.n_qubits):
                out.append(f"op {k}: qubit {op.qubit} out of range")
                continue
            if not (0 <= op.cbit < c.n_cbits):
                out.append(f"op {k}: cbit {op.cbit} out of range")
                continue
            if status[op.qubit] == "measured":
                out.append(f"op {k}: qubit {op.qubit} measured twice without re-injection"
                           " (single-measurement discipline)")
            elif status[op.qubit] == "pending":
                out.append(f"op {k}: measuring qubit {op.qubit} before its injected state")
            if op.cbit in written_cbits:
                out.append(f"op {k}: cbit {op.cbit} written twice")
            status[op.qubit] = "measured"
            written_cbits.add(op.cbit)
        elif isinstance(op, InjectOp):
            if not targets_ok(k, op, op.targets):
                continue
            if op.amplitudes.shape != (2 ** len(op.targets),):
                out.append(f"op {k}: injected state length does not match targets")
                continue
            for q in op.targets:
                if status[q] == "active" or (status[q] == "fresh" and tags[q] == "input"):
                    out.append(f"op {k}: inject target {q} must be fixed-|0> or"
                               " measured-and-retired")
                status[q] = "active"
        else:
            out.append(f"op {k}: unknown op variant {type(op).__name__}")
    return out


# ---------------------------------------------------------------------------
# serialization

def _complex_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _matrix_doc(m: np.ndarray) -> list:
    return [[_complex_pair(z) for z in row] for row in np.asarray(m, dtype=complex)]


def _state_doc(v: np.ndarray) -> list:
    return [_complex_pair(z) for z in np.asarray(v, dtype=complex).ravel()]


def matrix_from_doc(doc) -> np.ndarray:
    try:
        return np.array([[complex(re, im) for re, im in row] for row in doc], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise CircuitFormatError(f"bad matrix document: {exc}") from None


def state_from_doc(doc) -> np.ndarray:
    try:
        return np.array([complex(re, im) for re, im in doc], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise CircuitFormatError(f"bad state document: {exc}") from None


def _op_doc(op: CircuitOp) -> dict:
    doc: dict = {}
    if isinstance(op, GateOp):
        doc["op"] = "gate"
        if op.name is not None:
            doc["name"] = op.name
        else:
            doc["matrix"] = _matrix_doc(op.matrix)
        doc["targets"] = list(op.targets)
    elif isinstance(op, MeasureOp):
        doc["op"] = "measure"
        doc["qubit"] = op.qubit
        doc["cbit"] = op.cbit
    elif isinstance(op, CGateOp):
        doc["op"] = "cgate"
        doc["cond"] = {"cbits": list(op.cond_cbits), "equals": list(op.cond_values)}
        if op.name is not None:
            doc["name"] = op.name
        else:
            doc["matrix"] = _matrix_doc(op.matrix)
        doc["targets"] = list(op.targets)
    elif isinstance(op, InjectOp):
        doc["op"] = "inject"
        if op.label is not None:
            doc["state"] = {"label": op.label}
        else:
            doc["state"] = {"amplitudes": _state_doc(op.amplitudes)}
        doc["targets"] = list(op.targets)
    if op.role is not None:
        doc["role"] = op.role
    return doc


def _op_from_doc(doc: dict, index: int) -> CircuitOp:
    kind = doc.get("op")
    role = doc.get("role")
    if kind == "gate" or kind == "cgate":
        name = doc.get("name")
        matrix = None
        if name is not None:
            name = gates.canonical_name(name)
        elif "matrix" in doc:
            matrix = matrix_from_doc(doc["matrix"])
            matrix.flags.writeable = False
        else:
            raise CircuitFormatError(f"op {index}: gate needs 'name' or 'matrix'")
        targets = tuple(int(t) for t in doc["targets"])
        if kind == "gate":
            return GateOp(targets, name=name, matrix=matrix, role=role)
        cond = doc.get("cond", {})
        return CGateOp(tuple(int(b) for b in cond.get("cbits", [])),
                       tuple(int(v) for v in cond.get("equals", [])),
                       targets, name=name, matrix=matrix, role=role)
    if kind == "measure":
        return MeasureOp(int(doc["qubit"]), int(doc["cbit"]), role=role)
    if kind == "inject":
        state = doc.get("state", {})
        label = state.get("label")
        if label is not None:
            if label not in STATE_LABELS:
                raise CircuitFormatError(f"op {index}: unknown state label {label!r}")
            amps = STATE_LABELS[label]
        elif "amplitudes" in state:
            amps = state_from_doc(state["amplitudes"])
        else:
            raise CircuitFormatError(f"op {index}: inject needs a label or amplitudes")
        return InjectOp(tuple(int(t) for t in doc["targets"]), _as_state(amps),
                        label=label, role=role)
    raise CircuitFormatError(f"op {index}: unknown op kind {kind!r}")


def to_document(c: Circuit) -> dict:
    """The circuit as a plain JSON-ready dict; refuses invalid circuits."""
    violations = validate(c)
    if violations:
        raise InvalidCircuitError(violations)
    return {
        "format": FORMAT_NAME,
        "qubits": c.n_qubits,
        "cbits": c.n_cbits,
        "inputs": list(c.inputs),
        "ops": [_op_doc(op) for op in c.ops],
    }


def serialize(c: Circuit) -> str:
    """Canonical textual form; refuses circuits that fail validation."""
    return json.dumps(to_document(c), indent=1)


def deserialize(text: str) -> Circuit:
    """Parse the canonical form; structural errors carry line/position."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"not valid JSON: {exc.msg}",
                                 line=exc.lineno, column=exc.colno) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CircuitFormatError(f"missing or unsupported format marker "
                                 f"(expected {FORMAT_NAME!r})")
    try:
        n_qubits = int(doc["qubits"])
        n_cbits = int(doc["cbits"])
        inputs = tuple(str(t) for t in doc.get("inputs", ["input"] * n_qubits))
        ops = tuple(_op_from_doc(op_doc, k) for k, op_doc in enumerate(doc.get("ops", [])))
    except KeyError as exc:
        raise CircuitFormatError(f"missing required field {exc}") from None
    c = Circuit(n_qubits, n_cbits, inputs, ops)
    violations = validate(c)
    if violations:
        raise InvalidCircuitError(violations)
    return c


# ---------------------------------------------------------------------------
# text-art rendering (best effort, one wire per line, time left to right)

def _op_label(op) -> str:
    if op.name is not None:
        return op.name
    return "U"


def render(c: Circuit) -> str:
    """ASCII drawing of the circuit for terminal display."""
    wires = [[f"q{q}:"] for q in range(c.n_qubits)]
    cwires = [[f"c{b}:"] for b in range(c.n_cbits)]

    def pad_column():
        width = max(len("".join(w)) for w in wires + cwires)
        for w in wires:
            w.append("-" * (width - len("".join(w))))
        for w in cwires:
            w.append("." * (width - len("".join(w))))

    for op in c.ops:
        pad_column()
        if isinstance(op, GateOp) or isinstance(op, CGateOp):
            label = _op_label(op)
            if op.name == "CNOT" and len(op.targets) == 2:
                marks = {op.targets[0]: "-*-", op.targets[1]: "-+-"}
            elif op.name == "TOFFOLI" and len(op.targets) == 3:
                marks = {op.targets[0]: "-*-", op.targets[1]: "-*-", op.targets[2]: "-+-"}
            else:
                marks = {q: f"[{label}]" for q in op.targets}
            for q, mark in marks.items():
                wires[q].append(mark)
            if isinstance(op, CGateOp):
                cond = ",".join(f"c{b}={v}" for b, v in zip(op.cond_cbits, op.cond_values))
                for b in op.cond_cbits:
                    cwires[b].append("^")
                wires[op.targets[0]].append(f"({cond})")
        elif isinstance(op, MeasureOp):
            wires[op.qubit].append(f"[M->c{op.cbit}]")
            cwires[op.cbit].append("=")
        elif isinstance(op, InjectOp):
            tag = op.label or "state"
            for q in op.targets:
                wires[q].append(f"[inject:{tag}]")
    pad_column()
    lines = ["".join(w) for w in wires] + ["".join(w) for w in cwires]
    return "\n".join(lines)
