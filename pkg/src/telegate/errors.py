"""Exception types shared across the package."""


class TelegateError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(TelegateError, ValueError):
    """Operands act on different numbers of qubits."""


class WidthOverflow(TelegateError, ValueError):
    """Requested register exceeds the maximum simulated width."""


class ValidationError(TelegateError, ValueError):
    """Input fails a numeric precondition (e.g. not unitary)."""


class ClassificationError(TelegateError, ValueError):
    """A gate fails to belong to the class an operation requires."""


class CircuitFormatError(TelegateError, ValueError):
    """Circuit document cannot be parsed.

    Carries ``line`` and ``column`` when the underlying JSON parser
    provides them.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class InvalidCircuitError(TelegateError, ValueError):
    """Circuit violates structural invariants; carries the violation list."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid circuit: " + "; ".join(self.violations))


class SynthesisRefusal(TelegateError, ValueError):
    """Synthesis cannot emit a verified circuit for the requested gate."""


class InternalConsistencyError(TelegateError, RuntimeError):
    """A derived object violates conditions that should hold by construction."""
