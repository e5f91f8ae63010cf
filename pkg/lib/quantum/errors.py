"""Exceptions raised by the simulator and the protocol modules."""


class QuantumSimulationError(ValueError):
    """Base class. Subclasses ValueError so plain ``except ValueError`` still works."""


class WireCapError(QuantumSimulationError):
    """A register would exceed the configured wire cap."""


class WireArgumentError(QuantumSimulationError):
    """Bad wire index, duplicate wire or gate arity mismatch."""


class ValidationError(QuantumSimulationError):
    """An input object (circuit, graph, density matrix, role list) is malformed."""


class ConfigurationError(QuantumSimulationError):
    """An operation is not available for the configured client case."""


class UnsupportedGateError(QuantumSimulationError):
    """No Pauli propagation exists for the gate (non-Clifford)."""
