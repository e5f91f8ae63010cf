"""Exact statevector simulation: states, gates, measurements and density matrices"""

from .angles import ANGLE_STEPS, Angle8
from .config import (
    COMPLEX_DIGITS,
    MATRIX_TOLERANCE,
    PSD_TOLERANCE,
    STATE_TOLERANCE,
    WIRE_CAP,
)
from .density import (
    DensityMatrix,
    density_from_arrays,
    density_from_ensemble,
    density_from_state,
    expectation_fidelity,
    maximally_mixed,
    partial_trace,
    reduced_density,
    reduced_distance,
    trace_distance,
)
from .errors import (
    ConfigurationError,
    QuantumSimulationError,
    UnsupportedGateError,
    ValidationError,
    WireArgumentError,
    WireCapError,
)
from .gates import Gate, gate_names, sequence_matrix
from .register import ProductRegister
from .statevec import (
    QuantumState,
    apply_gate,
    apply_gates,
    apply_matrix,
    basis_state,
    fidelity,
    from_amplitudes,
    measure_computational,
    measure_rotated,
    new_state,
    outcome_probabilities,
    factor_out,
    permute_wires,
    project_out,
    rotated_basis_vector,
    tensor,
)

__all__ = [
    # Angles and gates
    "ANGLE_STEPS",
    "Angle8",
    "Gate",
    "gate_names",
    "sequence_matrix",
    # States
    "QuantumState",
    "new_state",
    "basis_state",
    "from_amplitudes",
    "rotated_basis_vector",
    "tensor",
    "permute_wires",
    "factor_out",
    "apply_matrix",
    "apply_gate",
    "apply_gates",
    "outcome_probabilities",
    "measure_rotated",
    "measure_computational",
    "project_out",
    "fidelity",
    "ProductRegister",
    # Density matrices
    "DensityMatrix",
    "density_from_state",
    "density_from_arrays",
    "density_from_ensemble",
    "maximally_mixed",
    "partial_trace",
    "reduced_density",
    "trace_distance",
    "expectation_fidelity",
    "reduced_distance",
    # Errors
    "QuantumSimulationError",
    "WireCapError",
    "WireArgumentError",
    "ValidationError",
    "ConfigurationError",
    "UnsupportedGateError",
    # Config values
    "WIRE_CAP",
    "STATE_TOLERANCE",
    "MATRIX_TOLERANCE",
    "PSD_TOLERANCE",
    "COMPLEX_DIGITS",
]
