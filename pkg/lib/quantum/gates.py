"""
Gate set used by every protocol in the lab: H, T (sigma_z^{1/4}), X, Z, CZ and CNOT.

Two-wire matrices act on (first wire, second wire) with the first wire as the
more significant bit, matching the register convention in statevec.py.
"""

from enum import Enum
from typing import Dict, Iterable, List

import numpy as np

_SQRT_HALF = 1.0 / np.sqrt(2.0)

_MATRICES: Dict[str, np.ndarray] = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF,
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}

for _m in _MATRICES.values():
    _m.setflags(write=False)


class Gate(str, Enum):
    """Gate kinds. The value doubles as the wire-format name ("H", "CNOT", ...)."""

    H = "H"
    T = "T"
    X = "X"
    Z = "Z"
    CZ = "CZ"
    CNOT = "CNOT"

    @property
    def arity(self) -> int:
        return 2 if self in (Gate.CZ, Gate.CNOT) else 1

    @property
    def matrix(self) -> np.ndarray:
        """Read-only unitary for this gate."""
        return _MATRICES[self.value]

    @property
    def is_clifford(self) -> bool:
        return self is not Gate.T

    @classmethod
    def parse(cls, name: str) -> "Gate":
        """Look up a gate by its wire-format name, raising ValueError on unknown names."""
        try:
            return cls(str(name).strip().upper())
        except ValueError:
            raise ValueError(f"Unknown gate name '{name}'") from None

    def __str__(self) -> str:
        return self.value


def gate_names(gates: Iterable[Gate]) -> List[str]:
    """Wire-format names for a gate list, e.g. [Gate.H, Gate.T] -> ["H", "T"]."""
    return [g.value for g in gates]


def sequence_matrix(gates: Iterable[Gate]) -> np.ndarray:
    """Single-wire matrix of a gate list applied left to right (first gate acts first)."""
    result = np.eye(2, dtype=complex)
    for gate in gates:
        if gate.arity != 1:
            raise ValueError(f"sequence_matrix only takes single-wire gates, got {gate}")
        result = gate.matrix @ result
    return result
