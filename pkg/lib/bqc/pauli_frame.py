"""
Quantum one-time-pad key algebra.

A wire encrypted with key (a, b) carries X^a Z^b |psi>. This module says how
such keys move through the gates the server applies, and how a client turns a
key back into gates it is allowed to perform. Global phases are ignored
everywhere: two operators are "equal" when |tr(A^dag B)| = dim.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterator, List, Sequence, Tuple

import numpy as np

from lib.quantum import Gate, UnsupportedGateError, ValidationError, config as qconfig

logger = logging.getLogger(__name__)

_X = Gate.X.matrix
_Z = Gate.Z.matrix
_I = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class PauliKey:
    """Encryption operator X^a Z^b."""

    a: int = 0
    b: int = 0

    def __post_init__(self) -> None:
        for name, bit in (("a", self.a), ("b", self.b)):
            if bit not in (0, 1):
                raise ValidationError(f"PauliKey.{name} must be 0 or 1, got {bit!r}")
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", int(self.b))

    @property
    def matrix(self) -> np.ndarray:
        x = _X if self.a else _I
        z = _Z if self.b else _I
        return x @ z

    @property
    def is_identity(self) -> bool:
        return self.a == 0 and self.b == 0

    def as_tuple(self) -> Tuple[int, int]:
        return self.a, self.b

    @classmethod
    def all(cls) -> Iterator["PauliKey"]:
        return (cls(a, b) for a in (0, 1) for b in (0, 1))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "PauliKey":
        a, b = rng.integers(0, 2, size=2)
        return cls(int(a), int(b))

    def __str__(self) -> str:
        return f"X^{self.a}Z^{self.b}"


class ClientCase(str, Enum):
    """Gate sets available to a client that cannot perform two-qubit gates."""

    CASE1 = "case1"  # H and T locally, CNOT delegated
    CASE2 = "case2"  # X and T locally, CNOT and H delegated

    @property
    def allowed_gates(self) -> FrozenSet[Gate]:
        if self is ClientCase.CASE1:
            return frozenset({Gate.H, Gate.T})
        return frozenset({Gate.X, Gate.T})

    @property
    def delegated_gates(self) -> FrozenSet[Gate]:
        if self is ClientCase.CASE1:
            return frozenset({Gate.CNOT})
        return frozenset({Gate.CNOT, Gate.H})

    @classmethod
    def parse(cls, name: str) -> "ClientCase":
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValidationError(f"Unknown client case '{name}', expected case1 or case2") from None

    def __str__(self) -> str:
        return self.value


# ---------------------------------------------------------------------------
# Propagation rules
# ---------------------------------------------------------------------------

def propagate_through_cnot(control_key: PauliKey, target_key: PauliKey) -> Tuple[PauliKey, PauliKey]:
    """CNOT (X^a Z^b (x) X^c Z^d) = +-(X^a Z^(b^d) (x) X^(a^c) Z^d) CNOT."""
    a, b = control_key.as_tuple()
    c, d = target_key.as_tuple()
    return PauliKey(a, b ^ d), PauliKey(a ^ c, d)


def propagate_through_h(key: PauliKey) -> PauliKey:
    """H X^a Z^b = +-X^b Z^a H."""
    return PauliKey(key.b, key.a)


def propagate(gate: Gate, keys: Sequence[PauliKey]) -> Tuple[PauliKey, ...]:
    """Keys after the server applies ``gate`` to encrypted wires."""
    if len(keys) != gate.arity:
        raise ValidationError(f"{gate} needs {gate.arity} key(s), got {len(keys)}")
    if gate is Gate.CNOT:
        return propagate_through_cnot(keys[0], keys[1])
    if gate is Gate.H:
        return (propagate_through_h(keys[0]),)
    return oracle_conjugation(gate, keys)


def decompose_pauli(case: ClientCase, a: int, b: int) -> List[Gate]:
    """Gates from the case's allowed set that implement X^a Z^b, applied left to right.

    Z^b comes first, then X^a. Z is always T^4; X is H T^4 H for Case1 and X
    itself for Case2.
    """
    gates: List[Gate] = []
    if b:
        gates.extend([Gate.T] * 4)
    if a:
        if case is ClientCase.CASE1:
            gates.extend([Gate.H, Gate.T, Gate.T, Gate.T, Gate.T, Gate.H])
        else:
            gates.append(Gate.X)
    return gates


def key_gates(case: ClientCase, key: PauliKey) -> List[Gate]:
    return decompose_pauli(case, key.a, key.b)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def pauli_matrix(keys: Sequence[PauliKey]) -> np.ndarray:
    """Kronecker product of the key operators, first key on the most significant wire."""
    result = np.ones((1, 1), dtype=complex)
    for key in keys:
        result = np.kron(result, key.matrix)
    return result


def equal_up_to_phase(a: np.ndarray, b: np.ndarray) -> bool:
    dim = a.shape[0]
    return abs(abs(np.trace(a.conj().T @ b)) - dim) <= qconfig.MATRIX_TOLERANCE * dim


def oracle_conjugation(gate: Gate, paulis: Sequence[PauliKey]) -> Tuple[PauliKey, ...]:
    """The unique Pauli assignment Q with G P G^dag = +-Q, found by exhaustive search."""
    if gate.arity > 2:
        raise ValidationError(f"Oracle supports gates on at most 2 wires, got {gate}")
    if len(paulis) != gate.arity:
        raise ValidationError(f"{gate} needs {gate.arity} Pauli(s), got {len(paulis)}")
    g = gate.matrix
    conjugated = g @ pauli_matrix(paulis) @ g.conj().T
    candidates = itertools.product(list(PauliKey.all()), repeat=gate.arity)
    matches = [q for q in candidates if equal_up_to_phase(pauli_matrix(q), conjugated)]
    if not matches:
        raise UnsupportedGateError(f"{gate} does not map {[str(p) for p in paulis]} to a Pauli")
    return tuple(matches[0])
