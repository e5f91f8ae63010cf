"""
Exact statevector simulator.

Wire ordering: wire 0 is the MOST significant bit of the amplitude index, so
on two wires index 2 (binary 10) is |1>_0 |0>_1. Every module in the lab uses
this convention.

States are immutable values; every operation returns a new QuantumState.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .angles import Angle8
from .errors import WireArgumentError, WireCapError
from .gates import Gate

logger = logging.getLogger(__name__)

_SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized amplitude vector over ``n_wires`` wires."""

    n_wires: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.n_wires < 1:
            raise WireArgumentError(f"A state needs at least one wire, got {self.n_wires}")
        if self.n_wires > config.WIRE_CAP:
            raise WireCapError(f"{self.n_wires} wires exceeds the cap of {config.WIRE_CAP}")
        if amps.shape != (1 << self.n_wires,):
            raise WireArgumentError(
                f"Expected {1 << self.n_wires} amplitudes for {self.n_wires} wires, got {amps.shape[0]}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > config.STATE_TOLERANCE:
            raise WireArgumentError(f"State is not normalized (norm^2 = {norm!r})")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dimension(self) -> int:
        return 1 << self.n_wires

    def tensor(self) -> np.ndarray:
        """Amplitudes as an n-index tensor of shape (2,)*n, axis i = wire i."""
        return self.amplitudes.reshape((2,) * self.n_wires)

    def to_json(self) -> List[List[float]]:
        """Amplitudes as [re, im] pairs rounded to COMPLEX_DIGITS significant digits."""
        digits = config.COMPLEX_DIGITS
        return [
            [float(f"{a.real:.{digits}g}"), float(f"{a.imag:.{digits}g}")]
            for a in self.amplitudes
        ]

    def __repr__(self) -> str:
        return f"QuantumState(n_wires={self.n_wires})"


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def new_state(n_wires: int, cap: Optional[int] = None) -> QuantumState:
    """|0...0> on ``n_wires`` wires."""
    cap = config.WIRE_CAP if cap is None else cap
    if n_wires > cap:
        raise WireCapError(f"{n_wires} wires exceeds the cap of {cap}")
    if n_wires < 1:
        raise WireArgumentError(f"A state needs at least one wire, got {n_wires}")
    amps = np.zeros(1 << n_wires, dtype=complex)
    amps[0] = 1.0
    return QuantumState(n_wires, amps)


def basis_state(n_wires: int, index: int) -> QuantumState:
    """Computational basis state |index> (wire 0 = most significant bit)."""
    if not 0 <= index < (1 << n_wires):
        raise WireArgumentError(f"Basis index {index} out of range for {n_wires} wires")
    amps = np.zeros(1 << n_wires, dtype=complex)
    amps[index] = 1.0
    return QuantumState(n_wires, amps)


def from_amplitudes(amplitudes: Sequence[complex], normalize: bool = False) -> QuantumState:
    """Wrap a raw amplitude vector, optionally normalizing it first."""
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    n_wires = int(round(np.log2(amps.shape[0]))) if amps.shape[0] else 0
    if amps.shape[0] != (1 << n_wires):
        raise WireArgumentError(f"Amplitude count {amps.shape[0]} is not a power of two")
    if normalize:
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise WireArgumentError("Cannot normalize the zero vector")
        amps = amps / norm
    return QuantumState(n_wires, amps)


def rotated_basis_vector(delta: Angle8, outcome: int) -> np.ndarray:
    """|+delta> for outcome 0 and |-delta> for outcome 1."""
    sign = 1.0 if outcome == 0 else -1.0
    return np.array([1.0, sign * delta.phase], dtype=complex) * _SQRT_HALF


def tensor(*states: QuantumState) -> QuantumState:
    """Kronecker product; the first argument occupies the lowest wire indices."""
    if not states:
        raise WireArgumentError("tensor() needs at least one state")
    amps = states[0].amplitudes
    for state in states[1:]:
        amps = np.kron(amps, state.amplitudes)
    return QuantumState(sum(s.n_wires for s in states), amps)


def permute_wires(state: QuantumState, order: Sequence[int]) -> QuantumState:
    """Reorder wires: new wire i is old wire ``order[i]``."""
    order = [int(w) for w in order]
    if sorted(order) != list(range(state.n_wires)):
        raise WireArgumentError(f"{order} is not a permutation of {state.n_wires} wires")
    return QuantumState(state.n_wires, np.transpose(state.tensor(), order).reshape(-1))


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------

def _check_wires(n_wires: int, wires: Sequence[int], arity: int) -> List[int]:
    wires = [int(w) for w in wires]
    if len(wires) != arity:
        raise WireArgumentError(f"Gate acts on {arity} wire(s), got {len(wires)}: {wires}")
    if len(set(wires)) != len(wires):
        raise WireArgumentError(f"Wires must be distinct, got {wires}")
    for w in wires:
        if not 0 <= w < n_wires:
            raise WireArgumentError(f"Wire {w} out of range for a {n_wires}-wire state")
    return wires


def apply_matrix(state: QuantumState, matrix: np.ndarray, wires: Sequence[int]) -> QuantumState:
    """Apply a 2^k x 2^k matrix to ``wires`` (first listed wire = most significant)."""
    k = len(wires)
    wires = _check_wires(state.n_wires, wires, k)
    op = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    psi = np.tensordot(op, state.tensor(), axes=(list(range(k, 2 * k)), wires))
    psi = np.moveaxis(psi, list(range(k)), wires)
    return QuantumState(state.n_wires, psi.reshape(-1))


def apply_gate(state: QuantumState, gate: Gate, wires: Sequence[int]) -> QuantumState:
    """Apply ``gate`` on ``wires``; CNOT/CZ take (control, target)."""
    _check_wires(state.n_wires, wires, gate.arity)
    return apply_matrix(state, gate.matrix, wires)


def apply_gates(state: QuantumState, gates: Iterable[Gate], wire: int) -> QuantumState:
    """Apply a list of single-wire gates to one wire, first gate first."""
    for gate in gates:
        state = apply_gate(state, gate, [wire])
    return state


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------

def _branch_amplitudes(state: QuantumState, wire: int, bra: np.ndarray) -> np.ndarray:
    """Contract <bra| on ``wire``; returns the unnormalized rest-of-register tensor."""
    moved = np.moveaxis(state.tensor(), wire, 0)
    return np.tensordot(np.conj(bra), moved, axes=([0], [0]))


def _measure(
    state: QuantumState,
    wire: int,
    basis: Tuple[np.ndarray, np.ndarray],
    rand: float,
) -> Tuple[int, QuantumState]:
    _check_wires(state.n_wires, [wire], 1)
    rest0 = _branch_amplitudes(state, wire, basis[0])
    rest1 = _branch_amplitudes(state, wire, basis[1])
    p0 = float(np.vdot(rest0, rest0).real)
    p1 = float(np.vdot(rest1, rest1).real)
    outcome = 0 if rand < p0 else 1
    # a branch of probability ~0 can only be picked through rounding
    if outcome == 1 and p1 < config.STATE_TOLERANCE:
        outcome = 0
    rest, prob = (rest0, p0) if outcome == 0 else (rest1, p1)
    collapsed = np.multiply.outer(basis[outcome], rest / np.sqrt(prob))
    collapsed = np.moveaxis(collapsed, 0, wire)
    logger.debug("measured wire %d -> %d (p0=%.6f)", wire, outcome, p0)
    return outcome, QuantumState(state.n_wires, collapsed.reshape(-1))


def outcome_probabilities(state: QuantumState, wire: int, delta: Angle8) -> Tuple[float, float]:
    """(p_plus, p_minus) for a measurement of ``wire`` in the {|+delta>, |-delta>} basis."""
    _check_wires(state.n_wires, [wire], 1)
    probs = []
    for outcome in (0, 1):
        rest = _branch_amplitudes(state, wire, rotated_basis_vector(delta, outcome))
        probs.append(float(np.vdot(rest, rest).real))
    return probs[0], probs[1]


def measure_rotated(
    state: QuantumState, wire: int, delta: Angle8, rand: float
) -> Tuple[int, QuantumState]:
    """Measure ``wire`` in {|+delta>, |-delta>}.

    Outcome 0 is the |+delta> branch and is chosen iff ``rand < p_plus``. The
    returned state keeps all wires, with the measured one projected onto the
    observed basis vector.
    """
    basis = (rotated_basis_vector(delta, 0), rotated_basis_vector(delta, 1))
    return _measure(state, wire, basis, rand)


def measure_computational(state: QuantumState, wire: int, rand: float) -> Tuple[int, QuantumState]:
    """Measure ``wire`` in {|0>, |1>}; outcome 0 iff ``rand < p0``."""
    basis = (np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex))
    return _measure(state, wire, basis, rand)


def project_out(state: QuantumState, wire: int, vector: np.ndarray) -> QuantumState:
    """Remove ``wire`` by projecting it onto ``vector`` and renormalizing.

    Used to drop wires that were already measured, where the projection is
    exact and the remaining register keeps its relative order.
    """
    _check_wires(state.n_wires, [wire], 1)
    if state.n_wires == 1:
        raise WireArgumentError("Cannot project out the only wire of a state")
    rest = _branch_amplitudes(state, wire, np.asarray(vector, dtype=complex))
    prob = float(np.vdot(rest, rest).real)
    if prob < config.STATE_TOLERANCE:
        raise WireArgumentError(f"Wire {wire} has no overlap with the projection vector")
    return QuantumState(state.n_wires - 1, rest.reshape(-1) / np.sqrt(prob))


def factor_out(state: QuantumState, keep: Sequence[int]) -> QuantumState:
    """State of ``keep`` (in that order) when it is a product with the other wires.

    The global phase of the result is arbitrary. Raises WireArgumentError when
    ``keep`` is entangled with the rest.
    """
    keep = [int(w) for w in keep]
    if len(keep) == state.n_wires:
        return permute_wires(state, keep)
    _check_wires(state.n_wires, keep, len(keep))
    moved = np.moveaxis(state.tensor(), keep, list(range(len(keep))))
    u, s, _ = np.linalg.svd(moved.reshape(1 << len(keep), -1), full_matrices=False)
    if s.shape[0] > 1 and s[1] > np.sqrt(config.STATE_TOLERANCE):
        raise WireArgumentError(f"Wires {keep} are entangled with the rest of the register")
    return QuantumState(len(keep), u[:, 0])


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """|<a|b>|^2 for two pure states on the same number of wires."""
    if a.n_wires != b.n_wires:
        raise WireArgumentError(f"Dimension mismatch: {a.n_wires} vs {b.n_wires} wires")
    value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(1.0, value))
