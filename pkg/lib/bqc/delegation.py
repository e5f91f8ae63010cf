"""
Circuit-model blind delegation.

The client runs an {H, T, CNOT} circuit but can only apply the single-qubit
gates of its ClientCase. Every gate it cannot do is delegated: the client
pads the wires with fresh one-time-pad keys, hands them to the server, the
server applies the gate, and the client removes the propagated keys with
allowed gates only.

Optional trap requests send extra, indistinguishable gate requests to the
server on two dedicated trap wires numbered after the computation wires, so
the server only learns padded gate counts. The trap wires live in their own
two-wire state and never join the computation register.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from lib.quantum import (
    ConfigurationError,
    Gate,
    QuantumState,
    ValidationError,
    apply_gate,
    apply_gates,
    fidelity,
    new_state,
)
from lib.quantum import config as qconfig

from . import config
from .pauli_frame import ClientCase, PauliKey, key_gates, propagate
from .transcript import (
    CORRECT,
    ENCRYPT,
    LOCAL_GATE,
    APPLY,
    REQUEST_GATE,
    RETURN,
    SEND,
    Party,
    ProtocolTranscript,
)
from .utils import derive_rng

logger = logging.getLogger(__name__)

CIRCUIT_GATES = frozenset({Gate.H, Gate.T, Gate.CNOT})
TRAP_WIRE_COUNT = 2


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircuitOp:
    gate: Gate
    wires: Tuple[int, ...]

    def to_record(self) -> Dict[str, Any]:
        return {"g": self.gate.value, "w": list(self.wires)}


@dataclass(frozen=True)
class Circuit:
    """An ordered list of {H, T, CNOT} operations on ``n_wires`` wires."""

    n_wires: int
    ops: Tuple[CircuitOp, ...] = ()

    def __post_init__(self) -> None:
        if self.n_wires < 1:
            raise ValidationError(f"A circuit needs at least one wire, got {self.n_wires}")
        ops = tuple(self.ops)
        for index, op in enumerate(ops):
            if op.gate not in CIRCUIT_GATES:
                raise ValidationError(f"Op {index}: gate {op.gate} is not in {{H, T, CNOT}}")
            if len(op.wires) != op.gate.arity:
                raise ValidationError(f"Op {index}: {op.gate} needs {op.gate.arity} wire(s), got {list(op.wires)}")
            if len(set(op.wires)) != len(op.wires):
                raise ValidationError(f"Op {index}: CNOT wires must be distinct, got {list(op.wires)}")
            for w in op.wires:
                if not 0 <= w < self.n_wires:
                    raise ValidationError(f"Op {index}: wire {w} out of range for {self.n_wires} wires")
        object.__setattr__(self, "ops", ops)

    @classmethod
    def from_ops(cls, n_wires: int, ops: Iterable[Tuple[Any, Sequence[int]]]) -> "Circuit":
        """Build from (gate or gate name, wires) pairs."""
        parsed = []
        for gate, wires in ops:
            try:
                gate = gate if isinstance(gate, Gate) else Gate.parse(gate)
            except ValueError as exc:
                raise ValidationError(str(exc)) from None
            parsed.append(CircuitOp(gate, tuple(int(w) for w in wires)))
        return cls(n_wires, tuple(parsed))

    def gate_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for op in self.ops:
            counts[op.gate.value] = counts.get(op.gate.value, 0) + 1
        return dict(sorted(counts.items()))

    def __len__(self) -> int:
        return len(self.ops)


def simulate_direct(circuit: Circuit, initial: Optional[QuantumState] = None) -> QuantumState:
    """Plain statevector run of the circuit, the reference for delegated runs."""
    state = new_state(circuit.n_wires) if initial is None else initial
    for op in circuit.ops:
        state = apply_gate(state, op.gate, op.wires)
    return state


# ---------------------------------------------------------------------------
# Session
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SendPoint:
    """A client -> server qubit transmission, kept for the blindness analysis.

    ``plaintext`` is the register just before encryption; the server receives
    ``wires`` of it under a uniformly random key.
    """

    step: int
    wires: Tuple[int, ...]
    plaintext: QuantumState = field(repr=False)
    trap: bool = False


class DelegationSession:
    """Turn-based client/server session for one blind circuit run."""

    def __init__(self, case: ClientCase, seed: int, transcript: Optional[ProtocolTranscript] = None):
        self.case = ClientCase(case)
        self.seed = seed
        # the honest server is deterministic; only the client draws randomness here
        self.client_rng = derive_rng(seed, config.CLIENT_STREAM)
        if transcript is None:
            transcript = ProtocolTranscript(f"delegation[{self.case}]")
        self.transcript = transcript
        self.keys: Dict[int, PauliKey] = {}
        self.send_points: List[SendPoint] = []
        self.trap_checks: List[float] = []

    def _require(self, gate: Gate) -> None:
        if gate not in self.case.delegated_gates:
            raise ConfigurationError(f"{self.case} clients do not delegate {gate}")
        pad_gates = {Gate.T, Gate.X if self.case is ClientCase.CASE2 else Gate.H}
        missing = pad_gates - self.case.allowed_gates
        if missing:
            raise ConfigurationError(f"{self.case} lacks {sorted(g.value for g in missing)} for one-time-pad gates")

    def local_gate(self, state: QuantumState, gate: Gate, wire: int) -> QuantumState:
        """A gate the client applies itself."""
        if gate not in self.case.allowed_gates:
            raise ConfigurationError(f"{self.case} clients cannot apply {gate} locally")
        self.transcript.record(Party.CLIENT, LOCAL_GATE, [wire], [gate])
        return apply_gate(state, gate, [wire])

    def delegate(
        self,
        state: QuantumState,
        gate: Gate,
        wires: Sequence[int],
        trap: bool = False,
        keys: Optional[Sequence[PauliKey]] = None,
        offset: int = 0,
    ) -> QuantumState:
        """One server round: encrypt with fresh keys, send, server gate, return, correct.

        ``keys`` pins the one-time-pad keys instead of drawing them. ``wires``
        are register-wide labels; wire i of ``state`` carries label ``offset + i``.
        """
        self._require(gate)
        wires = [int(w) for w in wires]
        local = [w - offset for w in wires]
        if keys is not None and len(keys) != len(wires):
            raise ValidationError(f"{len(keys)} key(s) for {len(wires)} wire(s)")
        notes = {"trap": True} if trap else {}
        self.transcript.record(Party.CLIENT, REQUEST_GATE, wires, payload={"gate": gate.value}, notes=notes)

        plaintext = state
        if keys is None:
            keys = [PauliKey.random(self.client_rng) for _ in wires]
        for wire, key in zip(wires, keys):
            gates = key_gates(self.case, key)
            state = apply_gates(state, gates, wire - offset)
            self.keys[wire] = key
            self.transcript.record(Party.CLIENT, ENCRYPT, [wire], gates, notes={"key": list(key.as_tuple())})

        sent = self.transcript.transfer(wires, Party.CLIENT, Party.SERVER, SEND)
        self.send_points.append(SendPoint(sent.step, tuple(local), plaintext, trap))

        state = apply_gate(state, gate, local)
        self.transcript.record(Party.SERVER, APPLY, wires, [gate])
        self.transcript.transfer(wires, Party.SERVER, Party.CLIENT, RETURN)

        for wire, key in zip(wires, propagate(gate, keys)):
            gates = key_gates(self.case, key)
            state = apply_gates(state, gates, wire - offset)
            self.keys[wire] = PauliKey()
            self.transcript.record(Party.CLIENT, CORRECT, [wire], gates, notes={"key": list(key.as_tuple())})
        return state


def delegated_cnot(
    session: DelegationSession,
    state: QuantumState,
    control: int,
    target: int,
    keys: Optional[Sequence[PauliKey]] = None,
) -> QuantumState:
    """CNOT(control, target) performed by the server on one-time-padded wires."""
    if control == target:
        raise ValidationError(f"CNOT control and target must differ, got {control}")
    return session.delegate(state, Gate.CNOT, [control, target], keys=keys)


def delegated_h_case2(
    session: DelegationSession,
    state: QuantumState,
    wire: int,
    key: Optional[PauliKey] = None,
) -> QuantumState:
    """H performed by the server for a Case2 client."""
    if session.case is not ClientCase.CASE2:
        raise ConfigurationError(f"{session.case} clients apply H themselves; delegated H is Case2 only")
    return session.delegate(state, Gate.H, [wire], keys=None if key is None else [key])


# ---------------------------------------------------------------------------
# Full circuit
# ---------------------------------------------------------------------------

def _trap_request(session: DelegationSession, traps: QuantumState, n_wires: int) -> QuantumState:
    """Dummy server call on the trap block, checked to return the plain gate's result."""
    trap_wires = [n_wires, n_wires + 1]
    if session.case is ClientCase.CASE2 and session.client_rng.integers(0, 2):
        gate, wires = Gate.H, trap_wires[:1]
    else:
        gate, wires = Gate.CNOT, trap_wires
    after = session.delegate(traps, gate, wires, trap=True, offset=n_wires)
    expected = apply_gate(traps, gate, [w - n_wires for w in wires])
    infidelity = 1.0 - fidelity(expected, after)
    session.trap_checks.append(infidelity)
    if infidelity > qconfig.STATE_TOLERANCE:
        raise ValidationError(f"Trap request returned the trap wires in the wrong state (infidelity {infidelity:.3e})")
    return after


def run_blind_session(
    case: ClientCase,
    circuit: Circuit,
    seed: int,
    trap_gate_requests: int = 0,
    initial_state: Optional[QuantumState] = None,
) -> Tuple[QuantumState, DelegationSession]:
    """Run ``circuit`` blindly and return the computation-wire output and the session."""
    case = ClientCase(case)
    if trap_gate_requests < 0:
        raise ValidationError(f"trap_gate_requests must be >= 0, got {trap_gate_requests}")
    for op in circuit.ops:
        if op.gate not in CIRCUIT_GATES:
            raise ValidationError(f"Gate {op.gate} is not allowed in a delegated circuit")
    session = DelegationSession(case, seed)
    n = circuit.n_wires

    state = new_state(n) if initial_state is None else initial_state
    if state.n_wires != n:
        raise ValidationError(f"Initial state has {state.n_wires} wires, circuit has {n}")
    traps = new_state(TRAP_WIRE_COUNT) if trap_gate_requests else None
    session.transcript.hold(range(n + (TRAP_WIRE_COUNT if traps is not None else 0)), Party.CLIENT)

    slots = np.sort(session.client_rng.integers(0, len(circuit.ops) + 1, size=trap_gate_requests))
    slot_counts = np.bincount(slots, minlength=len(circuit.ops) + 1)

    for index in range(len(circuit.ops) + 1):
        for _ in range(int(slot_counts[index])):
            traps = _trap_request(session, traps, n)
        if index == len(circuit.ops):
            break
        op = circuit.ops[index]
        if op.gate in case.delegated_gates:
            state = session.delegate(state, op.gate, op.wires)
        else:
            state = session.local_gate(state, op.gate, op.wires[0])

    logger.info(
        "blind circuit done: case=%s wires=%d ops=%d trap_requests=%d server_rounds=%d",
        case, n, len(circuit.ops), trap_gate_requests, len(session.send_points),
    )
    return state, session


def run_blind_circuit(
    case: ClientCase,
    circuit: Circuit,
    seed: int,
    trap_gate_requests: int = 0,
) -> Tuple[QuantumState, ProtocolTranscript]:
    """Blind run of ``circuit``; returns (output state, transcript)."""
    output, session = run_blind_session(case, circuit, seed, trap_gate_requests)
    return output, session.transcript
