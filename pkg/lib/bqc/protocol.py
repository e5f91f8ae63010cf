"""
End to end run: the qubit handshake followed by the blind measurement run.

The handshake comes from ``handshake``. If the decoy check passes, the server
entangles the computation wires along the graph and the client announces
blinded angles vertex by vertex. Trap wires are measured in the
computational basis at client-chosen points of that loop, and the client
finalises the returned output wires with H and T only.

Computation wires become graph vertices in role order: the i-th computation
wire is vertex i, and its secret rotation count is that vertex's theta.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from lib.quantum import (
    DensityMatrix,
    Gate,
    QuantumState,
    ValidationError,
    expectation_fidelity,
    fidelity,
    reduced_density,
)

from . import config
from .attackers import BaseAttacker, HonestAttacker
from .bfk import (
    ClientSecrets,
    GraphSpec,
    MeasurementPattern,
    blind_measurements,
    direct_pattern_output,
    drop_measured,
    finalize_output,
)
from .handshake import DecoyRecord, QubitRole, RoleKind, TrapResult, Verdict, run_handshake, trap_verify
from .transcript import (
    ENTANGLE,
    MEASURE,
    REQUEST_TRAP_MEASUREMENT,
    RETURN,
    TRAP_VERDICT,
    Party,
    ProtocolTranscript,
)
from .utils import derive_rng, random_bits

logger = logging.getLogger(__name__)

SECRETS_STREAM = config.CLIENT_STREAM + ".secrets"
COMPUTATION_STREAM = config.SERVER_STREAM + ".computation"


@dataclass
class ProtocolRun:
    """Everything one handshake-guarded run produced."""

    handshake_verdict: Verdict
    decoy_records: List[DecoyRecord]
    roles: List[QubitRole]
    transcript: ProtocolTranscript
    trap_result: Optional[TrapResult] = None
    outcomes: Dict[int, int] = field(default_factory=dict)
    output: Optional[QuantumState] = field(default=None, repr=False)
    output_density: Optional[DensityMatrix] = field(default=None, repr=False)
    fidelity: Optional[float] = None

    @property
    def aborted(self) -> bool:
        return self.handshake_verdict is Verdict.ABORT

    @property
    def passed(self) -> bool:
        return (
            self.handshake_verdict is Verdict.PASS
            and self.trap_result is not None
            and self.trap_result.verdict is Verdict.PASS
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "handshake_verdict": self.handshake_verdict.value,
            "mismatches": [r.wire for r in self.decoy_records if r.mismatch],
            "trap_verdict": None if self.trap_result is None else self.trap_result.verdict.value,
            "trap_failures": [] if self.trap_result is None else list(self.trap_result.failures),
            "decrypted_outcomes": {str(v): o for v, o in sorted(self.outcomes.items())},
            "output_fidelity_vs_direct": self.fidelity,
        }


def _schedule_traps(trap_wires: List[int], steps: int, rng: np.random.Generator) -> Dict[int, List[int]]:
    """Slot in 0..steps for each trap wire; slot i means "before the i-th measurement"."""
    schedule: Dict[int, List[int]] = {}
    for wire, slot in zip(trap_wires, rng.integers(0, steps + 1, size=len(trap_wires))):
        schedule.setdefault(int(slot), []).append(wire)
    return schedule


def run_protocol(
    graph: GraphSpec,
    pattern: MeasurementPattern,
    k: int,
    l: int,
    attacker: Optional[BaseAttacker],
    seed: int,
    basis_rule: str = config.DEFAULT_BASIS_RULE,
    transcript: Optional[ProtocolTranscript] = None,
) -> ProtocolRun:
    """
    Run the handshake and the blind measurement run for ``graph`` with k decoys and l traps.

    Args:
        graph (GraphSpec): Computation graph; m = graph.m computation wires
        pattern (MeasurementPattern): Target angles of the measured vertices
        k (int): Decoy count
        l (int): Trap count
        attacker (BaseAttacker, optional): Distribution-step attacker, honest if None
        seed (int): Run seed
        basis_rule (str): Decoy basis rule, "uniform" or "announced"
        transcript (ProtocolTranscript, optional): Transcript to append to

    Returns:
        ProtocolRun: Verdicts, outcomes, finalised output and its fidelity.
                     Only the handshake fields are set when the decoy check aborts.
    """
    graph.check_dependencies()
    for v in graph.measurement_order:
        if v not in pattern.phi:
            raise ValidationError(f"Pattern has no angle for measured vertex {v}")
    if not graph.outputs:
        raise ValidationError("Graph has no output vertex")

    attacker = attacker or HonestAttacker()
    if transcript is None:
        transcript = ProtocolTranscript("protocol")
    hs = run_handshake(graph.m, k, l, attacker, seed, basis_rule, transcript)
    run = ProtocolRun(hs.verdict, hs.records, hs.roles, transcript)
    if hs.verdict is Verdict.ABORT:
        logger.info("protocol stopped at the decoy check: seed=%d attacker=%s", seed, attacker.name)
        return run

    register = hs.register
    comp_wires = hs.wires_with(RoleKind.COMPUTATION)
    trap_wires = hs.wires_with(RoleKind.TRAP)

    # entangle
    for u, v in sorted(graph.edges):
        register.apply_gate(Gate.CZ, [comp_wires[u], comp_wires[v]])
        transcript.record(Party.SERVER, ENTANGLE, [comp_wires[u], comp_wires[v]], [Gate.CZ])

    client_rng = derive_rng(seed, SECRETS_STREAM)
    server_rng = derive_rng(seed, COMPUTATION_STREAM)
    measured = list(graph.measurement_order)
    secrets = ClientSecrets(
        theta={v: hs.roles[w].n for v, w in enumerate(comp_wires)},
        r=dict(zip(measured, random_bits(client_rng, len(measured)))),
    )
    schedule = _schedule_traps(trap_wires, len(measured), client_rng)
    trap_reported: Dict[int, int] = {}

    def measure_traps(index: int) -> None:
        for wire in schedule.get(index, []):
            transcript.record(Party.CLIENT, REQUEST_TRAP_MEASUREMENT, [wire], payload={"basis": "computational"})
            outcome = register.measure_computational(wire, float(server_rng.random()))
            trap_reported[wire] = outcome
            transcript.record(Party.SERVER, MEASURE, [wire], payload={"outcome": outcome})

    # measurements run on a snapshot of the computation block; the register keeps the traps
    state = register.merge(comp_wires)
    wire_of = {v: v for v in range(graph.m)}
    labels = {v: comp_wires[v] for v in range(graph.m)}
    decrypted, state, deltas, reported = blind_measurements(
        state, wire_of, graph, pattern, secrets, server_rng, transcript,
        labels=labels, before_step=measure_traps,
    )
    residual = drop_measured(state, wire_of, deltas, reported) if deltas else state

    run.trap_result = trap_verify([(w, hs.roles[w].bit) for w in trap_wires], trap_reported)
    transcript.record(Party.CLIENT, TRAP_VERDICT, notes=run.trap_result.to_record())

    # return and finalise
    output_labels = [comp_wires[v] for v in graph.outputs]
    transcript.transfer(output_labels, Party.SERVER, Party.CLIENT, RETURN)
    final = finalize_output(residual, graph, secrets, decrypted, transcript, wire_labels=output_labels)

    reference = direct_pattern_output(graph, pattern)
    n_out = len(graph.outputs)
    run.outcomes = decrypted
    if final.n_wires == n_out:
        run.output = final
        run.fidelity = fidelity(final, reference)
    else:
        # an adversary ancilla is still entangled with the outputs
        run.output_density = reduced_density(final, list(range(n_out)))
        run.fidelity = expectation_fidelity(run.output_density, reference)

    logger.info(
        "protocol run: seed=%d attacker=%s handshake=%s traps=%s fidelity=%.12f",
        seed, attacker.name, run.handshake_verdict, run.trap_result.verdict, run.fidelity,
    )
    return run
