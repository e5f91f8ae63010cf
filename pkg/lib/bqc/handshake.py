"""
Qubit handshake in front of a measurement-based blind computation.

A client that can only apply H and T cannot make its own qubits. It asks the
server for m+k+l qubits in |0>, turns m of them into |n pi/4> computation
qubits, k into BB84 decoys and l into |0>/|1> traps, and sends them all back.
It then reveals the decoy positions, the server measures the decoys and
publishes the outcomes, and the client aborts on any outcome that contradicts
a decoy measured in its own preparation basis.

Randomness per run comes from ``seed`` through named streams: the client
stream picks roles, the server stream picks decoy bases and measurement
outcomes, the adversary stream drives the attacker.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from lib.quantum import Angle8, Gate, ProductRegister, ValidationError, WireCapError, new_state

from . import config
from .attackers import BaseAttacker, BellEntangler, HonestAttacker
from .transcript import (
    DECOY_VERDICT,
    DISTRIBUTE,
    MEASURE_DECOY,
    PREPARE,
    PUBLISH,
    REQUEST_QUBITS,
    REVEAL_DECOYS,
    SEND,
    Party,
    ProtocolTranscript,
)
from .utils import derive_rng, trial_seed

logger = logging.getLogger(__name__)

_Z_GATES = [Gate.T] * 4
_X_GATES = [Gate.H] + _Z_GATES + [Gate.H]


class Verdict(str, Enum):
    PASS = "Pass"
    ABORT = "Abort"
    FAIL = "Fail"

    def __str__(self) -> str:
        return self.value


class RoleKind(str, Enum):
    COMPUTATION = "Computation"
    DECOY = "Decoy"
    TRAP = "Trap"


class MeasurementBasis(str, Enum):
    COMPUTATIONAL = "computational"
    HADAMARD = "hadamard"


class DecoyTarget(str, Enum):
    """BB84 decoy states."""

    ZERO = "0"
    ONE = "1"
    PLUS = "+"
    MINUS = "-"

    @property
    def basis(self) -> MeasurementBasis:
        if self in (DecoyTarget.ZERO, DecoyTarget.ONE):
            return MeasurementBasis.COMPUTATIONAL
        return MeasurementBasis.HADAMARD

    @property
    def bit(self) -> int:
        """Expected outcome when measured in its own basis."""
        return 0 if self in (DecoyTarget.ZERO, DecoyTarget.PLUS) else 1

    @property
    def gates(self) -> List[Gate]:
        """H/T recipe from |0>; |-> is H then T^4."""
        return {
            DecoyTarget.ZERO: [],
            DecoyTarget.ONE: list(_X_GATES),
            DecoyTarget.PLUS: [Gate.H],
            DecoyTarget.MINUS: [Gate.H] + _Z_GATES,
        }[self]


@dataclass(frozen=True)
class QubitRole:
    """Secret role of one client wire."""

    kind: RoleKind
    n: Optional[Angle8] = None
    target: Optional[DecoyTarget] = None
    bit: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is RoleKind.COMPUTATION and self.n is None:
            raise ValidationError("A computation role needs a rotation count n")
        if self.kind is RoleKind.DECOY and self.target is None:
            raise ValidationError("A decoy role needs a target state")
        if self.kind is RoleKind.TRAP and self.bit not in (0, 1):
            raise ValidationError(f"A trap role needs bit 0 or 1, got {self.bit!r}")

    @classmethod
    def computation(cls, n: int) -> "QubitRole":
        return cls(RoleKind.COMPUTATION, n=Angle8(int(n)))

    @classmethod
    def decoy(cls, target: DecoyTarget) -> "QubitRole":
        return cls(RoleKind.DECOY, target=DecoyTarget(target))

    @classmethod
    def trap(cls, bit: int) -> "QubitRole":
        return cls(RoleKind.TRAP, bit=int(bit))

    @property
    def gates(self) -> List[Gate]:
        if self.kind is RoleKind.COMPUTATION:
            return [Gate.H] + [Gate.T] * self.n.k
        if self.kind is RoleKind.DECOY:
            return self.target.gates
        return list(_X_GATES) if self.bit else []

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {"role": self.kind.value}
        if self.kind is RoleKind.COMPUTATION:
            record["n"] = self.n.k
        elif self.kind is RoleKind.DECOY:
            record["target"] = self.target.value
        else:
            record["bit"] = self.bit
        return record


@dataclass(frozen=True)
class DecoyRecord:
    wire: int
    target: DecoyTarget
    basis: MeasurementBasis
    outcome: int
    matched: bool
    mismatch: bool

    def to_record(self) -> Dict[str, Any]:
        return {
            "wire": self.wire,
            "target": self.target.value,
            "basis": self.basis.value,
            "outcome": self.outcome,
            "matched": self.matched,
            "mismatch": self.mismatch,
        }


@dataclass(frozen=True)
class TrapResult:
    verdict: Verdict
    failures: Tuple[int, ...] = ()

    def to_record(self) -> Dict[str, Any]:
        return {"verdict": self.verdict.value, "failures": list(self.failures)}


@dataclass
class HandshakeRun:
    """State after the decoy check."""

    register: ProductRegister
    transcript: ProtocolTranscript
    roles: List[QubitRole]
    ancillas: List[int]
    verdict: Verdict
    records: List[DecoyRecord]

    def wires_with(self, kind: RoleKind) -> List[int]:
        return [w for w, role in enumerate(self.roles) if role.kind is kind]


# ---------------------------------------------------------------------------
# Distribution and preparation
# ---------------------------------------------------------------------------

def assign_roles(m: int, k: int, l: int, seed: int) -> List[QubitRole]:
    """Client's secret choice of positions, rotation counts, decoy targets and trap bits."""
    for name, value in (("m", m), ("k", k), ("l", l)):
        if value < 0:
            raise ValidationError(f"{name} must be >= 0, got {value}")
    rng = derive_rng(seed, config.CLIENT_STREAM)
    kinds = [RoleKind.COMPUTATION] * m + [RoleKind.DECOY] * k + [RoleKind.TRAP] * l
    kinds = [kinds[i] for i in rng.permutation(len(kinds))]
    targets = list(DecoyTarget)
    roles = []
    for kind in kinds:
        if kind is RoleKind.COMPUTATION:
            roles.append(QubitRole.computation(int(rng.integers(0, 8))))
        elif kind is RoleKind.DECOY:
            roles.append(QubitRole.decoy(targets[int(rng.integers(0, 4))]))
        else:
            roles.append(QubitRole.trap(int(rng.integers(0, 2))))
    return roles


def server_distribute(
    m: int,
    k: int,
    l: int,
    attacker: Optional[BaseAttacker],
    seed: int,
    transcript: Optional[ProtocolTranscript] = None,
    wire_cap: Optional[int] = None,
) -> Tuple[ProductRegister, ProtocolTranscript]:
    """The client asks for m+k+l qubits and the server sends them in |0>.

    Client wires are 0..m+k+l-1; wires added by the attacker come after them.
    """
    total = m + k + l
    if min(m, k, l) < 0 or total < 1:
        raise ValidationError(f"Need m, k, l >= 0 and m+k+l >= 1, got m={m} k={k} l={l}")
    cap = config.HANDSHAKE_WIRE_CAP if wire_cap is None else wire_cap
    if total > cap:
        raise WireCapError(f"{total} client wires exceeds the handshake cap of {cap}")
    attacker = attacker or HonestAttacker()
    if transcript is None:
        transcript = ProtocolTranscript("handshake")
    register = ProductRegister(total_cap=cap)

    transcript.record(Party.CLIENT, REQUEST_QUBITS, payload={"count": total})
    client_wires = [register.add_block(new_state(1))[0] for _ in range(total)]
    transcript.hold(client_wires, Party.SERVER)
    attacker.intercept(register, client_wires, derive_rng(seed, config.ADVERSARY_STREAM), transcript)
    transcript.transfer(client_wires, Party.SERVER, Party.CLIENT, DISTRIBUTE, payload={"count": total})
    logger.debug("distributed %d wires under %r", total, attacker)
    return register, transcript


def client_prepare(
    register: ProductRegister,
    roles: Sequence[QubitRole],
    transcript: ProtocolTranscript,
) -> Tuple[ProductRegister, ProtocolTranscript]:
    """Apply each role's H/T recipe to its wire, then send every wire back to the server."""
    wires = list(range(len(roles)))
    if not roles or len(roles) > register.n_wires:
        raise ValidationError(f"{len(roles)} roles for a {register.n_wires}-wire register")
    for w in wires:
        if transcript.custody_of(w) is not Party.CLIENT:
            raise ValidationError(f"Role for wire {w}, but the client does not hold that wire")
    held = [w for w in range(register.n_wires) if transcript.custody_of(w) is Party.CLIENT]
    if held != wires:
        raise ValidationError(f"{len(roles)} roles for {len(held)} client wires")

    for w, role in zip(wires, roles):
        gates = role.gates
        register.apply_gates(gates, w)
        transcript.record(Party.CLIENT, PREPARE, [w], gates, notes=role.to_record())
    transcript.transfer(wires, Party.CLIENT, Party.SERVER, SEND)
    return register, transcript


# ---------------------------------------------------------------------------
# Decoy check
# ---------------------------------------------------------------------------

def decoy_check(
    register: ProductRegister,
    decoys: Sequence[Tuple[int, DecoyTarget]],
    server_basis_choices: Optional[Sequence[MeasurementBasis]],
    seed: int,
    transcript: ProtocolTranscript,
    basis_rule: str = config.DEFAULT_BASIS_RULE,
    attacker: Optional[BaseAttacker] = None,
    ancillas: Sequence[int] = (),
) -> Tuple[Verdict, List[DecoyRecord], ProtocolTranscript]:
    """Reveal decoys, let the server measure and publish, compare matched-basis outcomes.

    With ``basis_rule="announced"`` the client also reveals each decoy's
    basis, so every decoy is measured in its own basis. Explicit
    ``server_basis_choices`` override the rule.
    """
    if basis_rule not in config.BASIS_RULES:
        raise ValidationError(f"Unknown basis rule '{basis_rule}', expected one of {config.BASIS_RULES}")
    for wire, _ in decoys:
        if not 0 <= wire < register.n_wires:
            raise ValidationError(f"Decoy position {wire} out of range for {register.n_wires} wires")
    if server_basis_choices is not None and len(server_basis_choices) != len(decoys):
        raise ValidationError(f"{len(server_basis_choices)} basis choices for {len(decoys)} decoys")

    positions = [int(w) for w, _ in decoys]
    reveal = {"positions": positions}
    if basis_rule == "announced":
        reveal["bases"] = [DecoyTarget(t).basis.value for _, t in decoys]
    transcript.record(Party.CLIENT, REVEAL_DECOYS, positions, payload=reveal)

    if attacker is not None and ancillas:
        attacker.after_reveal(register, ancillas, derive_rng(seed, config.ADVERSARY_STREAM + ".reveal"), transcript)

    server_rng = derive_rng(seed, config.SERVER_STREAM)
    records: List[DecoyRecord] = []
    for index, (wire, target) in enumerate(decoys):
        target = DecoyTarget(target)
        if server_basis_choices is not None:
            basis = MeasurementBasis(server_basis_choices[index])
        elif basis_rule == "announced":
            basis = target.basis
        else:
            basis = MeasurementBasis.COMPUTATIONAL if server_rng.integers(0, 2) == 0 else MeasurementBasis.HADAMARD
        rand = float(server_rng.random())
        if basis is MeasurementBasis.COMPUTATIONAL:
            outcome = register.measure_computational(wire, rand)
        else:
            outcome = register.measure_rotated(wire, Angle8(0), rand)
        transcript.record(Party.SERVER, MEASURE_DECOY, [wire], payload={"basis": basis.value})
        matched = basis is target.basis
        records.append(DecoyRecord(wire, target, basis, outcome, matched, matched and outcome != target.bit))

    transcript.record(
        Party.SERVER, PUBLISH, positions,
        payload={"bases": [r.basis.value for r in records], "outcomes": [r.outcome for r in records]},
    )
    mismatches = [r.wire for r in records if r.mismatch]
    verdict = Verdict.ABORT if mismatches else Verdict.PASS
    transcript.record(Party.CLIENT, DECOY_VERDICT, payload={"verdict": verdict.value})
    if verdict is Verdict.ABORT:
        logger.warning("decoy check aborted: mismatches on wires %s", mismatches)
    return verdict, records, transcript


def trap_verify(records: Sequence[Tuple[int, int]], server_reported: Mapping[int, int]) -> TrapResult:
    """Pass iff every trap's reported outcome equals its prepared bit."""
    failures = tuple(
        int(wire) for wire, bit in records
        if server_reported.get(wire) is None or int(server_reported[wire]) != int(bit)
    )
    if failures:
        logger.warning("trap verification failed on wires %s", list(failures))
        return TrapResult(Verdict.FAIL, failures)
    return TrapResult(Verdict.PASS)


def run_handshake(
    m: int,
    k: int,
    l: int,
    attacker: Optional[BaseAttacker],
    seed: int,
    basis_rule: str = config.DEFAULT_BASIS_RULE,
    transcript: Optional[ProtocolTranscript] = None,
) -> HandshakeRun:
    """Distribution, preparation and decoy check in order."""
    attacker = attacker or HonestAttacker()
    roles = assign_roles(m, k, l, seed)
    register, transcript = server_distribute(m, k, l, attacker, seed, transcript)
    ancillas = list(range(m + k + l, register.n_wires))
    client_prepare(register, roles, transcript)
    decoys = [(w, r.target) for w, r in enumerate(roles) if r.kind is RoleKind.DECOY]
    verdict, records, _ = decoy_check(
        register, decoys, None, seed, transcript,
        basis_rule=basis_rule, attacker=attacker, ancillas=ancillas,
    )
    return HandshakeRun(register, transcript, roles, ancillas, verdict, records)


# ---------------------------------------------------------------------------
# Detection experiments
# ---------------------------------------------------------------------------

def binomial_interval(successes: int, trials: int, sigma: float = config.SIGMA_MULTIPLIER) -> Tuple[float, float]:
    """rate +- sigma * sqrt(rate (1 - rate) / trials), clipped to [0, 1]."""
    if trials <= 0:
        return 0.0, 1.0
    rate = successes / trials
    half = sigma * np.sqrt(rate * (1.0 - rate) / trials)
    return float(max(0.0, rate - half)), float(min(1.0, rate + half))


def predicted_rates(attacker: BaseAttacker, k: int) -> Optional[Dict[str, float]]:
    """Model detection probabilities for both basis rules, where the model has one."""
    if isinstance(attacker, HonestAttacker):
        return {"uniform": 0.0, "announced": 0.0}
    if isinstance(attacker, BellEntangler) and attacker.targets is None:
        # a matched decoy contradicts with probability 1/2; uniform bases match half the time
        return {"uniform": 1.0 - 0.75 ** k, "announced": 1.0 - 0.5 ** k}
    return None


@dataclass
class DetectionReport:
    k: int
    attacker: Dict[str, Any]
    trials: int
    basis_rule: str
    aborts: int
    matched_decoys: int
    matched_mismatches: int
    all_matched_trials: int
    all_matched_aborts: int
    predicted: Optional[Dict[str, float]] = None
    table: Optional[pd.DataFrame] = field(default=None, repr=False)

    @property
    def detection_rate(self) -> float:
        return self.aborts / self.trials

    @property
    def ci3sigma(self) -> Tuple[float, float]:
        return binomial_interval(self.aborts, self.trials)

    @property
    def per_decoy_rate(self) -> Optional[float]:
        if not self.matched_decoys:
            return None
        return self.matched_mismatches / self.matched_decoys

    def to_dict(self) -> Dict[str, Any]:
        lo, hi = self.ci3sigma
        result: Dict[str, Any] = {
            "k": self.k,
            "attacker": self.attacker,
            "trials": self.trials,
            "basis_rule": self.basis_rule,
            "detection_rate": self.detection_rate,
            "ci3sigma": [lo, hi],
            "matched_decoys": self.matched_decoys,
            "matched_detection_rate": self.per_decoy_rate,
            "matched_ci3sigma": list(binomial_interval(self.matched_mismatches, self.matched_decoys)),
            "all_matched_trials": self.all_matched_trials,
            "all_matched_detection_rate": (
                self.all_matched_aborts / self.all_matched_trials if self.all_matched_trials else None
            ),
            "predicted": self.predicted,
        }
        return result


def detection_experiment(
    k: int,
    attacker: BaseAttacker,
    trials: int,
    seed: int,
    m: int = 0,
    l: int = 0,
    basis_rule: str = config.DEFAULT_BASIS_RULE,
    keep_table: bool = False,
) -> DetectionReport:
    """Repeat the handshake ``trials`` times with per-trial seeds and count aborts."""
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    if m + k + l < 1:
        raise ValidationError("Need at least one distributed qubit")
    aborts = matched = matched_mismatch = all_matched = all_matched_aborts = 0
    rows = []
    for index in range(trials):
        t_seed = trial_seed(seed, index)
        run = run_handshake(m, k, l, attacker, t_seed, basis_rule)
        trial_matched = sum(r.matched for r in run.records)
        trial_mismatch = sum(r.mismatch for r in run.records)
        aborted = run.verdict is Verdict.ABORT
        aborts += aborted
        matched += trial_matched
        matched_mismatch += trial_mismatch
        if run.records and trial_matched == len(run.records):
            all_matched += 1
            all_matched_aborts += aborted
        if keep_table:
            rows.append({
                "trial": index,
                "seed": t_seed,
                "verdict": run.verdict.value,
                "matched": trial_matched,
                "mismatches": trial_mismatch,
            })

    report = DetectionReport(
        k=k,
        attacker=attacker.describe(),
        trials=trials,
        basis_rule=basis_rule,
        aborts=aborts,
        matched_decoys=matched,
        matched_mismatches=matched_mismatch,
        all_matched_trials=all_matched,
        all_matched_aborts=all_matched_aborts,
        predicted=predicted_rates(attacker, k),
        table=pd.DataFrame(rows) if keep_table else None,
    )
    logger.info(
        "detection experiment: k=%d attacker=%s trials=%d rate=%.4f ci=%s",
        k, attacker.name, trials, report.detection_rate, report.ci3sigma,
    )
    return report
