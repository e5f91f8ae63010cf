"""
Protocol transcripts.

Every protocol run records an ordered list of entries: who acted, what they
did, on which wires, with which gates. An entry carries a public ``payload``
(classical data the other party sees when the action crosses the channel) and
private ``notes`` (client secrets, adversary outcomes) that never leave the
party that wrote them. Wire custody is tracked so that "sending a qubit" is a
change of holder, never a copy.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, TextIO, Tuple, Union

import pandas as pd

from lib.quantum import Gate, ValidationError

logger = logging.getLogger(__name__)


class Party(str, Enum):
    CLIENT = "Client"
    SERVER = "Server"
    ADVERSARY = "Adversary"

    def __str__(self) -> str:
        return self.value


# Actions
REQUEST_QUBITS = "request_qubits"
DISTRIBUTE = "distribute"
ATTACK = "attack"
PREPARE = "prepare"
ENCRYPT = "encrypt"
SEND = "send"
RETURN = "return"
APPLY = "apply"
LOCAL_GATE = "local_gate"
CORRECT = "correct"
REQUEST_GATE = "request_gate"
REVEAL_DECOYS = "reveal_decoys"
MEASURE_DECOY = "measure_decoy"
PUBLISH = "publish"
DECOY_VERDICT = "decoy_verdict"
ADVERSARY_MEASURE = "adversary_measure"
ENTANGLE = "entangle"
ANNOUNCE_DELTA = "announce_delta"
MEASURE = "measure"
REQUEST_TRAP_MEASUREMENT = "request_trap_measurement"
TRAP_VERDICT = "trap_verdict"
FINALIZE = "finalize"

# Client actions whose payload reaches the server
SERVER_BOUND_ACTIONS = frozenset({
    REQUEST_QUBITS,
    SEND,
    REQUEST_GATE,
    REVEAL_DECOYS,
    DECOY_VERDICT,
    ANNOUNCE_DELTA,
    REQUEST_TRAP_MEASUREMENT,
})

# Client actions that apply gates locally
CLIENT_GATE_ACTIONS = frozenset({PREPARE, ENCRYPT, LOCAL_GATE, CORRECT, FINALIZE})


@dataclass(frozen=True)
class TranscriptEntry:
    step: int
    party: Party
    action: str
    wires: Tuple[int, ...] = ()
    gates: Tuple[str, ...] = ()
    payload: Dict[str, Any] = field(default_factory=dict)
    notes: Dict[str, Any] = field(default_factory=dict)

    def to_record(self, include_private: bool = True) -> Dict[str, Any]:
        """JSON-ready dict with fields {step, party, action, wires, gates, metadata}."""
        metadata = dict(self.payload)
        if include_private and self.notes:
            metadata["private"] = dict(self.notes)
        return {
            "step": self.step,
            "party": self.party.value,
            "action": self.action,
            "wires": list(self.wires),
            "gates": list(self.gates),
            "metadata": metadata,
        }


class ProtocolTranscript:
    """Ordered record of one protocol run."""

    def __init__(self, label: str = ""):
        self.label = label
        self._entries: List[TranscriptEntry] = []
        self._custody: Dict[int, Party] = {}

    # ------------------------------------------------------------------
    # Recording
    # ------------------------------------------------------------------

    def record(
        self,
        party: Party,
        action: str,
        wires: Sequence[int] = (),
        gates: Iterable[Union[Gate, str]] = (),
        payload: Optional[Dict[str, Any]] = None,
        notes: Optional[Dict[str, Any]] = None,
    ) -> TranscriptEntry:
        entry = TranscriptEntry(
            step=len(self._entries),
            party=Party(party),
            action=action,
            wires=tuple(int(w) for w in wires),
            gates=tuple(str(g) for g in gates),
            payload=dict(payload or {}),
            notes=dict(notes or {}),
        )
        self._entries.append(entry)
        logger.debug("%s step %d: %s %s wires=%s gates=%s", self.label, entry.step,
                     entry.party, action, list(entry.wires), list(entry.gates))
        return entry

    def hold(self, wires: Iterable[int], party: Party) -> None:
        """Declare the initial holder of ``wires`` (no transcript entry)."""
        for w in wires:
            self._custody[int(w)] = Party(party)

    def transfer(
        self,
        wires: Sequence[int],
        sender: Party,
        receiver: Party,
        action: str,
        payload: Optional[Dict[str, Any]] = None,
        notes: Optional[Dict[str, Any]] = None,
    ) -> TranscriptEntry:
        """Move custody of ``wires`` from ``sender`` to ``receiver`` and record it once."""
        for w in wires:
            holder = self._custody.get(int(w))
            if holder is not None and holder != sender:
                raise ValidationError(f"{sender} cannot send wire {w}: it is held by {holder}")
        for w in wires:
            self._custody[int(w)] = Party(receiver)
        body = {"to": Party(receiver).value}
        body.update(payload or {})
        return self.record(sender, action, wires, payload=body, notes=notes)

    def custody_of(self, wire: int) -> Optional[Party]:
        return self._custody.get(int(wire))

    def extend(self, other: "ProtocolTranscript") -> None:
        """Append another transcript's entries, renumbering steps."""
        for entry in other:
            self.record(entry.party, entry.action, entry.wires, entry.gates, entry.payload, entry.notes)
        self._custody.update(other._custody)

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    @property
    def entries(self) -> List[TranscriptEntry]:
        return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[TranscriptEntry]:
        return iter(self._entries)

    def find(self, action: str, party: Optional[Party] = None) -> List[TranscriptEntry]:
        return [
            e for e in self._entries
            if e.action == action and (party is None or e.party == party)
        ]

    def server_visible(self) -> List[Dict[str, Any]]:
        """Everything the server can see: its own entries and the client messages it receives.

        Private notes are dropped, and gates a client applied locally are not part
        of any server-bound message.
        """
        visible = []
        for entry in self._entries:
            if entry.party == Party.SERVER or (
                entry.party == Party.CLIENT and entry.action in SERVER_BOUND_ACTIONS
            ):
                record = entry.to_record(include_private=False)
                if entry.party != Party.SERVER:
                    record["gates"] = []
                visible.append(record)
        return visible

    def client_gate_lists(self) -> List[Tuple[str, ...]]:
        return [e.gates for e in self._entries if e.party == Party.CLIENT and e.action in CLIENT_GATE_ACTIONS]

    # ------------------------------------------------------------------
    # Export
    # ------------------------------------------------------------------

    def to_records(self, include_private: bool = True) -> List[Dict[str, Any]]:
        return [e.to_record(include_private) for e in self._entries]

    def write_jsonl(self, target: Union[str, TextIO], include_private: bool = True) -> None:
        """One JSON object per line."""
        lines = [json.dumps(r, separators=(",", ":")) for r in self.to_records(include_private)]
        text = "\n".join(lines) + ("\n" if lines else "")
        if isinstance(target, str):
            with open(target, "w", encoding="utf-8") as f:
                f.write(text)
        else:
            target.write(text)

    def to_dataframe(self) -> pd.DataFrame:
        columns = ["step", "party", "action", "wires", "gates", "n_gates"]
        rows = [
            {
                "step": e.step,
                "party": e.party.value,
                "action": e.action,
                "wires": list(e.wires),
                "gates": list(e.gates),
                "n_gates": len(e.gates),
            }
            for e in self._entries
        ]
        return pd.DataFrame(rows, columns=columns)

    def gate_counts(self, party: Party) -> Dict[str, int]:
        """Gate applications by kind for one party, e.g. {"CNOT": 2, "H": 1}."""
        df = self.to_dataframe()
        df = df[df["party"] == Party(party).value]
        if party == Party.CLIENT:
            df = df[df["action"].isin(CLIENT_GATE_ACTIONS)]
        gates = df["gates"].explode().dropna()
        counts = gates.value_counts()
        return {str(name): int(counts[name]) for name in sorted(counts.index)}

    def __repr__(self) -> str:
        return f"ProtocolTranscript({self.label!r}, entries={len(self._entries)})"
