"""
ProductRegister: a register kept as a tensor product of independent blocks.

The handshake hands out dozens of wires, but an attacker only ever
entangles a client wire with its own ancilla, so the joint state factorizes
into small blocks. Each block is an ordinary QuantumState and obeys WIRE_CAP;
blocks are merged only when a two-wire gate spans them.
"""

from __future__ import annotations

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .angles import Angle8
from .density import DensityMatrix, reduced_density
from .errors import WireArgumentError, WireCapError
from .gates import Gate
from .statevec import (
    QuantumState,
    apply_gate,
    basis_state,
    measure_computational,
    measure_rotated,
    outcome_probabilities,
    permute_wires,
    project_out,
    rotated_basis_vector,
    tensor,
)

logger = logging.getLogger(__name__)

# global wire -> (block id, wire inside the block)
WireLocation = Tuple[int, int]


class ProductRegister:
    """Mutable shared register addressed by global wire index."""

    def __init__(self, total_cap: Optional[int] = None, config_module=None):
        """
        Args:
            total_cap (int, optional): Largest number of wires across all blocks
            config_module (module, optional): Simulator config. If None, lib.quantum.config is used.
                Its WIRE_CAP bounds every merged block.
        """
        if config_module is None:
            config_module = config
        self.total_cap = total_cap
        self.block_cap = config_module.WIRE_CAP
        self._blocks: Dict[int, QuantumState] = {}
        self._members: Dict[int, List[int]] = {}  # block id -> global wires, local order
        self._location: List[WireLocation] = []
        self._next_block = 0

    # ------------------------------------------------------------------
    # Layout
    # ------------------------------------------------------------------

    @property
    def n_wires(self) -> int:
        return len(self._location)

    @property
    def block_count(self) -> int:
        return len(self._blocks)

    def add_block(self, state: QuantumState) -> List[int]:
        """Append ``state`` as a new independent block and return its global wires."""
        if state.n_wires > self.block_cap:
            raise WireCapError(f"Block of {state.n_wires} wires exceeds the cap of {self.block_cap}")
        if self.total_cap is not None and self.n_wires + state.n_wires > self.total_cap:
            raise WireCapError(
                f"Register would hold {self.n_wires + state.n_wires} wires, cap is {self.total_cap}"
            )
        block_id = self._next_block
        self._next_block += 1
        wires = list(range(self.n_wires, self.n_wires + state.n_wires))
        self._blocks[block_id] = state
        self._members[block_id] = list(wires)
        for local, _ in enumerate(wires):
            self._location.append((block_id, local))
        return wires

    def _check(self, wire: int) -> WireLocation:
        if not 0 <= wire < self.n_wires:
            raise WireArgumentError(f"Wire {wire} out of range for a {self.n_wires}-wire register")
        return self._location[wire]

    def _reindex(self, block_id: int) -> None:
        for local, wire in enumerate(self._members[block_id]):
            self._location[wire] = (block_id, local)

    def _merge_blocks(self, block_ids: Sequence[int]) -> int:
        """Fuse blocks into the first one listed; returns the surviving id."""
        block_ids = list(dict.fromkeys(block_ids))
        if len(block_ids) == 1:
            return block_ids[0]
        width = sum(self._blocks[b].n_wires for b in block_ids)
        if width > self.block_cap:
            raise WireCapError(f"Merging blocks {block_ids} needs {width} wires, cap is {self.block_cap}")
        keep = block_ids[0]
        merged = tensor(*(self._blocks[b] for b in block_ids))
        members: List[int] = []
        for b in block_ids:
            members.extend(self._members[b])
        for b in block_ids[1:]:
            del self._blocks[b]
            del self._members[b]
        self._blocks[keep] = merged
        self._members[keep] = members
        self._reindex(keep)
        return keep

    def entangled_with(self, wires: Iterable[int]) -> List[int]:
        """``wires`` followed by every other wire sharing a block with them."""
        wires = [int(w) for w in wires]
        extra: List[int] = []
        for w in wires:
            block_id, _ = self._check(w)
            extra.extend(x for x in self._members[block_id] if x not in wires and x not in extra)
        return wires + sorted(extra)

    # ------------------------------------------------------------------
    # Operations
    # ------------------------------------------------------------------

    def apply_gate(self, gate: Gate, wires: Sequence[int]) -> None:
        wires = [int(w) for w in wires]
        if len(wires) != gate.arity:
            raise WireArgumentError(f"{gate} acts on {gate.arity} wire(s), got {wires}")
        block_id = self._merge_blocks([self._check(w)[0] for w in wires])
        local = [self._location[w][1] for w in wires]
        self._blocks[block_id] = apply_gate(self._blocks[block_id], gate, local)

    def apply_gates(self, gates: Iterable[Gate], wire: int) -> None:
        for gate in gates:
            self.apply_gate(gate, [wire])

    def _detach(self, wire: int, vector: np.ndarray) -> None:
        """Split a just-measured wire (now in state ``vector``) into its own block."""
        block_id, local = self._location[wire]
        state = self._blocks[block_id]
        if state.n_wires == 1:
            return
        self._blocks[block_id] = project_out(state, local, vector)
        self._members[block_id].remove(wire)
        self._reindex(block_id)
        new_id = self._next_block
        self._next_block += 1
        self._blocks[new_id] = QuantumState(1, vector)
        self._members[new_id] = [wire]
        self._location[wire] = (new_id, 0)

    def outcome_probabilities(self, wire: int, delta: Angle8) -> Tuple[float, float]:
        block_id, local = self._check(wire)
        return outcome_probabilities(self._blocks[block_id], local, delta)

    def measure_rotated(self, wire: int, delta: Angle8, rand: float) -> int:
        """Same rule as statevec.measure_rotated; the measured wire is split off afterwards."""
        block_id, local = self._check(wire)
        outcome, state = measure_rotated(self._blocks[block_id], local, delta, rand)
        self._blocks[block_id] = state
        self._detach(wire, rotated_basis_vector(delta, outcome))
        return outcome

    def measure_computational(self, wire: int, rand: float) -> int:
        block_id, local = self._check(wire)
        outcome, state = measure_computational(self._blocks[block_id], local, rand)
        self._blocks[block_id] = state
        self._detach(wire, basis_state(1, outcome).amplitudes)
        return outcome

    # ------------------------------------------------------------------
    # Views
    # ------------------------------------------------------------------

    def merge(self, wires: Sequence[int]) -> QuantumState:
        """Joint pure state of ``wires`` in the order given, then any wire entangled with them.

        The returned layout is ``entangled_with(wires)``.
        """
        order = self.entangled_with(wires)
        block_ids = list(dict.fromkeys(self._location[w][0] for w in order))
        width = sum(self._blocks[b].n_wires for b in block_ids)
        if width > self.block_cap:
            raise WireCapError(f"Merged view needs {width} wires, cap is {self.block_cap}")
        joint = tensor(*(self._blocks[b] for b in block_ids))
        layout: List[int] = []
        for b in block_ids:
            layout.extend(self._members[b])
        return permute_wires(joint, [layout.index(w) for w in order])

    def reduced_density(self, wires: Sequence[int]) -> DensityMatrix:
        """Reduced state on ``wires`` (in that order)."""
        wires = [int(w) for w in wires]
        return reduced_density(self.merge(wires), list(range(len(wires))))

    def block_of(self, wire: int) -> QuantumState:
        block_id, _ = self._check(wire)
        return self._blocks[block_id]

    def __repr__(self) -> str:
        return f"ProductRegister(n_wires={self.n_wires}, blocks={self.block_count})"
