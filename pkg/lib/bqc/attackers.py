"""
Attacker models for the qubit distribution step of the handshake.

An attacker sits between the server and the client while the server hands
out |0> qubits. It may entangle them with wires it keeps (BellEntangler) or
swap them for other states (StateReplacer). Attacks are per qubit; coherent
attacks across several decoys are not modelled.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence, Type

import numpy as np

from lib.quantum import Angle8, Gate, ProductRegister, ValidationError, new_state

from .transcript import ADVERSARY_MEASURE, ATTACK, Party, ProtocolTranscript

logger = logging.getLogger(__name__)

ANCILLA_BASES = ("uniform", "computational", "hadamard")

# replacement recipes: gates turning |0> into the named state
REPLACEMENT_RECIPES: Dict[str, List[Gate]] = {
    "0": [],
    "1": [Gate.X],
    "+": [Gate.H],
    "-": [Gate.X, Gate.H],
}


class BaseAttacker(ABC):
    """
    Abstract base class for everything that can tamper with distributed qubits.
    """

    name: str = ""

    def __init__(self, targets: Optional[Sequence[int]] = None):
        """
        Args:
            targets (Sequence[int], optional): Client wire indices to attack.
                                               None attacks every distributed wire.
        """
        self.targets = None if targets is None else sorted({int(t) for t in targets})

    def attacked(self, n_client_wires: int) -> List[int]:
        if self.targets is None:
            return list(range(n_client_wires))
        for t in self.targets:
            if not 0 <= t < n_client_wires:
                raise ValidationError(f"Attack target {t} out of range for {n_client_wires} wires")
        return list(self.targets)

    @abstractmethod
    def intercept(
        self,
        register: ProductRegister,
        client_wires: Sequence[int],
        rng: np.random.Generator,
        transcript: ProtocolTranscript,
    ) -> List[int]:
        """
        Tamper with freshly distributed |0> wires before the client receives them.

        Args:
            register (ProductRegister): Shared register, client wires already added.
            client_wires (Sequence[int]): Wires headed for the client.
            rng (numpy.random.Generator): Adversary stream.
            transcript (ProtocolTranscript): Run transcript.

        Returns:
            List[int]: Ancilla wires the attacker keeps.
        """
        pass

    def after_reveal(
        self,
        register: ProductRegister,
        ancillas: Sequence[int],
        rng: np.random.Generator,
        transcript: ProtocolTranscript,
    ) -> Dict[int, int]:
        """Hook run once the client has revealed its decoy positions. Default: nothing."""
        return {}

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "targets": self.targets}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


class HonestAttacker(BaseAttacker):
    """Leaves every qubit as |0>."""

    name = "honest"

    def intercept(self, register, client_wires, rng, transcript):
        return []


class BellEntangler(BaseAttacker):
    """Replaces |0> by half of (|00> + |11>)/sqrt(2), keeping the other half.

    After the reveal the adversary measures each kept ancilla in a basis
    picked by ``ancilla_basis``; the outcomes are only written to the
    transcript as private adversary notes.
    """

    name = "bell"

    def __init__(
        self,
        targets: Optional[Sequence[int]] = None,
        ancilla_basis: str = "uniform",
        measure_ancillas: bool = True,
    ):
        super().__init__(targets)
        if ancilla_basis not in ANCILLA_BASES:
            raise ValidationError(f"Unknown ancilla basis '{ancilla_basis}', expected one of {ANCILLA_BASES}")
        self.ancilla_basis = ancilla_basis
        self.measure_ancillas = measure_ancillas

    def intercept(self, register, client_wires, rng, transcript):
        ancillas = []
        for index in self.attacked(len(client_wires)):
            wire = client_wires[index]
            ancilla = register.add_block(new_state(1))[0]
            register.apply_gate(Gate.H, [wire])
            register.apply_gate(Gate.CNOT, [wire, ancilla])
            ancillas.append(ancilla)
            transcript.hold([ancilla], Party.ADVERSARY)
            transcript.record(Party.ADVERSARY, ATTACK, [wire, ancilla], [Gate.H, Gate.CNOT],
                              notes={"strategy": self.name})
        return ancillas

    def after_reveal(self, register, ancillas, rng, transcript):
        outcomes: Dict[int, int] = {}
        if not self.measure_ancillas:
            return outcomes
        for ancilla in ancillas:
            basis = self.ancilla_basis
            if basis == "uniform":
                basis = "computational" if rng.integers(0, 2) == 0 else "hadamard"
            rand = float(rng.random())
            if basis == "computational":
                outcome = register.measure_computational(ancilla, rand)
            else:
                outcome = register.measure_rotated(ancilla, Angle8(0), rand)
            outcomes[ancilla] = outcome
            transcript.record(Party.ADVERSARY, ADVERSARY_MEASURE, [ancilla],
                              notes={"basis": basis, "outcome": outcome})
        return outcomes

    def describe(self):
        info = super().describe()
        info.update({"ancilla_basis": self.ancilla_basis, "measure_ancillas": self.measure_ancillas})
        return info


class StateReplacer(BaseAttacker):
    """Replaces |0> by a fixed state from REPLACEMENT_RECIPES."""

    name = "replace"

    def __init__(self, targets: Optional[Sequence[int]] = None, recipe: str = "1"):
        super().__init__(targets)
        recipe = str(recipe)
        if recipe not in REPLACEMENT_RECIPES:
            raise ValidationError(f"Unknown replacement recipe '{recipe}', expected one of {sorted(REPLACEMENT_RECIPES)}")
        self.recipe = recipe

    def intercept(self, register, client_wires, rng, transcript):
        gates = REPLACEMENT_RECIPES[self.recipe]
        for index in self.attacked(len(client_wires)):
            wire = client_wires[index]
            register.apply_gates(gates, wire)
            transcript.record(Party.ADVERSARY, ATTACK, [wire], gates,
                              notes={"strategy": self.name, "recipe": self.recipe})
        return []

    def describe(self):
        info = super().describe()
        info["recipe"] = self.recipe
        return info


ATTACKERS: Dict[str, Type[BaseAttacker]] = {
    HonestAttacker.name: HonestAttacker,
    BellEntangler.name: BellEntangler,
    StateReplacer.name: StateReplacer,
}


def make_attacker(name: str, **params: Any) -> BaseAttacker:
    """Build an attacker by name ("honest", "bell", "replace")."""
    key = str(name).strip().lower()
    if key not in ATTACKERS:
        raise ValidationError(f"Unknown attacker '{name}', expected one of {sorted(ATTACKERS)}")
    try:
        return ATTACKERS[key](**params)
    except TypeError as exc:
        raise ValidationError(f"Bad parameters for attacker '{name}': {exc}") from None
