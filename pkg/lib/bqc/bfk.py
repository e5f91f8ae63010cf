"""
Measurement-based blind computation.

The client prepares every vertex as |theta> = T^theta H |0>, the server
entangles them with CZ along the graph edges and then measures each vertex in
the {|+delta>, |-delta>} basis the client announces, where

    delta = theta + phi' + 4r   (mod 8, units of pi/4)

and phi' is the target angle corrected for earlier outcomes. The client
decrypts every reported outcome with its r bit. Unmeasured (output) vertices
come back with their theta rotation and a Pauli byproduct, both of which the
client removes in ``finalize_output``.

Dependencies follow a flow f: measuring u with outcome s puts X^s on f(u) and
Z^s on every other neighbour of f(u).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from lib.quantum import (
    Angle8,
    Gate,
    QuantumState,
    ValidationError,
    apply_gate,
    apply_gates,
    measure_rotated,
    new_state,
    project_out,
    rotated_basis_vector,
    tensor,
)

from . import config
from .pauli_frame import ClientCase, decompose_pauli
from .transcript import (
    ANNOUNCE_DELTA,
    ENTANGLE,
    FINALIZE,
    MEASURE,
    PREPARE,
    RETURN,
    SEND,
    Party,
    ProtocolTranscript,
)
from .utils import derive_rng, parity

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dependencies:
    x: FrozenSet[int] = frozenset()
    z: FrozenSet[int] = frozenset()


@dataclass(frozen=True)
class GraphSpec:
    """Resource graph plus measurement order and per-vertex dependency sets.

    Vertices not listed in ``measurement_order`` are outputs.
    """

    m: int
    edges: FrozenSet[Edge]
    measurement_order: Tuple[int, ...]
    dependencies: Mapping[int, Dependencies] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValidationError(f"A graph needs at least one vertex, got m={self.m}")
        edges = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValidationError(f"Self-loop on vertex {u}")
            for w in (u, v):
                if not 0 <= w < self.m:
                    raise ValidationError(f"Edge ({u}, {v}) references vertex {w}, graph has {self.m}")
            edges.add((min(u, v), max(u, v)))
        order = tuple(int(v) for v in self.measurement_order)
        if len(set(order)) != len(order):
            raise ValidationError(f"Measurement order repeats a vertex: {list(order)}")
        for v in order:
            if not 0 <= v < self.m:
                raise ValidationError(f"Measurement order references vertex {v}, graph has {self.m}")
        deps = {}
        for v, dep in dict(self.dependencies).items():
            v = int(v)
            for w in (v, *dep.x, *dep.z):
                if not 0 <= int(w) < self.m:
                    raise ValidationError(f"Dependency of vertex {v} references vertex {w}, graph has {self.m}")
            deps[v] = Dependencies(frozenset(int(u) for u in dep.x), frozenset(int(u) for u in dep.z))
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "measurement_order", order)
        object.__setattr__(self, "dependencies", deps)

    @property
    def outputs(self) -> Tuple[int, ...]:
        measured = set(self.measurement_order)
        return tuple(v for v in range(self.m) if v not in measured)

    def deps(self, vertex: int) -> Dependencies:
        return self.dependencies.get(vertex, Dependencies())

    def neighbours(self, vertex: int) -> FrozenSet[int]:
        return frozenset(
            (v if u == vertex else u) for u, v in self.edges if vertex in (u, v)
        )

    def degree(self, vertex: int) -> int:
        return len(self.neighbours(vertex))

    def check_dependencies(self) -> None:
        """Every dependency must be a vertex measured before the one that depends on it."""
        position = {v: i for i, v in enumerate(self.measurement_order)}
        for v in range(self.m):
            dep = self.deps(v)
            for u in sorted(dep.x | dep.z):
                if u not in position:
                    raise ValidationError(f"Vertex {v} depends on unmeasured vertex {u}")
                if v in position and position[u] >= position[v]:
                    raise ValidationError(f"Vertex {v} depends on vertex {u}, which is measured later")

    @classmethod
    def from_flow(
        cls,
        m: int,
        edges: Iterable[Edge],
        measurement_order: Sequence[int],
        flow: Mapping[int, int],
    ) -> "GraphSpec":
        """Dependency sets from a flow: X-deps(w) = {u : f(u) = w}, Z-deps(w) = {u : w in N(f(u)), w != u}."""
        edges = frozenset((min(u, v), max(u, v)) for u, v in edges)
        adjacency: Dict[int, set] = {v: set() for v in range(m)}
        for u, v in edges:
            adjacency[u].add(v)
            adjacency[v].add(u)
        x: Dict[int, set] = {v: set() for v in range(m)}
        z: Dict[int, set] = {v: set() for v in range(m)}
        for u in measurement_order:
            if u not in flow:
                raise ValidationError(f"Measured vertex {u} has no flow successor")
            target = flow[u]
            if target not in adjacency[u]:
                raise ValidationError(f"Flow successor {target} of vertex {u} is not a neighbour")
            x[target].add(u)
            for w in adjacency[target]:
                if w != u:
                    z[w].add(u)
        deps = {
            v: Dependencies(frozenset(x[v]), frozenset(z[v]))
            for v in range(m) if x[v] or z[v]
        }
        return cls(m, edges, tuple(measurement_order), deps)


def chain_graph(n: int) -> GraphSpec:
    """1D cluster 0-1-...-(n-1): vertices 0..n-2 measured in order, n-1 is the output."""
    if n < 1:
        raise ValidationError(f"A chain needs at least one vertex, got {n}")
    edges = [(i, i + 1) for i in range(n - 1)]
    flow = {i: i + 1 for i in range(n - 1)}
    return GraphSpec.from_flow(n, edges, list(range(n - 1)), flow)


def brickwork_graph(rows: int, columns: int) -> GraphSpec:
    """Brickwork layout.

    Vertex (row i, column j) has id j * rows + i and vertices are measured in
    id order (column by column); the last column is the output. Rows are
    horizontal chains. Rows i and i+1 are joined by vertical rungs at columns
    j and j+2 where j % 8 == 2 for even i and j % 8 == 6 for odd i, as long as
    j + 2 is still inside the grid. The flow is f(i, j) = (i, j + 1).
    """
    if rows < 1 or columns < 1:
        raise ValidationError(f"Brickwork needs rows >= 1 and columns >= 1, got {rows}x{columns}")

    def vid(i: int, j: int) -> int:
        return j * rows + i

    edges: List[Edge] = []
    for i in range(rows):
        for j in range(columns - 1):
            edges.append((vid(i, j), vid(i, j + 1)))
    for i in range(rows - 1):
        offset = 2 if i % 2 == 0 else 6
        for j in range(columns):
            if j % 8 == offset and j + 2 < columns:
                edges.append((vid(i, j), vid(i + 1, j)))
                edges.append((vid(i, j + 2), vid(i + 1, j + 2)))

    m = rows * columns
    order = [v for v in range(m) if v // rows < columns - 1]
    flow = {vid(i, j): vid(i, j + 1) for j in range(columns - 1) for i in range(rows)}
    return GraphSpec.from_flow(m, edges, order, flow)


# ---------------------------------------------------------------------------
# Patterns and secrets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementPattern:
    """Target angle phi for every measured vertex."""

    phi: Mapping[int, Angle8]

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", {int(v): Angle8(int(a)) for v, a in dict(self.phi).items()})

    @classmethod
    def from_ints(cls, phi: Mapping[int, int]) -> "MeasurementPattern":
        return cls({v: Angle8(int(k)) for v, k in phi.items()})

    def angle(self, vertex: int) -> Angle8:
        return self.phi[vertex]


@dataclass(frozen=True)
class ClientSecrets:
    """theta per vertex and r per measured vertex."""

    theta: Mapping[int, Angle8]
    r: Mapping[int, int]

    def __post_init__(self) -> None:
        for v, bit in dict(self.r).items():
            if bit not in (0, 1):
                raise ValidationError(f"r for vertex {v} must be 0 or 1, got {bit!r}")
        object.__setattr__(self, "theta", {int(v): Angle8(int(a)) for v, a in dict(self.theta).items()})
        object.__setattr__(self, "r", {int(v): int(b) for v, b in dict(self.r).items()})

    @classmethod
    def zero(cls, graph: GraphSpec) -> "ClientSecrets":
        return cls({v: Angle8(0) for v in range(graph.m)}, {v: 0 for v in graph.measurement_order})

    @classmethod
    def random(cls, graph: GraphSpec, rng: np.random.Generator) -> "ClientSecrets":
        theta = {v: Angle8.random(rng) for v in range(graph.m)}
        r = {v: int(rng.integers(0, 2)) for v in graph.measurement_order}
        return cls(theta, r)


def secret_combinations(graph: GraphSpec, output_theta: Optional[Angle8] = None) -> Iterator[ClientSecrets]:
    """Every (theta, r) assignment on the measured vertices.

    Output vertices get ``output_theta`` (0 when not given) so the space stays
    8^m * 2^m for m measured vertices.
    """
    measured = list(graph.measurement_order)
    fixed = Angle8(0) if output_theta is None else output_theta
    for thetas in itertools.product(range(8), repeat=len(measured)):
        for bits in itertools.product((0, 1), repeat=len(measured)):
            theta = {v: fixed for v in graph.outputs}
            theta.update({v: Angle8(k) for v, k in zip(measured, thetas)})
            yield ClientSecrets(theta, dict(zip(measured, bits)))


# ---------------------------------------------------------------------------
# Angle arithmetic
# ---------------------------------------------------------------------------

def compute_delta(theta: Angle8, phi_prime: Angle8, r: int) -> Angle8:
    """delta = theta + phi' + r*pi."""
    return Angle8(theta.k + phi_prime.k + 4 * r)


def adapt_angle(phi: Angle8, s_x: int, s_z: int) -> Angle8:
    """phi' = (-1)^sX phi + sZ*pi."""
    signed = -phi.k if s_x else phi.k
    return Angle8(signed + 4 * s_z)


def decrypt_outcome(reported: int, r: int) -> int:
    return int(reported) ^ int(r)


def byproducts(graph: GraphSpec, outcomes: Mapping[int, int], vertex: int) -> Tuple[int, int]:
    """(sX, sZ): parities of decrypted outcomes over the vertex's dependency sets."""
    dep = graph.deps(vertex)
    return parity(outcomes[u] for u in dep.x), parity(outcomes[u] for u in dep.z)


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

def theta_gates(k: Angle8) -> List[Gate]:
    """H then T^k: the client's preparation of |k pi/4> from |0>."""
    return [Gate.H] + [Gate.T] * k.k


def prepare_theta_qubit(k: Angle8) -> QuantumState:
    """(|0> + e^{ik pi/4}|1>)/sqrt(2) = T^k H |0>."""
    return apply_gates(new_state(1), theta_gates(k), 0)


def build_graph_state(qubits: Sequence[QuantumState], graph: GraphSpec) -> QuantumState:
    """Tensor the per-vertex states and apply CZ once per edge."""
    if len(qubits) != graph.m:
        raise ValidationError(f"Need one state per vertex ({graph.m}), got {len(qubits)}")
    state = tensor(*qubits)
    for u, v in sorted(graph.edges):
        state = apply_gate(state, Gate.CZ, [u, v])
    return state


# ---------------------------------------------------------------------------
# Measurement loop
# ---------------------------------------------------------------------------

def _check_coverage(graph: GraphSpec, pattern: MeasurementPattern, secrets: ClientSecrets) -> None:
    graph.check_dependencies()
    for v in graph.measurement_order:
        if v not in pattern.phi:
            raise ValidationError(f"Pattern has no angle for measured vertex {v}")
        if v not in secrets.r:
            raise ValidationError(f"Secrets have no r bit for measured vertex {v}")
    for v in range(graph.m):
        if v not in secrets.theta:
            raise ValidationError(f"Secrets have no theta for vertex {v}")


def blind_measurements(
    state: QuantumState,
    wire_of: Mapping[int, int],
    graph: GraphSpec,
    pattern: MeasurementPattern,
    secrets: ClientSecrets,
    server_rng: np.random.Generator,
    transcript: ProtocolTranscript,
    labels: Optional[Mapping[int, int]] = None,
    before_step: Optional[Callable[[int], None]] = None,
) -> Tuple[Dict[int, int], QuantumState, Dict[int, Angle8], Dict[int, int]]:
    """Measure every vertex in order on ``state``; returns (decrypted, state, deltas, reported).

    The measured wires stay in ``state``, projected onto the reported basis
    vector. ``labels`` maps vertices to the wire numbers written in the
    transcript (default ``wire_of``). ``before_step(i)`` runs before the i-th
    measurement and once more after the last one.
    """
    labels = wire_of if labels is None else labels
    decrypted: Dict[int, int] = {}
    deltas: Dict[int, Angle8] = {}
    reported: Dict[int, int] = {}
    for index, v in enumerate(graph.measurement_order):
        if before_step is not None:
            before_step(index)
        s_x, s_z = byproducts(graph, decrypted, v)
        phi_prime = adapt_angle(pattern.angle(v), s_x, s_z)
        delta = compute_delta(secrets.theta[v], phi_prime, secrets.r[v])
        transcript.record(
            Party.CLIENT, ANNOUNCE_DELTA, [labels[v]],
            payload={"vertex": v, "delta": delta.k},
            notes={"theta": secrets.theta[v].k, "r": secrets.r[v], "phi_prime": phi_prime.k},
        )
        outcome, state = measure_rotated(state, wire_of[v], delta, float(server_rng.random()))
        transcript.record(Party.SERVER, MEASURE, [labels[v]], payload={"vertex": v, "outcome": outcome})
        deltas[v] = delta
        reported[v] = outcome
        decrypted[v] = decrypt_outcome(outcome, secrets.r[v])
    if before_step is not None:
        before_step(len(graph.measurement_order))
    return decrypted, state, deltas, reported


def drop_measured(
    state: QuantumState,
    wire_of: Mapping[int, int],
    deltas: Mapping[int, Angle8],
    reported: Mapping[int, int],
) -> QuantumState:
    """Project out measured wires (highest wire first) so only unmeasured wires remain."""
    for v in sorted(deltas, key=lambda u: wire_of[u], reverse=True):
        state = project_out(state, wire_of[v], rotated_basis_vector(deltas[v], reported[v]))
    return state


def run_bfk(
    graph: GraphSpec,
    pattern: MeasurementPattern,
    secrets: ClientSecrets,
    seed: int,
    transcript: Optional[ProtocolTranscript] = None,
) -> Tuple[Dict[int, int], QuantumState, ProtocolTranscript]:
    """Prepare, entangle and blindly measure ``graph``.

    Returns the decrypted outcomes, the raw state of the output vertices (in
    ``graph.outputs`` order, still carrying theta rotations and byproducts)
    and the transcript. ``seed`` drives only the server's measurement
    randomness; the client's secrets are passed in.
    """
    _check_coverage(graph, pattern, secrets)
    if not graph.outputs:
        raise ValidationError("Graph has no output vertex")
    if transcript is None:
        transcript = ProtocolTranscript("bfk")
    server_rng = derive_rng(seed, config.SERVER_STREAM)

    qubits = []
    for v in range(graph.m):
        gates = theta_gates(secrets.theta[v])
        qubits.append(apply_gates(new_state(1), gates, 0))
        transcript.hold([v], Party.CLIENT)
        transcript.record(Party.CLIENT, PREPARE, [v], gates, notes={"theta": secrets.theta[v].k})
        transcript.transfer([v], Party.CLIENT, Party.SERVER, SEND)

    state = build_graph_state(qubits, graph)
    for u, v in sorted(graph.edges):
        transcript.record(Party.SERVER, ENTANGLE, [u, v], [Gate.CZ])

    wire_of = {v: v for v in range(graph.m)}
    decrypted, state, deltas, reported = blind_measurements(
        state, wire_of, graph, pattern, secrets, server_rng, transcript
    )
    residual = drop_measured(state, wire_of, deltas, reported) if deltas else state
    transcript.transfer(list(graph.outputs), Party.SERVER, Party.CLIENT, RETURN)
    logger.debug("bfk run: %d measured, outcomes=%s", len(deltas), decrypted)
    return decrypted, residual, transcript


def finalize_output(
    residual: QuantumState,
    graph: GraphSpec,
    secrets: ClientSecrets,
    outcomes: Mapping[int, int],
    transcript: Optional[ProtocolTranscript] = None,
    wire_labels: Optional[Sequence[int]] = None,
) -> QuantumState:
    """Undo theta with T^(8 - theta), then the X^sX Z^sZ byproduct, on every output.

    Only H and T are used, so a Case1 client can do this itself. Output k
    sits on wire k; wires past the outputs (adversary ancillas) are left alone.
    """
    outputs = graph.outputs
    if residual.n_wires < len(outputs):
        raise ValidationError(f"Residual has {residual.n_wires} wires, graph has {len(outputs)} outputs")
    labels = list(outputs) if wire_labels is None else list(wire_labels)
    state = residual
    for wire, v in enumerate(outputs):
        s_x, s_z = byproducts(graph, outcomes, v)
        gates = [Gate.T] * ((8 - secrets.theta[v].k) % 8) + decompose_pauli(ClientCase.CASE1, s_x, s_z)
        state = apply_gates(state, gates, wire)
        if transcript is not None:
            transcript.record(Party.CLIENT, FINALIZE, [labels[wire]], gates,
                              notes={"vertex": v, "sx": s_x, "sz": s_z})
    return state


# ---------------------------------------------------------------------------
# Unblinded references
# ---------------------------------------------------------------------------

def direct_pattern_output(graph: GraphSpec, pattern: MeasurementPattern) -> QuantumState:
    """Graph state from |+>, every measured vertex projected onto |+phi>, outputs in order."""
    for v in graph.measurement_order:
        if v not in pattern.phi:
            raise ValidationError(f"Pattern has no angle for measured vertex {v}")
    if not graph.outputs:
        raise ValidationError("Graph has no output vertex")
    plus = prepare_theta_qubit(Angle8(0))
    state = build_graph_state([plus] * graph.m, graph)
    for v in sorted(graph.measurement_order, reverse=True):
        state = project_out(state, v, rotated_basis_vector(pattern.angle(v), 0))
    return state


def chain_reference(phis: Sequence[Angle8]) -> QuantumState:
    """H T^(-phi) per measured vertex, starting from |+>: what a chain computes."""
    state = prepare_theta_qubit(Angle8(0))
    for phi in phis:
        state = apply_gates(state, [Gate.T] * ((-phi).k) + [Gate.H], 0)
    return state
