"""
Blindness checks: what the server sees, averaged over the client's secrets.

A transmission point names one client -> server hand-over. For every point the
module builds the secret space (one-time-pad keys, theta values, r bits or
handshake roles), averages the transmitted state over it and measures the
trace distance to the maximally mixed state. Secret spaces up to
ENUMERATION_LIMIT members are enumerated exactly; larger ones are sampled
and the report carries a batch-means standard error.

Points:
    qotp              one-time-padded wires of a fixed input state
    delegation        every SEND of a blind circuit run
    bfk-prepare       a |theta> computation qubit
    bfk-delta         the classical delta announced for each measured vertex
    handshake-return  one wire sent back after preparation, averaged over its secret role
"""

from __future__ import annotations

import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from lib.quantum import (
    Angle8,
    DensityMatrix,
    QuantumState,
    ValidationError,
    WireArgumentError,
    apply_gates,
    maximally_mixed,
    new_state,
    partial_trace,
    trace_distance,
)

from . import config
from .bfk import ClientSecrets, GraphSpec, MeasurementPattern, prepare_theta_qubit, run_bfk, secret_combinations
from .delegation import Circuit, run_blind_session
from .handshake import DecoyTarget, QubitRole
from .pauli_frame import ClientCase, PauliKey, key_gates
from .transcript import (
    ANNOUNCE_DELTA,
    APPLY,
    PUBLISH,
    REQUEST_GATE,
    REVEAL_DECOYS,
    SERVER_BOUND_ACTIONS,
    Party,
    ProtocolTranscript,
)
from .utils import derive_rng

logger = logging.getLogger(__name__)

TRANSMISSION_POINTS = ("qotp", "delegation", "bfk-prepare", "bfk-delta", "handshake-return")

# metadata keys that must never reach the server
HIDDEN_FIELDS = frozenset({
    "key", "theta", "r", "phi_prime", "trap", "role", "n", "target", "bit",
    "sx", "sz", "private", "strategy", "recipe",
})

_CHUNK = 4096


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SecretSpace:
    """Uniform (or weighted) client secrets at one transmission point.

    ``members`` yields (weight, secret) over the whole space, ``draw`` picks
    one secret uniformly and ``prepare`` gives the state the server receives
    for a secret; the server holds ``wires`` of it.
    """

    point: str
    size: int
    members: Callable[[], Iterator[Tuple[float, Any]]]
    draw: Callable[[np.random.Generator], Any]
    prepare: Callable[[Any], QuantumState]
    wires: Tuple[int, ...]

    @property
    def exhaustive(self) -> bool:
        return self.size <= config.ENUMERATION_LIMIT


@dataclass
class BlindnessInstance:
    """Protocol configuration a transmission point is evaluated on."""

    input_state: Optional[QuantumState] = None  # qotp, default |0>
    case: ClientCase = ClientCase.CASE1
    circuit: Optional[Circuit] = None  # delegation
    trap_gate_requests: int = 0
    send_index: int = 0
    graph: Optional[GraphSpec] = None  # bfk-delta
    pattern: Optional[MeasurementPattern] = None
    m: int = 1  # handshake-return
    k: int = 1
    l: int = 1
    fixed_secrets: bool = False  # collapse the secret space to its first member
    sample_count: int = config.DEFAULT_SAMPLE_COUNT


@dataclass
class BlindnessReport:
    point: str
    dimension: int
    trace_distance: float
    secrets_enumerated: int
    sampled: bool = False
    standard_error: Optional[float] = None
    transmissions: int = 1
    visible_classical: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.trace_distance <= config.BLINDNESS_THRESHOLD

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": self.point,
            "dimension": self.dimension,
            "trace_distance": self.trace_distance,
            "secrets_enumerated": self.secrets_enumerated,
            "sampled": self.sampled,
            "standard_error": self.standard_error,
            "transmissions": self.transmissions,
            "visible_classical": self.visible_classical,
        }


# ---------------------------------------------------------------------------
# Secret spaces
# ---------------------------------------------------------------------------

def _check_point(point: str) -> None:
    if point not in TRANSMISSION_POINTS:
        raise WireArgumentError(f"'{point}' is not a transmission point, expected one of {TRANSMISSION_POINTS}")


def _fixed(space: SecretSpace) -> SecretSpace:
    first = next(iter(space.members()))[1]
    return SecretSpace(space.point, 1, lambda: iter([(1.0, first)]), lambda rng: first, space.prepare, space.wires)


def _key_space(point: str, plaintext: QuantumState, wires: Sequence[int], case: ClientCase) -> SecretSpace:
    """One PauliKey per padded wire."""
    wires = tuple(int(w) for w in wires)
    keys = list(PauliKey.all())
    size = len(keys) ** len(wires)

    def members():
        weight = 1.0 / size
        for combo in itertools.product(keys, repeat=len(wires)):
            yield weight, combo

    def draw(rng):
        return tuple(PauliKey.random(rng) for _ in wires)

    def prepare(combo):
        state = plaintext
        for wire, key in zip(wires, combo):
            state = apply_gates(state, key_gates(case, key), wire)
        return state

    return SecretSpace(point, size, members, draw, prepare, wires)


def _theta_space() -> SecretSpace:
    thetas = list(Angle8.all())

    def members():
        for theta in thetas:
            yield 1.0 / len(thetas), theta

    return SecretSpace("bfk-prepare", len(thetas), members, Angle8.random, prepare_theta_qubit, (0,))


def _role_space(m: int, k: int, l: int) -> SecretSpace:
    """Marginal role distribution of a single returned wire."""
    total = m + k + l
    if total < 1:
        raise ValidationError(f"Need m+k+l >= 1, got m={m} k={k} l={l}")
    roles: List[Tuple[float, QubitRole]] = []
    roles += [(m / total / 8, QubitRole.computation(n)) for n in range(8)] if m else []
    roles += [(k / total / 4, QubitRole.decoy(t)) for t in DecoyTarget] if k else []
    roles += [(l / total / 2, QubitRole.trap(b)) for b in (0, 1)] if l else []
    weights = np.array([w for w, _ in roles])

    def draw(rng):
        return roles[int(rng.choice(len(roles), p=weights))][1]

    def prepare(role):
        return apply_gates(new_state(1), role.gates, 0)

    return SecretSpace("handshake-return", len(roles), lambda: iter(roles), draw, prepare, (0,))


def secret_space(point: str, instance: Optional[BlindnessInstance] = None, seed: int = 0) -> SecretSpace:
    """Secret space of a quantum transmission point (not ``bfk-delta``, which is classical)."""
    _check_point(point)
    instance = instance or BlindnessInstance()
    if point == "qotp":
        plaintext = new_state(1) if instance.input_state is None else instance.input_state
        space = _key_space(point, plaintext, range(plaintext.n_wires), instance.case)
    elif point == "delegation":
        spaces, _ = _delegation_spaces(instance, seed)
        if not 0 <= instance.send_index < len(spaces):
            raise WireArgumentError(
                f"send_index {instance.send_index} out of range for {len(spaces)} transmissions"
            )
        space = spaces[instance.send_index]
    elif point == "bfk-prepare":
        space = _theta_space()
    elif point == "handshake-return":
        space = _role_space(instance.m, instance.k, instance.l)
    else:
        raise WireArgumentError("bfk-delta is a classical point; use delta_distribution")
    return _fixed(space) if instance.fixed_secrets else space


def _delegation_spaces(instance: BlindnessInstance, seed: int) -> Tuple[List[SecretSpace], Any]:
    if instance.circuit is None:
        raise ValidationError("The delegation point needs a circuit")
    _, session = run_blind_session(instance.case, instance.circuit, seed, instance.trap_gate_requests)
    if not session.send_points:
        raise ValidationError("The circuit never sends a qubit to the server")
    spaces = [
        _key_space("delegation", sp.plaintext, sp.wires, instance.case)
        for sp in session.send_points
    ]
    return spaces, session


# ---------------------------------------------------------------------------
# Views
# ---------------------------------------------------------------------------

def _accumulate(members: Iterable[Tuple[float, QuantumState]]) -> np.ndarray:
    """sum_i w_i |psi_i><psi_i| built chunk by chunk."""
    rho = None
    weights: List[float] = []
    rows: List[np.ndarray] = []

    def flush(rho):
        amps = np.stack(rows)
        part = (amps.T * np.asarray(weights)) @ amps.conj()
        return part if rho is None else rho + part

    for weight, state in members:
        weights.append(weight)
        rows.append(state.amplitudes)
        if len(rows) == _CHUNK:
            rho = flush(rho)
            weights, rows = [], []
    if rows:
        rho = flush(rho)
    if rho is None:
        raise WireArgumentError("An ensemble needs at least one member")
    return rho


def _reduce(space: SecretSpace, entries: np.ndarray) -> DensityMatrix:
    n = int(round(np.log2(entries.shape[0])))
    rho = DensityMatrix(n, entries)
    if list(space.wires) == list(range(n)):
        return rho
    return partial_trace(rho, space.wires)


def _view_of(space: SecretSpace, rng: np.random.Generator, sample_count: int) -> Tuple[DensityMatrix, Optional[float], int]:
    """(view, standard error or None, number of secrets used)."""
    if space.exhaustive:
        members = ((w, space.prepare(s)) for w, s in space.members())
        return _reduce(space, _accumulate(members)), None, space.size

    batches = config.SAMPLE_BATCHES
    per_batch = max(1, sample_count // batches)
    views = []
    for _ in range(batches):
        members = ((1.0 / per_batch, space.prepare(space.draw(rng))) for _ in range(per_batch))
        views.append(_reduce(space, _accumulate(members)))
    distances = np.array([distance_to_maximally_mixed(v) for v in views])
    mean = DensityMatrix(views[0].n_wires, sum(v.entries for v in views) / batches)
    error = float(distances.std(ddof=1) / np.sqrt(batches))
    logger.info("%s: %d secrets is too many to enumerate, sampled %d", space.point, space.size, per_batch * batches)
    return mean, error, per_batch * batches


def server_view(point: str, instance: Optional[BlindnessInstance] = None, seed: int = 0) -> DensityMatrix:
    """Density matrix of the transmitted wires averaged over the client's secrets."""
    instance = instance or BlindnessInstance()
    space = secret_space(point, instance, seed)
    view, _, _ = _view_of(space, derive_rng(seed, "blindness"), instance.sample_count)
    return view


def distance_to_maximally_mixed(rho: Any) -> float:
    """(1/2) ||rho - I/d||_1. Accepts a DensityMatrix or a square array."""
    if not isinstance(rho, DensityMatrix):
        matrix = np.asarray(rho, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError(f"Expected a square matrix, got shape {matrix.shape}")
        n = int(round(np.log2(matrix.shape[0])))
        if matrix.shape[0] != 1 << n:
            raise ValidationError(f"Matrix dimension {matrix.shape[0]} is not a power of two")
        rho = DensityMatrix(n, matrix)
    return trace_distance(rho, maximally_mixed(rho.n_wires))


# ---------------------------------------------------------------------------
# Classical delta
# ---------------------------------------------------------------------------

@dataclass
class DeltaDistribution:
    counts: Dict[int, List[int]]
    secrets: int
    sampled: bool

    @property
    def uniform(self) -> bool:
        return all(len(set(c)) == 1 for c in self.counts.values())

    def to_record(self) -> Dict[str, List[int]]:
        return {str(v): list(c) for v, c in sorted(self.counts.items())}


def delta_distribution(
    graph: GraphSpec,
    pattern: MeasurementPattern,
    seed: int,
    fixed_secrets: bool = False,
    sample_count: int = config.DEFAULT_SAMPLE_COUNT,
) -> DeltaDistribution:
    """Per-vertex histogram of announced delta values over (theta, r).

    The server's outcome randomness stays fixed by ``seed``, so each run
    differs only in the client's secrets.
    """
    measured = list(graph.measurement_order)
    if not measured:
        raise ValidationError("Graph has no measured vertex")
    size = 16 ** len(measured)
    if fixed_secrets:
        secrets: Iterable[ClientSecrets] = [ClientSecrets.zero(graph)]
        used, sampled = 1, False
    elif size <= config.ENUMERATION_LIMIT:
        secrets = secret_combinations(graph)
        used, sampled = size, False
    else:
        rng = derive_rng(seed, config.CLIENT_STREAM)
        secrets = (ClientSecrets.random(graph, rng) for _ in range(sample_count))
        used, sampled = sample_count, True

    counts = {v: [0] * 8 for v in measured}
    for s in secrets:
        _, _, transcript = run_bfk(graph, pattern, s, seed)
        for entry in transcript.find(ANNOUNCE_DELTA):
            counts[entry.payload["vertex"]][entry.payload["delta"]] += 1
    return DeltaDistribution(counts, used, sampled)


def _delta_distance(dist: DeltaDistribution) -> float:
    worst = 0.0
    for c in dist.counts.values():
        freq = np.asarray(c, dtype=float) / sum(c)
        worst = max(worst, distance_to_maximally_mixed(np.diag(freq)))
    return worst


# ---------------------------------------------------------------------------
# Transcript audit
# ---------------------------------------------------------------------------

def _hidden_keys(value: Any) -> List[str]:
    found: List[str] = []
    if isinstance(value, Mapping):
        for key, inner in value.items():
            if key in HIDDEN_FIELDS:
                found.append(str(key))
            found.extend(_hidden_keys(inner))
    elif isinstance(value, (list, tuple)):
        for inner in value:
            found.extend(_hidden_keys(inner))
    return found


def classical_leakage_audit(
    transcript: ProtocolTranscript,
    deltas: Optional[DeltaDistribution] = None,
) -> Dict[str, Any]:
    """Every classical value the server sees, and a check that none of the hidden ones leak."""
    visible = transcript.server_visible()
    expected = sum(
        1 for e in transcript
        if e.party == Party.SERVER or (e.party == Party.CLIENT and e.action in SERVER_BOUND_ACTIONS)
    )

    server_gates: Counter = Counter()
    requested: Counter = Counter()
    announced = []
    reveals = []
    published = []
    for record in visible:
        action = record["action"]
        meta = record["metadata"]
        if record["party"] == Party.SERVER.value and action == APPLY:
            server_gates.update(record["gates"])
        elif action == REQUEST_GATE:
            requested[meta["gate"]] += 1
        elif action == ANNOUNCE_DELTA:
            announced.append({"vertex": meta["vertex"], "delta": meta["delta"]})
        elif action == REVEAL_DECOYS:
            reveals.append(meta)
        elif action == PUBLISH:
            published.append(meta)

    leaked = sorted(set(_hidden_keys([r["metadata"] for r in visible])))
    client_gates_seen = sum(1 for r in visible if r["party"] == Party.CLIENT.value and r["gates"])

    report: Dict[str, Any] = {
        "entries_audited": len(visible),
        "complete": len(visible) == expected,
        "server_gate_counts": dict(sorted(server_gates.items())),
        "requested_gate_counts": dict(sorted(requested.items())),
        "deltas": announced,
        "decoy_reveals": reveals,
        "published": published,
        "hidden_fields_leaked": leaked,
        "client_gates_visible": client_gates_seen,
        "hidden_absent": not leaked and client_gates_seen == 0,
    }
    if deltas is not None:
        report["delta_counts"] = deltas.to_record()
        report["delta_uniform"] = deltas.uniform
    return report


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def analyse_point(point: str, instance: Optional[BlindnessInstance] = None, seed: int = 0) -> BlindnessReport:
    """Blindness report for one point; ``delegation`` covers every transmission of the run."""
    _check_point(point)
    instance = instance or BlindnessInstance()
    rng = derive_rng(seed, "blindness")

    if point == "bfk-delta":
        if instance.graph is None or instance.pattern is None:
            raise ValidationError("The bfk-delta point needs a graph and a pattern")
        dist = delta_distribution(instance.graph, instance.pattern, seed, instance.fixed_secrets, instance.sample_count)
        _, _, transcript = run_bfk(instance.graph, instance.pattern, ClientSecrets.zero(instance.graph), seed)
        return BlindnessReport(
            point=point,
            dimension=8,
            trace_distance=_delta_distance(dist),
            secrets_enumerated=dist.secrets,
            sampled=dist.sampled,
            transmissions=len(dist.counts),
            visible_classical=classical_leakage_audit(transcript, dist),
        )

    if point == "delegation":
        spaces, session = _delegation_spaces(instance, seed)
        if instance.fixed_secrets:
            spaces = [_fixed(s) for s in spaces]
        visible = classical_leakage_audit(session.transcript)
    else:
        spaces = [secret_space(point, instance, seed)]
        visible = {}

    worst, worst_error, used, sampled, dimension = 0.0, None, 0, False, 0
    for space in spaces:
        view, error, count = _view_of(space, rng, instance.sample_count)
        distance = distance_to_maximally_mixed(view)
        used += count
        sampled = sampled or not space.exhaustive
        if distance >= worst:
            worst, worst_error, dimension = distance, error, view.dimension
    logger.info("blindness %s: %d transmission(s), max trace distance %.3e", point, len(spaces), worst)
    return BlindnessReport(
        point=point,
        dimension=dimension,
        trace_distance=worst,
        secrets_enumerated=used,
        sampled=sampled,
        standard_error=worst_error,
        transmissions=len(spaces),
        visible_classical=visible,
    )
