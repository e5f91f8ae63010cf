"""Blind quantum computation protocols for a client limited to single-qubit gates"""

from .attackers import ATTACKERS, BaseAttacker, BellEntangler, HonestAttacker, StateReplacer, make_attacker
from .bfk import (
    ClientSecrets,
    Dependencies,
    GraphSpec,
    MeasurementPattern,
    adapt_angle,
    brickwork_graph,
    build_graph_state,
    chain_graph,
    chain_reference,
    compute_delta,
    decrypt_outcome,
    direct_pattern_output,
    finalize_output,
    prepare_theta_qubit,
    run_bfk,
    secret_combinations,
)
from .blindness import (
    TRANSMISSION_POINTS,
    BlindnessInstance,
    BlindnessReport,
    SecretSpace,
    analyse_point,
    classical_leakage_audit,
    delta_distribution,
    distance_to_maximally_mixed,
    secret_space,
    server_view,
)
from .delegation import (
    Circuit,
    CircuitOp,
    DelegationSession,
    delegated_cnot,
    delegated_h_case2,
    run_blind_circuit,
    run_blind_session,
    simulate_direct,
)
from .handshake import (
    DecoyTarget,
    DetectionReport,
    MeasurementBasis,
    QubitRole,
    RoleKind,
    Verdict,
    assign_roles,
    client_prepare,
    decoy_check,
    detection_experiment,
    run_handshake,
    server_distribute,
    trap_verify,
)
from .pauli_frame import (
    ClientCase,
    PauliKey,
    decompose_pauli,
    oracle_conjugation,
    propagate,
    propagate_through_cnot,
    propagate_through_h,
)
from .protocol import ProtocolRun, run_protocol
from .serialization import circuit_from_dict, circuit_to_dict, graph_from_dict, graph_to_dict, load_circuit, load_graph
from .transcript import Party, ProtocolTranscript, TranscriptEntry
from .utils import derive_rng, trial_seed

__all__ = [
    # Key algebra
    "PauliKey",
    "ClientCase",
    "propagate_through_cnot",
    "propagate_through_h",
    "propagate",
    "decompose_pauli",
    "oracle_conjugation",
    # Transcripts
    "Party",
    "ProtocolTranscript",
    "TranscriptEntry",
    # Circuit delegation
    "Circuit",
    "CircuitOp",
    "DelegationSession",
    "delegated_cnot",
    "delegated_h_case2",
    "run_blind_circuit",
    "run_blind_session",
    "simulate_direct",
    # Measurement-based computation
    "GraphSpec",
    "Dependencies",
    "MeasurementPattern",
    "ClientSecrets",
    "chain_graph",
    "brickwork_graph",
    "prepare_theta_qubit",
    "build_graph_state",
    "compute_delta",
    "adapt_angle",
    "decrypt_outcome",
    "run_bfk",
    "finalize_output",
    "direct_pattern_output",
    "chain_reference",
    "secret_combinations",
    # Handshake and attackers
    "ATTACKERS",
    "BaseAttacker",
    "HonestAttacker",
    "BellEntangler",
    "StateReplacer",
    "make_attacker",
    "QubitRole",
    "RoleKind",
    "DecoyTarget",
    "MeasurementBasis",
    "Verdict",
    "assign_roles",
    "server_distribute",
    "client_prepare",
    "decoy_check",
    "trap_verify",
    "run_handshake",
    "detection_experiment",
    "DetectionReport",
    "ProtocolRun",
    "run_protocol",
    # Blindness
    "TRANSMISSION_POINTS",
    "SecretSpace",
    "BlindnessInstance",
    "BlindnessReport",
    "secret_space",
    "server_view",
    "distance_to_maximally_mixed",
    "delta_distribution",
    "classical_leakage_audit",
    "analyse_point",
    # Files
    "load_circuit",
    "load_graph",
    "circuit_from_dict",
    "circuit_to_dict",
    "graph_from_dict",
    "graph_to_dict",
    # Seeds
    "derive_rng",
    "trial_seed",
]
