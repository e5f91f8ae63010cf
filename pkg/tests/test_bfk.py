import itertools

import numpy as np
import pytest

from lib.bqc import (
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
from lib.bqc.transcript import ANNOUNCE_DELTA, MEASURE, PREPARE
from lib.quantum import Angle8, Gate, ValidationError, apply_gate, fidelity, from_amplitudes, tensor

FIDELITY_FLOOR = 1 - 1e-9


def blind_output(graph, pattern, secrets, seed):
    decrypted, residual, transcript = run_bfk(graph, pattern, secrets, seed)
    return finalize_output(residual, graph, secrets, decrypted), transcript


class TestAngles:
    def test_delta_examples(self):
        assert compute_delta(Angle8(3), Angle8(2), 1) == Angle8(1)
        assert compute_delta(Angle8(0), Angle8(0), 0) == Angle8(0)
        assert compute_delta(Angle8(7), Angle8(7), 1) == Angle8(2)

    def test_adapt_examples(self):
        assert adapt_angle(Angle8(1), 0, 0) == Angle8(1)
        assert adapt_angle(Angle8(1), 1, 0) == Angle8(7)
        assert adapt_angle(Angle8(1), 0, 1) == Angle8(5)
        assert adapt_angle(Angle8(1), 1, 1) == Angle8(3)

    def test_decrypt(self):
        assert [decrypt_outcome(s, r) for s, r in itertools.product((0, 1), repeat=2)] == [0, 1, 1, 0]

    def test_delta_is_uniform_over_secrets(self):
        for phi_prime in Angle8.all():
            counts = np.zeros(8, dtype=int)
            for theta, r in itertools.product(Angle8.all(), (0, 1)):
                counts[compute_delta(theta, phi_prime, r).k] += 1
            assert counts.tolist() == [2] * 8


class TestStates:
    def test_theta_qubits(self):
        assert np.allclose(prepare_theta_qubit(Angle8(0)).amplitudes, np.array([1, 1]) / np.sqrt(2))
        assert np.allclose(prepare_theta_qubit(Angle8(4)).amplitudes, np.array([1, -1]) / np.sqrt(2))
        expected = np.array([1, np.exp(1j * np.pi / 4)]) / np.sqrt(2)
        assert np.allclose(prepare_theta_qubit(Angle8(1)).amplitudes, expected)

    def test_two_vertex_graph_state(self):
        plus = prepare_theta_qubit(Angle8(0))
        state = build_graph_state([plus, plus], chain_graph(2))
        assert np.allclose(state.amplitudes, np.array([1, 1, 1, -1]) / 2)

    def test_graph_state_stabilizers(self, fx_rng: np.random.Generator):
        m = 5
        edges = [(u, v) for u, v in itertools.combinations(range(m), 2) if fx_rng.random() < 0.5]
        graph = GraphSpec(m, frozenset(edges), ())
        plus = prepare_theta_qubit(Angle8(0))
        state = build_graph_state([plus] * m, graph)
        for v in range(m):
            stabilized = apply_gate(state, Gate.X, [v])
            for u in graph.neighbours(v):
                stabilized = apply_gate(stabilized, Gate.Z, [u])
            assert np.allclose(stabilized.amplitudes, state.amplitudes, atol=1e-12)

    def test_edge_order_does_not_matter(self, fx_rng: np.random.Generator):
        qubits = [prepare_theta_qubit(Angle8.random(fx_rng)) for _ in range(4)]
        graph = chain_graph(4)
        forward = build_graph_state(qubits, graph)
        backward = tensor(*qubits)
        for u, v in sorted(graph.edges, reverse=True):
            backward = apply_gate(backward, Gate.CZ, [v, u])
        assert np.allclose(forward.amplitudes, backward.amplitudes, atol=1e-12)


class TestGraphs:
    def test_chain_dependencies(self):
        graph = chain_graph(4)
        assert graph.outputs == (3,)
        assert graph.measurement_order == (0, 1, 2)
        assert graph.deps(1) == Dependencies(frozenset({0}), frozenset())
        assert graph.deps(2) == Dependencies(frozenset({1}), frozenset({0}))
        assert graph.deps(3) == Dependencies(frozenset({2}), frozenset({1}))

    def test_brickwork_shape(self):
        graph = brickwork_graph(2, 9)
        assert graph.m == 18
        assert len(graph.edges) == 18
        assert max(graph.degree(v) for v in range(graph.m)) <= 3
        assert graph.outputs == (16, 17)
        graph.check_dependencies()

    def test_brickwork_single_row_is_a_chain(self):
        graph = brickwork_graph(1, 5)
        assert graph.edges == chain_graph(5).edges
        assert graph.measurement_order == (0, 1, 2, 3)

    def test_brickwork_rejects_empty(self):
        with pytest.raises(ValidationError):
            brickwork_graph(2, 0)
        with pytest.raises(ValidationError):
            brickwork_graph(0, 3)

    def test_graph_validation(self):
        with pytest.raises(ValidationError):
            GraphSpec(2, frozenset({(0, 0)}), ())
        with pytest.raises(ValidationError):
            GraphSpec(2, frozenset({(0, 2)}), ())
        with pytest.raises(ValidationError):
            GraphSpec(2, frozenset({(0, 1)}), (0, 0))
        late = GraphSpec(3, frozenset({(0, 1), (1, 2)}), (0, 1), {0: Dependencies(frozenset({1}))})
        with pytest.raises(ValidationError):
            late.check_dependencies()

    def test_flow_must_follow_edges(self):
        with pytest.raises(ValidationError):
            GraphSpec.from_flow(3, [(0, 1), (1, 2)], [0, 1], {0: 2, 1: 2})
        with pytest.raises(ValidationError):
            GraphSpec.from_flow(3, [(0, 1), (1, 2)], [0, 1], {0: 1})


class TestBlindRun:
    def test_two_chain_every_secret(self):
        graph = chain_graph(2)
        for phi in Angle8.all():
            pattern = MeasurementPattern({0: phi})
            reference = direct_pattern_output(graph, pattern)
            assert fidelity(reference, chain_reference([phi])) >= 1 - 1e-12
            for output_theta in Angle8.all():
                for seed, secrets in enumerate(secret_combinations(graph, output_theta)):
                    out, _ = blind_output(graph, pattern, secrets, seed)
                    assert fidelity(out, reference) >= FIDELITY_FLOOR

    def test_four_chain_every_secret(self):
        graph = chain_graph(4)
        pattern = MeasurementPattern.from_ints({0: 1, 1: 0, 2: 0})
        reference = direct_pattern_output(graph, pattern)
        assert fidelity(reference, chain_reference([Angle8(1), Angle8(0), Angle8(0)])) >= 1 - 1e-12
        for seed, secrets in enumerate(secret_combinations(graph, Angle8(3))):
            out, _ = blind_output(graph, pattern, secrets, seed)
            assert fidelity(out, reference) >= FIDELITY_FLOOR

    def test_chain_of_one_returns_plus(self):
        graph = chain_graph(1)
        secrets = ClientSecrets({0: Angle8(5)}, {})
        out, transcript = blind_output(graph, MeasurementPattern({}), secrets, 0)
        assert fidelity(out, prepare_theta_qubit(Angle8(0))) >= FIDELITY_FLOOR
        assert transcript.find(ANNOUNCE_DELTA) == []

    def test_brickwork_random_secrets(self, fx_rng: np.random.Generator):
        graph = brickwork_graph(2, 5)
        pattern = MeasurementPattern({v: Angle8.random(fx_rng) for v in graph.measurement_order})
        reference = direct_pattern_output(graph, pattern)
        for seed in range(10):
            out, _ = blind_output(graph, pattern, ClientSecrets.random(graph, fx_rng), seed)
            assert fidelity(out, reference) >= FIDELITY_FLOOR

    def test_random_flow_graphs(self, fx_rng: np.random.Generator):
        # two chains joined by a rung between their first vertices
        graph = GraphSpec.from_flow(6, [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3)], [0, 3, 1, 4], {0: 1, 3: 4, 1: 2, 4: 5})
        graph.check_dependencies()
        for _ in range(20):
            pattern = MeasurementPattern({v: Angle8.random(fx_rng) for v in graph.measurement_order})
            out, _ = blind_output(graph, pattern, ClientSecrets.random(graph, fx_rng), int(fx_rng.integers(1000)))
            assert fidelity(out, direct_pattern_output(graph, pattern)) >= FIDELITY_FLOOR

    def test_transcript_shape(self):
        graph = chain_graph(3)
        pattern = MeasurementPattern.from_ints({0: 2, 1: 5})
        secrets = ClientSecrets({0: Angle8(1), 1: Angle8(6), 2: Angle8(0)}, {0: 1, 1: 0})
        _, transcript = blind_output(graph, pattern, secrets, 4)
        assert len(transcript.find(PREPARE)) == 3
        deltas = transcript.find(ANNOUNCE_DELTA)
        assert [e.payload["vertex"] for e in deltas] == [0, 1]
        # vertex 0 has no dependencies: delta = 1 + 2 + 4 = 7
        assert deltas[0].payload["delta"] == 7
        assert len(transcript.find(MEASURE)) == 2
        for entry in deltas:
            assert set(entry.payload) == {"vertex", "delta"}

    def test_missing_secret_or_angle(self):
        graph = chain_graph(2)
        with pytest.raises(ValidationError):
            run_bfk(graph, MeasurementPattern({}), ClientSecrets.zero(graph), 0)
        with pytest.raises(ValidationError):
            run_bfk(graph, MeasurementPattern({0: Angle8(0)}), ClientSecrets({0: Angle8(0)}, {0: 0}), 0)

    def test_dependency_on_unmeasured_vertex(self):
        graph = GraphSpec(2, frozenset({(0, 1)}), (0,), {0: Dependencies(frozenset({1}))})
        with pytest.raises(ValidationError):
            run_bfk(graph, MeasurementPattern({0: Angle8(0)}), ClientSecrets.zero(graph), 0)

    def test_secrets_validate_bits(self):
        with pytest.raises(ValidationError):
            ClientSecrets({0: Angle8(0)}, {0: 2})

    def test_reference_matches_known_state(self):
        # H T^-1 H |0> computed by hand
        out = chain_reference([Angle8(1)])
        t_dagger = np.diag([1, np.exp(-1j * np.pi / 4)])
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        expected = from_amplitudes(h @ t_dagger @ h @ np.array([1, 0]))
        assert fidelity(out, expected) >= 1 - 1e-12
