import types

import numpy as np
import pytest

from conftest import random_state
from lib.quantum import (
    Angle8,
    DensityMatrix,
    Gate,
    ProductRegister,
    ValidationError,
    WireArgumentError,
    WireCapError,
    apply_gate,
    apply_gates,
    basis_state,
    density_from_ensemble,
    density_from_state,
    expectation_fidelity,
    factor_out,
    fidelity,
    from_amplitudes,
    maximally_mixed,
    measure_computational,
    measure_rotated,
    new_state,
    outcome_probabilities,
    partial_trace,
    permute_wires,
    project_out,
    reduced_density,
    reduced_distance,
    sequence_matrix,
    tensor,
    trace_distance,
)

PLUS = from_amplitudes([1, 1], normalize=True)
MINUS = from_amplitudes([1, -1], normalize=True)


def bell_pair():
    return apply_gate(apply_gate(new_state(2), Gate.H, [0]), Gate.CNOT, [0, 1])


class TestGates:
    def test_matrix_identities(self):
        t4 = sequence_matrix([Gate.T] * 4)
        assert np.allclose(t4, Gate.Z.matrix, atol=1e-12)
        assert np.allclose(sequence_matrix([Gate.H, Gate.T, Gate.T, Gate.T, Gate.T, Gate.H]), Gate.X.matrix, atol=1e-12)
        assert np.allclose(sequence_matrix([Gate.T] * 8), np.eye(2), atol=1e-12)
        assert np.allclose(sequence_matrix([Gate.H, Gate.H]), np.eye(2), atol=1e-12)
        for gate in Gate:
            m = gate.matrix
            assert np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=1e-12)

    def test_identities_on_random_states(self, fx_rng: np.random.Generator):
        for _ in range(200):
            n = int(fx_rng.integers(1, 4))
            wire = int(fx_rng.integers(0, n))
            psi = random_state(fx_rng, n)
            assert fidelity(apply_gates(psi, [Gate.T] * 4, wire), apply_gate(psi, Gate.Z, [wire])) >= 1 - 1e-10
            x_via_h = apply_gates(psi, [Gate.H] + [Gate.T] * 4 + [Gate.H], wire)
            assert fidelity(x_via_h, apply_gate(psi, Gate.X, [wire])) >= 1 - 1e-10
            assert fidelity(apply_gates(psi, [Gate.T] * 8, wire), psi) >= 1 - 1e-10

    def test_wire_zero_is_most_significant(self):
        assert np.allclose(apply_gate(new_state(2), Gate.X, [0]).amplitudes, basis_state(2, 2).amplitudes)
        assert np.allclose(apply_gate(new_state(2), Gate.X, [1]).amplitudes, basis_state(2, 1).amplitudes)

    def test_cnot_and_cz(self):
        assert np.allclose(apply_gate(basis_state(2, 2), Gate.CNOT, [0, 1]).amplitudes, basis_state(2, 3).amplitudes)
        assert np.allclose(apply_gate(basis_state(2, 1), Gate.CNOT, [1, 0]).amplitudes, basis_state(2, 3).amplitudes)
        # CZ is symmetric in its wires
        plus2 = tensor(PLUS, PLUS)
        assert np.allclose(apply_gate(plus2, Gate.CZ, [0, 1]).amplitudes, apply_gate(plus2, Gate.CZ, [1, 0]).amplitudes)
        assert np.allclose(apply_gate(plus2, Gate.CZ, [0, 1]).amplitudes, np.array([1, 1, 1, -1]) / 2)

    def test_bad_wires(self):
        with pytest.raises(WireArgumentError):
            apply_gate(new_state(2), Gate.CNOT, [0, 0])
        with pytest.raises(WireArgumentError):
            apply_gate(new_state(2), Gate.H, [2])
        with pytest.raises(WireArgumentError):
            apply_gate(new_state(2), Gate.CNOT, [0])

    def test_parse(self):
        assert Gate.parse("cnot") is Gate.CNOT
        with pytest.raises(ValueError):
            Gate.parse("SWAP")


class TestStates:
    def test_construction(self):
        assert np.allclose(new_state(3).amplitudes, basis_state(3, 0).amplitudes)
        with pytest.raises(WireCapError):
            new_state(15)
        with pytest.raises(WireCapError):
            new_state(3, cap=2)
        with pytest.raises(WireArgumentError):
            from_amplitudes([1, 1])
        with pytest.raises(WireArgumentError):
            from_amplitudes([1, 0, 0])

    def test_tensor_and_permute(self, fx_rng: np.random.Generator):
        a, b = random_state(fx_rng, 1), random_state(fx_rng, 2)
        joint = tensor(a, b)
        assert joint.n_wires == 3
        swapped = permute_wires(joint, [1, 2, 0])
        assert fidelity(swapped, tensor(b, a)) >= 1 - 1e-12
        assert np.allclose(permute_wires(basis_state(2, 2), [1, 0]).amplitudes, basis_state(2, 1).amplitudes)

    def test_rotated_measurement(self):
        p_plus, p_minus = outcome_probabilities(PLUS, 0, Angle8(0))
        assert p_plus == pytest.approx(1.0)
        assert p_minus == pytest.approx(0.0, abs=1e-15)
        # a zero-probability branch is never chosen, whatever the random number
        outcome, after = measure_rotated(PLUS, 0, Angle8(0), 0.9999999999)
        assert outcome == 0
        assert fidelity(after, PLUS) >= 1 - 1e-12
        outcome, after = measure_rotated(MINUS, 0, Angle8(0), 0.3)
        assert outcome == 1

    def test_rotated_measurement_on_theta_state(self):
        for k in range(8):
            theta = apply_gates(new_state(1), [Gate.H] + [Gate.T] * k, 0)
            p_plus, _ = outcome_probabilities(theta, 0, Angle8(k))
            assert p_plus == pytest.approx(1.0)
            _, p_minus = outcome_probabilities(theta, 0, Angle8(k + 4))
            assert p_minus == pytest.approx(1.0)

    def test_computational_measurement_rule(self):
        outcome, after = measure_computational(PLUS, 0, 0.49)
        assert outcome == 0
        assert np.allclose(after.amplitudes, [1, 0])
        outcome, after = measure_computational(PLUS, 0, 0.51)
        assert outcome == 1
        assert np.allclose(after.amplitudes, [0, 1])

    def test_measure_keeps_wire_count(self):
        outcome, after = measure_computational(bell_pair(), 0, 0.2)
        assert after.n_wires == 2
        assert np.allclose(after.amplitudes, basis_state(2, 3 * outcome).amplitudes)

    def test_repeated_measurement_in_same_basis(self, fx_rng: np.random.Generator):
        for _ in range(100):
            psi = random_state(fx_rng, 3)
            wire = int(fx_rng.integers(0, 3))
            delta = Angle8(int(fx_rng.integers(0, 8)))
            first, after = measure_rotated(psi, wire, delta, float(fx_rng.random()))
            second, _ = measure_rotated(after, wire, delta, float(fx_rng.random()))
            assert second == first
            first, after = measure_computational(psi, wire, float(fx_rng.random()))
            second, _ = measure_computational(after, wire, float(fx_rng.random()))
            assert second == first

    def test_outcome_probabilities_sum_to_one(self, fx_rng: np.random.Generator):
        for _ in range(200):
            n = int(fx_rng.integers(1, 4))
            psi = random_state(fx_rng, n)
            wire = int(fx_rng.integers(0, n))
            p_plus, p_minus = outcome_probabilities(psi, wire, Angle8(int(fx_rng.integers(0, 8))))
            assert p_plus >= 0.0 and p_minus >= 0.0
            assert p_plus + p_minus == pytest.approx(1.0, abs=1e-12)

    def test_bell_pair_outcomes_agree(self, fx_rng: np.random.Generator):
        seen = set()
        for _ in range(100):
            first, after = measure_computational(bell_pair(), 0, float(fx_rng.random()))
            second, _ = measure_computational(after, 1, float(fx_rng.random()))
            assert second == first
            seen.add(first)
        assert seen == {0, 1}

    def test_same_seed_same_outcomes(self):
        def measure_all(seed):
            rng = np.random.default_rng(seed)
            state = random_state(rng, 4)
            outcomes = []
            for wire in range(4):
                outcome, state = measure_rotated(state, wire, Angle8(wire + 1), float(rng.random()))
                outcomes.append(outcome)
            return outcomes, state.amplitudes

        first, amps_first = measure_all(5)
        second, amps_second = measure_all(5)
        assert first == second
        assert np.array_equal(amps_first, amps_second)

    def test_project_and_factor(self):
        joint = tensor(basis_state(1, 0), PLUS)
        assert fidelity(project_out(joint, 0, np.array([1, 0])), PLUS) >= 1 - 1e-12
        with pytest.raises(WireArgumentError):
            project_out(joint, 0, np.array([0, 1]))
        assert fidelity(factor_out(joint, [1]), PLUS) >= 1 - 1e-12
        with pytest.raises(WireArgumentError):
            factor_out(bell_pair(), [0])

    def test_to_json(self):
        pairs = PLUS.to_json()
        assert len(pairs) == 2
        assert pairs[0][0] == pytest.approx(1 / np.sqrt(2))
        assert pairs[1][1] == 0.0


class TestDensity:
    def test_validation(self):
        with pytest.raises(ValidationError):
            DensityMatrix(1, np.array([[1, 1], [0, 0]]))
        with pytest.raises(ValidationError):
            DensityMatrix(1, np.eye(2))
        with pytest.raises(ValidationError):
            DensityMatrix(1, np.diag([1.5, -0.5]))

    def test_trace_distance_examples(self):
        zero = density_from_state(new_state(1))
        assert trace_distance(zero, maximally_mixed(1)) == pytest.approx(0.5)
        assert trace_distance(density_from_state(PLUS), maximally_mixed(1)) == pytest.approx(0.5)
        assert trace_distance(zero, density_from_state(basis_state(1, 1))) == pytest.approx(1.0)
        assert trace_distance(zero, zero) == pytest.approx(0.0, abs=1e-12)

    def test_bell_marginal_is_mixed(self):
        rho = reduced_density(bell_pair(), [0])
        assert trace_distance(rho, maximally_mixed(1)) <= 1e-10
        full = density_from_state(bell_pair())
        assert np.allclose(partial_trace(full, [1]).entries, np.eye(2) / 2)

    def test_partial_trace_order(self, fx_rng: np.random.Generator):
        a, b, c = (random_state(fx_rng, 1) for _ in range(3))
        full = density_from_state(tensor(a, b, c))
        kept = partial_trace(full, [2, 0])
        assert np.allclose(kept.entries, density_from_state(tensor(c, a)).entries, atol=1e-12)
        assert np.allclose(reduced_density(tensor(a, b, c), [2, 0]).entries, kept.entries, atol=1e-12)

    def test_ensemble(self):
        rho = density_from_ensemble([(0.5, new_state(1)), (0.5, basis_state(1, 1))])
        assert np.allclose(rho.entries, np.eye(2) / 2)
        assert rho.purity() == pytest.approx(0.5)
        assert expectation_fidelity(rho, PLUS) == pytest.approx(0.5)

    def test_reduced_distance(self, fx_rng: np.random.Generator):
        psi = tensor(random_state(fx_rng, 2), new_state(2))
        touched = apply_gate(psi, Gate.CNOT, [2, 3])
        assert reduced_distance(psi, touched, [0, 1]) <= 1e-10
        flipped = apply_gate(psi, Gate.X, [0])
        assert reduced_distance(psi, flipped, [0, 1]) > 1e-6

    def test_reduced_distance_of_equal_states(self, fx_rng: np.random.Generator):
        for _ in range(200):
            psi = tensor(random_state(fx_rng, 3), random_state(fx_rng, 2))
            touched = apply_gate(apply_gate(psi, Gate.CNOT, [3, 4]), Gate.H, [4])
            assert reduced_distance(psi, touched, [0, 1, 2]) <= 1e-10


class TestProductRegister:
    def test_blocks_merge_on_two_wire_gates(self):
        reg = ProductRegister()
        reg.add_block(new_state(1))
        reg.add_block(new_state(1))
        reg.add_block(new_state(1))
        assert reg.block_count == 3
        reg.apply_gate(Gate.H, [0])
        reg.apply_gate(Gate.CNOT, [0, 2])
        assert reg.block_count == 2
        assert reg.entangled_with([2]) == [2, 0]
        assert trace_distance(reg.reduced_density([2]), maximally_mixed(1)) <= 1e-10
        joint = reg.merge([0, 2])
        assert fidelity(joint, bell_pair()) >= 1 - 1e-12

    def test_measurement_detaches_wire(self):
        reg = ProductRegister()
        reg.add_block(bell_pair())
        outcome = reg.measure_computational(0, 0.7)
        assert reg.block_count == 2
        assert fidelity(reg.merge([1]), basis_state(1, outcome)) >= 1 - 1e-12

    def test_rotated_measurement(self):
        reg = ProductRegister()
        reg.add_block(MINUS)
        assert reg.measure_rotated(0, Angle8(0), 0.01) == 1

    def test_total_cap(self):
        reg = ProductRegister(total_cap=2)
        reg.add_block(new_state(2))
        with pytest.raises(WireCapError):
            reg.add_block(new_state(1))
        with pytest.raises(WireArgumentError):
            reg.apply_gate(Gate.H, [5])

    def test_many_wires_beyond_single_state_cap(self):
        reg = ProductRegister(total_cap=64)
        for _ in range(40):
            reg.add_block(new_state(1))
        for w in range(0, 40, 2):
            reg.apply_gate(Gate.H, [w])
            reg.apply_gate(Gate.CNOT, [w, w + 1])
        assert reg.n_wires == 40
        assert reg.block_count == 20
        assert trace_distance(reg.reduced_density([39]), maximally_mixed(1)) <= 1e-10

    def test_block_cap_from_config_module(self):
        small = types.SimpleNamespace(WIRE_CAP=2)
        reg = ProductRegister(config_module=small)
        reg.add_block(new_state(1))
        reg.add_block(new_state(1))
        reg.add_block(new_state(1))
        reg.apply_gate(Gate.CNOT, [0, 1])
        with pytest.raises(WireCapError):
            reg.apply_gate(Gate.CNOT, [1, 2])
        with pytest.raises(WireCapError):
            reg.add_block(new_state(3))
