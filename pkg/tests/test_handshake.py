import numpy as np
import pytest

from lib.bqc import (
    BellEntangler,
    DecoyTarget,
    HonestAttacker,
    MeasurementBasis,
    ProtocolTranscript,
    QubitRole,
    RoleKind,
    StateReplacer,
    Verdict,
    assign_roles,
    client_prepare,
    decoy_check,
    detection_experiment,
    make_attacker,
    run_handshake,
    server_distribute,
    trap_verify,
)
from lib.bqc.handshake import binomial_interval, predicted_rates
from lib.bqc.transcript import MEASURE_DECOY, PREPARE, REVEAL_DECOYS, Party
from lib.quantum import (
    ValidationError,
    WireCapError,
    basis_state,
    fidelity,
    from_amplitudes,
    maximally_mixed,
    new_state,
    trace_distance,
)


def within_sigma(rate: float, expected: float, trials: int, sigma: float = 4.0) -> bool:
    return abs(rate - expected) <= sigma * np.sqrt(expected * (1 - expected) / trials)


class TestRoles:
    def test_counts_and_determinism(self):
        roles = assign_roles(3, 5, 2, seed=17)
        kinds = [r.kind for r in roles]
        assert kinds.count(RoleKind.COMPUTATION) == 3
        assert kinds.count(RoleKind.DECOY) == 5
        assert kinds.count(RoleKind.TRAP) == 2
        assert roles == assign_roles(3, 5, 2, seed=17)

    def test_role_validation(self):
        with pytest.raises(ValidationError):
            QubitRole(RoleKind.TRAP, bit=2)
        with pytest.raises(ValidationError):
            QubitRole(RoleKind.DECOY)
        with pytest.raises(ValidationError):
            assign_roles(-1, 1, 1, seed=0)

    def test_role_gates_use_h_and_t_only(self):
        roles = [QubitRole.computation(n) for n in range(8)]
        roles += [QubitRole.decoy(t) for t in DecoyTarget] + [QubitRole.trap(0), QubitRole.trap(1)]
        for role in roles:
            assert {g.value for g in role.gates} <= {"H", "T"}


class TestDistribution:
    def test_honest_wires_are_zero(self):
        register, transcript = server_distribute(1, 1, 1, HonestAttacker(), seed=0)
        assert register.n_wires == 3
        assert fidelity(register.merge([0, 1, 2]), new_state(3)) >= 1 - 1e-12
        assert all(transcript.custody_of(w) is Party.CLIENT for w in range(3))

    def test_bell_marginal_is_mixed(self):
        register, transcript = server_distribute(1, 0, 0, BellEntangler(), seed=0)
        assert register.n_wires == 2
        assert transcript.custody_of(1) is Party.ADVERSARY
        assert trace_distance(register.reduced_density([0]), maximally_mixed(1)) <= 1e-10

    def test_replacer(self):
        register, _ = server_distribute(0, 2, 0, StateReplacer(recipe="1"), seed=0)
        for w in range(2):
            assert fidelity(register.merge([w]), basis_state(1, 1)) >= 1 - 1e-12
        register, _ = server_distribute(0, 2, 0, StateReplacer(targets=[1], recipe="-"), seed=0)
        assert fidelity(register.merge([0]), new_state(1)) >= 1 - 1e-12
        assert fidelity(register.merge([1]), from_amplitudes([1, -1], normalize=True)) >= 1 - 1e-12

    def test_wire_cap(self):
        with pytest.raises(WireCapError):
            server_distribute(60, 5, 0, HonestAttacker(), seed=0)
        with pytest.raises(WireCapError):
            server_distribute(40, 0, 0, BellEntangler(), seed=0)
        with pytest.raises(ValidationError):
            server_distribute(0, 0, 0, HonestAttacker(), seed=0)

    def test_attacker_factory(self):
        assert isinstance(make_attacker("Bell", targets=[0]), BellEntangler)
        assert make_attacker("replace", recipe=1).recipe == "1"
        with pytest.raises(ValidationError):
            make_attacker("eavesdropper")
        with pytest.raises(ValidationError):
            make_attacker("replace", recipe="y")
        with pytest.raises(ValidationError):
            make_attacker("honest", depth=3)
        with pytest.raises(ValidationError):
            BellEntangler(ancilla_basis="diagonal")


class TestPreparation:
    def test_prepared_states(self):
        register, transcript = server_distribute(1, 1, 1, HonestAttacker(), seed=0)
        roles = [QubitRole.computation(3), QubitRole.decoy(DecoyTarget.MINUS), QubitRole.trap(1)]
        client_prepare(register, roles, transcript)
        expected = from_amplitudes([1, np.exp(3j * np.pi / 4)], normalize=True)
        assert fidelity(register.merge([0]), expected) >= 1 - 1e-12
        assert fidelity(register.merge([1]), from_amplitudes([1, -1], normalize=True)) >= 1 - 1e-12
        assert fidelity(register.merge([2]), basis_state(1, 1)) >= 1 - 1e-12
        for entry in transcript.find(PREPARE):
            assert set(entry.gates) <= {"H", "T"}
        assert all(transcript.custody_of(w) is Party.SERVER for w in range(3))

    def test_role_count_must_match(self):
        register, transcript = server_distribute(1, 1, 1, HonestAttacker(), seed=0)
        with pytest.raises(ValidationError):
            client_prepare(register, [QubitRole.trap(0), QubitRole.trap(1)], transcript)


class TestDecoyCheck:
    def test_honest_always_passes(self):
        for seed in range(50):
            run = run_handshake(2, 4, 2, HonestAttacker(), seed)
            assert run.verdict is Verdict.PASS
            assert not any(r.mismatch for r in run.records)

    def test_replaced_decoy_aborts(self):
        register, transcript = server_distribute(0, 1, 0, StateReplacer(recipe="1"), seed=0)
        client_prepare(register, [QubitRole.decoy(DecoyTarget.ZERO)], transcript)
        verdict, records, _ = decoy_check(
            register, [(0, DecoyTarget.ZERO)], [MeasurementBasis.COMPUTATIONAL], 0, transcript
        )
        assert verdict is Verdict.ABORT
        assert records[0].matched and records[0].mismatch
        assert records[0].outcome == 1

    def test_unmatched_basis_never_aborts(self):
        register, transcript = server_distribute(0, 1, 0, StateReplacer(recipe="1"), seed=0)
        client_prepare(register, [QubitRole.decoy(DecoyTarget.ZERO)], transcript)
        verdict, records, _ = decoy_check(
            register, [(0, DecoyTarget.ZERO)], [MeasurementBasis.HADAMARD], 0, transcript
        )
        assert verdict is Verdict.PASS
        assert not records[0].matched

    def test_bad_arguments(self):
        register, transcript = server_distribute(0, 1, 0, HonestAttacker(), seed=0)
        with pytest.raises(ValidationError):
            decoy_check(register, [(3, DecoyTarget.ZERO)], None, 0, transcript)
        with pytest.raises(ValidationError):
            decoy_check(register, [(0, DecoyTarget.ZERO)], None, 0, transcript, basis_rule="random")

    def test_reveal_comes_after_preparation(self):
        run = run_handshake(1, 3, 1, HonestAttacker(), seed=8)
        last_prepare = max(e.step for e in run.transcript.find(PREPARE))
        reveal = run.transcript.find(REVEAL_DECOYS)[0]
        first_measure = min(e.step for e in run.transcript.find(MEASURE_DECOY))
        assert last_prepare < reveal.step < first_measure
        assert "bases" not in reveal.payload

    def test_fills_the_callers_transcript(self):
        mine = ProtocolTranscript("handshake")
        run = run_handshake(1, 2, 1, HonestAttacker(), seed=3, transcript=mine)
        assert run.transcript is mine
        assert len(mine.find(PREPARE)) == 4
        assert len(mine.find(REVEAL_DECOYS)) == 1

    def test_announced_rule_reveals_bases(self):
        run = run_handshake(0, 3, 0, HonestAttacker(), seed=2, basis_rule="announced")
        reveal = run.transcript.find(REVEAL_DECOYS)[0]
        assert len(reveal.payload["bases"]) == 3
        assert all(r.matched for r in run.records)


class TestTrapVerify:
    def test_verdicts(self):
        assert trap_verify([(3, 0), (5, 1)], {3: 0, 5: 1}).verdict is Verdict.PASS
        result = trap_verify([(3, 0), (5, 1)], {3: 1, 5: 1})
        assert result.verdict is Verdict.FAIL
        assert result.failures == (3,)
        assert trap_verify([(3, 0)], {}).failures == (3,)
        assert trap_verify([], {}).verdict is Verdict.PASS


class TestDetection:
    def test_honest_never_detected(self):
        report = detection_experiment(8, HonestAttacker(), trials=200, seed=1)
        assert report.aborts == 0
        assert report.detection_rate == 0.0
        assert report.predicted == {"uniform": 0.0, "announced": 0.0}

    def test_binomial_interval(self):
        lo, hi = binomial_interval(50, 100)
        assert lo == pytest.approx(0.5 - 0.15)
        assert hi == pytest.approx(0.5 + 0.15)
        assert binomial_interval(0, 10) == (0.0, 0.0)

    def test_predictions(self):
        rates = predicted_rates(BellEntangler(), 2)
        assert rates["uniform"] == pytest.approx(1 - 0.75 ** 2)
        assert rates["announced"] == pytest.approx(0.75)
        assert predicted_rates(BellEntangler(targets=[0]), 2) is None

    def test_table(self):
        report = detection_experiment(2, BellEntangler(), trials=20, seed=4, keep_table=True)
        assert len(report.table) == 20
        assert set(report.table["verdict"]) <= {"Pass", "Abort"}
        assert report.to_dict()["trials"] == 20

    def test_replacer_detected_in_matched_basis(self):
        report = detection_experiment(4, StateReplacer(recipe="+"), trials=100, seed=6, basis_rule="announced")
        # each decoy starts from |+> instead of |0>, so a matched measurement is a coin flip
        assert report.aborts > 0

    @pytest.mark.slow
    def test_bell_single_decoy_mismatch_is_half(self):
        trials = 10000
        report = detection_experiment(1, BellEntangler(), trials=trials, seed=5)
        assert report.matched_decoys > 0
        assert within_sigma(report.per_decoy_rate, 0.5, report.matched_decoys, sigma=3.0)
        assert within_sigma(report.detection_rate, 0.25, trials)

    @pytest.mark.slow
    def test_bell_ten_announced_decoys(self):
        report = detection_experiment(10, BellEntangler(), trials=10000, seed=3, basis_rule="announced")
        assert report.detection_rate >= 0.99

    @pytest.mark.slow
    def test_bell_ten_uniform_decoys(self):
        trials = 2000
        report = detection_experiment(10, BellEntangler(), trials=trials, seed=3)
        assert within_sigma(report.detection_rate, 1 - 0.75 ** 10, trials)

    @pytest.mark.slow
    def test_detection_grows_with_decoys(self):
        reports = [detection_experiment(k, BellEntangler(), trials=1000, seed=12) for k in (1, 2, 4, 8, 10)]
        for a, b in zip(reports, reports[1:]):
            assert b.ci3sigma[1] >= a.ci3sigma[0]
        for a, b in zip(reports, reports[2:]):
            assert b.ci3sigma[0] > a.ci3sigma[1]
