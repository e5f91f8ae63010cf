import json

import pytest

import run_bqc_lab
from conftest import data_path

QUIET = ["--no-log-file", "--quiet"]


def run(capsys, *args):
    code = run_bqc_lab.main([*args, *QUIET])
    return code, json.loads(capsys.readouterr().out)


class TestDelegate:
    def test_h_cnot(self, capsys):
        code, result = run(capsys, "delegate", "--case", "case1", "--circuit", data_path("circuits", "h_cnot.json"),
                           "--seed", "7")
        assert code == 0
        assert result["fidelity_vs_direct"] >= 1 - 1e-9
        assert result["server_gate_counts"] == {"CNOT": 1}
        assert result["server_visible"]["hidden_absent"]

    def test_case2_delegates_hadamard(self, capsys):
        code, result = run(capsys, "delegate", "--case", "case2", "--circuit", data_path("circuits", "h_only.json"),
                           "--seed", "1")
        assert code == 0
        assert result["server_gate_counts"] == {"H": 1}

    def test_missing_circuit(self, capsys, tmp_path):
        code, result = run(capsys, "delegate", "--case", "case1", "--circuit", str(tmp_path / "absent.json"),
                           "--seed", "1")
        assert code == 2
        assert "error" in result

    def test_unknown_case(self, capsys):
        code, _ = run(capsys, "delegate", "--case", "case3", "--circuit", data_path("circuits", "h_cnot.json"),
                      "--seed", "1")
        assert code == 2

    def test_same_seed_same_output(self, capsys):
        args = ["delegate", "--case", "case1", "--circuit", data_path("circuits", "h_t_cnot.json"),
                "--trap-requests", "2", "--seed", "5", *QUIET]
        assert run_bqc_lab.main(args) == 0
        first = capsys.readouterr().out
        assert run_bqc_lab.main(args) == 0
        assert capsys.readouterr().out == first

    def test_transcript_and_out_files(self, capsys, tmp_path):
        transcript = tmp_path / "runs" / "delegate.jsonl"
        out = tmp_path / "result.json"
        code, result = run(capsys, "delegate", "--case", "case1", "--circuit", data_path("circuits", "h_cnot.json"),
                           "--seed", "3", "--transcript", str(transcript), "--out", str(out))
        assert code == 0
        assert result["transcript_path"] == str(transcript)
        for line in transcript.read_text(encoding="utf-8").splitlines():
            assert set(json.loads(line)) == {"step", "party", "action", "wires", "gates", "metadata"}
        assert json.loads(out.read_text(encoding="utf-8")) == result


class TestBfk:
    def test_honest_chain(self, capsys):
        code, result = run(capsys, "bfk", "--graph", data_path("graphs", "chain2.json"), "--k", "4", "--l", "1",
                           "--seed", "11")
        assert code == 0
        assert result["handshake_verdict"] == "Pass"
        assert result["trap_verdict"] == "Pass"
        assert result["output_fidelity_vs_direct"] >= 1 - 1e-9
        assert "roles" not in result

    def test_generated_graphs(self, capsys):
        code, result = run(capsys, "bfk", "--brickwork", "2x3", "--k", "1", "--l", "1", "--seed", "2", "--show-roles")
        assert code == 0
        assert len(result["roles"]) == 6 + 1 + 1

    def test_bell_attack_aborts_some_runs(self, capsys):
        codes = []
        for seed in range(30):
            code, result = run(capsys, "bfk", "--chain", "2", "--attacker", "bell", "--k", "4", "--l", "1",
                               "--seed", str(seed))
            codes.append(code)
            if code == 3:
                assert result["handshake_verdict"] == "Abort"
        assert 3 in codes

    def test_bad_inputs(self, capsys):
        code, _ = run(capsys, "bfk", "--chain", "2", "--attacker", "eavesdropper", "--seed", "0")
        assert code == 2
        code, _ = run(capsys, "bfk", "--brickwork", "2by3", "--seed", "0")
        assert code == 2
        code, _ = run(capsys, "bfk", "--seed", "0")
        assert code == 2
        code, _ = run(capsys, "bfk", "--chain", "2", "--attacker-param", "targets", "--seed", "0")
        assert code == 2
        code, _ = run(capsys, "bfk", "--chain", "2", "--attacker", "bell", "--attacker-param", "targets=a,b",
                      "--seed", "0")
        assert code == 2

    def test_error_result_written_to_out(self, capsys, tmp_path):
        out = tmp_path / "failed.json"
        code, result = run(capsys, "bfk", "--chain", "2", "--attacker", "eavesdropper", "--seed", "0",
                           "--out", str(out))
        assert code == 2
        assert json.loads(out.read_text(encoding="utf-8")) == result
        assert "error" in result


class TestAttack:
    def test_honest_never_detected(self, capsys):
        code, result = run(capsys, "attack", "--attacker", "honest", "--k", "8", "--trials", "200", "--seed", "1")
        assert code == 0
        assert result["detection_rate"] == 0.0
        assert result["trials"] == 200

    def test_table(self, capsys, tmp_path):
        table = tmp_path / "trials.csv"
        code, result = run(capsys, "attack", "--attacker", "bell", "--k", "2", "--trials", "25", "--seed", "4",
                           "--table", str(table))
        assert code == 0
        assert result["table_path"] == str(table)
        assert len(table.read_text(encoding="utf-8").splitlines()) == 26

    def test_attacker_params(self, capsys):
        code, result = run(capsys, "attack", "--attacker", "replace", "--attacker-param", "recipe=1",
                           "--attacker-param", "targets=0", "--k", "2", "--trials", "50", "--seed", "9",
                           "--basis-rule", "announced")
        assert code == 0
        assert result["basis_rule"] == "announced"


class TestBlindness:
    def test_qotp(self, capsys):
        code, result = run(capsys, "blindness", "--point", "qotp", "--wires", "2", "--seed", "1")
        assert code == 0
        assert result["passed"]

    def test_fixed_secrets_fail(self, capsys):
        code, result = run(capsys, "blindness", "--point", "qotp", "--input", "zero", "--fixed-secrets", "--seed", "1")
        assert code == 1
        assert not result["passed"]

    def test_delegation_point(self, capsys):
        code, _ = run(capsys, "blindness", "--point", "delegation", "--circuit", data_path("circuits", "h_cnot.json"),
                      "--seed", "1")
        assert code == 0

    def test_delta_point(self, capsys):
        code, _ = run(capsys, "blindness", "--point", "bfk-delta", "--chain", "3", "--seed", "1")
        assert code == 0


class TestRepeatability:
    @pytest.mark.parametrize("args", [
        ["bfk", "--chain", "3", "--k", "3", "--l", "2", "--attacker", "bell", "--seed", "6"],
        ["attack", "--attacker", "bell", "--k", "3", "--trials", "40", "--seed", "2"],
        ["blindness", "--point", "handshake-return", "--m", "1", "--k", "1", "--l", "1", "--seed", "4"],
        ["blindness", "--point", "bfk-delta", "--chain", "3", "--seed", "4"],
    ])
    def test_same_seed_same_output(self, capsys, args):
        first_code = run_bqc_lab.main([*args, *QUIET])
        first = capsys.readouterr().out
        assert run_bqc_lab.main([*args, *QUIET]) == first_code
        assert capsys.readouterr().out == first


class TestArguments:
    def test_argparse_errors_exit_2(self, capsys):
        with pytest.raises(SystemExit) as info:
            run_bqc_lab.main(["delegate", "--case", "case1", "--circuit", "x.json", *QUIET])
        assert info.value.code == 2
        with pytest.raises(SystemExit) as info:
            run_bqc_lab.main(["blindness", "--point", "server-memory", "--seed", "1", *QUIET])
        assert info.value.code == 2

    def test_param_values(self):
        assert run_bqc_lab.parse_param_value("true") is True
        assert run_bqc_lab.parse_param_value("0,2") == [0, 2]
        assert run_bqc_lab.parse_param_value("3") == 3
        assert run_bqc_lab.parse_param_value("+") == "+"
        assert run_bqc_lab.parse_attacker_params(["targets=1"]) == {"targets": [1]}
        with pytest.raises(run_bqc_lab.UsageError):
            run_bqc_lab.parse_attacker_params(["targets=a,b"])
