#!/usr/bin/env python
"""
Blind quantum computation lab.

Runs blind circuit delegation, the handshake-guarded measurement-based run,
attack detection experiments and blindness audits. The JSON result goes to
stdout (identical for identical arguments), logs go to stderr and to a dated
log file under data/output/lab/logs.

USAGE EXAMPLE:
    python run_bqc_lab.py delegate --case case1 --circuit data/input/circuits/h_cnot.json --seed 7
    python run_bqc_lab.py bfk --graph data/input/graphs/chain2.json --k 4 --l 1 --seed 11
    python run_bqc_lab.py attack --attacker bell --k 10 --trials 10000 --seed 3 --basis-rule announced
    python run_bqc_lab.py blindness --point delegation --circuit data/input/circuits/h_cnot.json --seed 1

Exit codes: 0 ok, 1 quantitative check failed, 2 usage or input error, 3 protocol aborted.
"""

import argparse
import json
import logging
import os
import sys
from datetime import datetime

import numpy as np

from lib.quantum import QuantumSimulationError, fidelity, from_amplitudes, new_state
from lib.bqc import (
    BlindnessInstance,
    ClientCase,
    MeasurementPattern,
    Party,
    ProtocolTranscript,
    analyse_point,
    chain_graph,
    brickwork_graph,
    classical_leakage_audit,
    detection_experiment,
    load_circuit,
    load_graph,
    make_attacker,
    run_blind_session,
    run_protocol,
    simulate_direct,
    TRANSMISSION_POINTS,
    Verdict,
)
from lib.bqc import config
from lib.bqc.utils import derive_rng

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """Bad command-line input detected after argparse."""


def setup_logging(log_to_file=True, log_to_console=True):
    """Setup logging configuration. Console output goes to stderr."""
    formatter = logging.Formatter(fmt=config.LOG_FORMAT)

    root = logging.getLogger()
    root.setLevel(logging.INFO)
    for handler in list(root.handlers):
        if getattr(handler, "_lab_handler", False):
            root.removeHandler(handler)
            handler.close()

    if log_to_file:
        os.makedirs(config.LOG_DIR, exist_ok=True)
        log_file = os.path.join(config.LOG_DIR, f"bqc_lab_{datetime.now().strftime('%Y%m%d')}.log")
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        file_handler.setLevel(logging.INFO)
        file_handler._lab_handler = True
        root.addHandler(file_handler)

    if log_to_console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        console_handler.setLevel(logging.INFO)
        console_handler._lab_handler = True
        root.addHandler(console_handler)


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def non_negative(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a count >= 0, got {text}")
    return value


def positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a count >= 1, got {text}")
    return value


def parse_param_value(text):
    """'true'/'false' -> bool, '1,2' -> [1, 2], '3' -> 3, anything else stays a string."""
    lowered = text.strip().lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if "," in text:
        return [int(x) for x in text.split(",") if x.strip()]
    try:
        return int(text)
    except ValueError:
        return text


def parse_attacker_params(items):
    params = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"Attacker parameter must look like key=value, got '{item}'")
        key, value = item.split("=", 1)
        try:
            params[key.strip()] = parse_param_value(value)
        except ValueError:
            raise UsageError(f"Attacker parameter '{key.strip()}' has a bad value '{value}'") from None
    if "targets" in params and isinstance(params["targets"], int):
        params["targets"] = [params["targets"]]
    return params


def resolve_graph(args):
    """Graph + pattern from --graph, or a chain / brickwork generator with zero angles."""
    if args.graph:
        return load_graph(args.graph)
    if args.chain:
        graph = chain_graph(args.chain)
    elif args.brickwork:
        try:
            rows, columns = (int(x) for x in args.brickwork.lower().split("x"))
        except ValueError:
            raise UsageError(f"--brickwork expects ROWSxCOLUMNS, got '{args.brickwork}'") from None
        graph = brickwork_graph(rows, columns)
    else:
        raise UsageError("Give one of --graph, --chain or --brickwork")
    return graph, MeasurementPattern.from_ints({v: 0 for v in graph.measurement_order})


def write_transcript(transcript, path):
    if not path:
        return None
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    transcript.write_jsonl(path)
    logger.info("transcript written to %s (%d entries)", path, len(transcript))
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_delegate(args):
    circuit = load_circuit(args.circuit)
    case = ClientCase.parse(args.case)
    output, session = run_blind_session(case, circuit, args.seed, args.trap_requests)
    value = fidelity(output, simulate_direct(circuit))
    transcript = session.transcript
    audit = classical_leakage_audit(transcript)
    result = {
        "command": "delegate",
        "case": case.value,
        "seed": args.seed,
        "wires": circuit.n_wires,
        "circuit_gate_counts": circuit.gate_counts(),
        "trap_gate_requests": args.trap_requests,
        "fidelity_vs_direct": value,
        "client_gate_counts": transcript.gate_counts(Party.CLIENT),
        "server_gate_counts": transcript.gate_counts(Party.SERVER),
        "server_visible": {
            "requested_gate_counts": audit["requested_gate_counts"],
            "hidden_absent": audit["hidden_absent"],
        },
        "trap_checks_max_infidelity": max(session.trap_checks, default=0.0),
        "transcript_path": write_transcript(transcript, args.transcript),
    }
    code = config.EXIT_OK if value >= 1.0 - config.FIDELITY_THRESHOLD else config.EXIT_FAILURE
    return result, code, transcript


def cmd_bfk(args):
    graph, pattern = resolve_graph(args)
    attacker = make_attacker(args.attacker, **parse_attacker_params(args.attacker_param))
    transcript = ProtocolTranscript("protocol")
    run = run_protocol(graph, pattern, args.k, args.l, attacker, args.seed, args.basis_rule, transcript)
    result = {
        "command": "bfk",
        "seed": args.seed,
        "m": graph.m,
        "k": args.k,
        "l": args.l,
        "attacker": attacker.describe(),
        "basis_rule": args.basis_rule,
        "transcript_path": write_transcript(transcript, args.transcript),
    }
    result.update(run.to_dict())
    if args.show_roles:
        result["roles"] = [r.to_record() for r in run.roles]
    if run.aborted:
        code = config.EXIT_ABORT
    elif run.trap_result.verdict is not Verdict.PASS or run.fidelity < 1.0 - config.FIDELITY_THRESHOLD:
        code = config.EXIT_FAILURE
    else:
        code = config.EXIT_OK
    return result, code, transcript


def cmd_attack(args):
    attacker = make_attacker(args.attacker, **parse_attacker_params(args.attacker_param))
    report = detection_experiment(
        args.k, attacker, args.trials, args.seed,
        m=args.m, l=args.l, basis_rule=args.basis_rule, keep_table=bool(args.table),
    )
    result = {"command": "attack", "seed": args.seed}
    result.update(report.to_dict())
    if args.table:
        directory = os.path.dirname(args.table)
        if directory:
            os.makedirs(directory, exist_ok=True)
        report.table.to_csv(args.table, index=False)
        result["table_path"] = args.table
    return result, config.EXIT_OK, None


def _input_state(args):
    if args.input == "zero":
        return new_state(args.wires)
    if args.input == "plus":
        return from_amplitudes(np.ones(1 << args.wires), normalize=True)
    rng = derive_rng(args.seed, "input")
    dim = 1 << args.wires
    return from_amplitudes(rng.normal(size=dim) + 1j * rng.normal(size=dim), normalize=True)


def cmd_blindness(args):
    instance = BlindnessInstance(
        input_state=_input_state(args) if args.point == "qotp" else None,
        case=ClientCase.parse(args.case),
        circuit=load_circuit(args.circuit) if args.circuit else None,
        trap_gate_requests=args.trap_requests,
        m=args.m,
        k=args.k,
        l=args.l,
        fixed_secrets=args.fixed_secrets,
        sample_count=args.samples,
    )
    if args.point == "bfk-delta":
        instance.graph, instance.pattern = resolve_graph(args)
    report = analyse_point(args.point, instance, args.seed)
    result = {"command": "blindness", "seed": args.seed, "passed": report.passed}
    result.update(report.to_dict())
    if report.sampled:
        code = config.EXIT_OK
    else:
        code = config.EXIT_OK if report.passed else config.EXIT_FAILURE
    return result, code, None


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        description="Blind quantum computation lab",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=non_negative, required=True, help='Run seed (required)')
    common.add_argument('--out', type=str, help='Also write the JSON result to this file')
    common.add_argument('--no-log-file', action='store_true', help='Disable logging to file')
    common.add_argument('--quiet', action='store_true', help='Disable console logging')

    graph_args = argparse.ArgumentParser(add_help=False)
    graph_args.add_argument('--graph', type=str, help='Graph + pattern JSON file')
    graph_args.add_argument('--chain', type=positive, help='Use an n-vertex chain with zero angles')
    graph_args.add_argument('--brickwork', type=str, help='Use a ROWSxCOLUMNS brickwork with zero angles')

    attacker_args = argparse.ArgumentParser(add_help=False)
    attacker_args.add_argument('--attacker', default='honest', help='honest, bell or replace (default: honest)')
    attacker_args.add_argument('--attacker-param', action='append', metavar='KEY=VALUE',
                               help='Attacker parameter, e.g. targets=0,2 or recipe=1 (repeatable)')
    attacker_args.add_argument('--basis-rule', choices=config.BASIS_RULES, default=config.DEFAULT_BASIS_RULE,
                               help=f'Decoy basis rule (default: {config.DEFAULT_BASIS_RULE})')

    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('delegate', parents=[common], help='Blind circuit delegation')
    p.add_argument('--case', required=True, help='case1 or case2')
    p.add_argument('--circuit', required=True, help='Circuit JSON file')
    p.add_argument('--trap-requests', type=non_negative, default=0, help='Extra trap gate requests (default: 0)')
    p.add_argument('--transcript', type=str, help='Write the transcript as JSON lines')
    p.set_defaults(handler=cmd_delegate)

    p = sub.add_parser('bfk', parents=[common, graph_args, attacker_args], help='Handshake plus blind measurement run')
    p.add_argument('--k', type=non_negative, default=4, help='Decoy qubits (default: 4)')
    p.add_argument('--l', type=non_negative, default=1, help='Trap qubits (default: 1)')
    p.add_argument('--show-roles', action='store_true', help='Include the client\'s secret roles in the result')
    p.add_argument('--transcript', type=str, help='Write the transcript as JSON lines')
    p.set_defaults(handler=cmd_bfk)

    p = sub.add_parser('attack', parents=[common, attacker_args], help='Decoy detection experiment')
    p.add_argument('--k', type=non_negative, required=True, help='Decoy qubits')
    p.add_argument('--m', type=non_negative, default=0, help='Computation qubits (default: 0)')
    p.add_argument('--l', type=non_negative, default=0, help='Trap qubits (default: 0)')
    p.add_argument('--trials', type=positive, default=config.DEFAULT_TRIALS,
                   help=f'Number of trials (default: {config.DEFAULT_TRIALS})')
    p.add_argument('--table', type=str, help='Write the per-trial table as CSV')
    p.set_defaults(handler=cmd_attack)

    p = sub.add_parser('blindness', parents=[common, graph_args], help='Server-view blindness audit')
    p.add_argument('--point', required=True, choices=TRANSMISSION_POINTS, help='Transmission point')
    p.add_argument('--case', default='case1', help='case1 or case2 (default: case1)')
    p.add_argument('--circuit', type=str, help='Circuit JSON file (delegation point)')
    p.add_argument('--trap-requests', type=non_negative, default=0, help='Trap gate requests (delegation point)')
    p.add_argument('--wires', type=positive, default=1, help='Padded wires (qotp point, default: 1)')
    p.add_argument('--input', choices=('zero', 'plus', 'random'), default='random',
                   help='Input state (qotp point, default: random)')
    p.add_argument('--m', type=non_negative, default=1, help='Computation qubits (handshake-return point)')
    p.add_argument('--k', type=non_negative, default=1, help='Decoy qubits (handshake-return point)')
    p.add_argument('--l', type=non_negative, default=1, help='Trap qubits (handshake-return point)')
    p.add_argument('--fixed-secrets', action='store_true', help='Use one fixed secret instead of the uniform space')
    p.add_argument('--samples', type=positive, default=config.DEFAULT_SAMPLE_COUNT,
                   help=f'Samples when the space is too large to enumerate (default: {config.DEFAULT_SAMPLE_COUNT})')
    p.set_defaults(handler=cmd_blindness)
    return parser


def emit(result, path=None):
    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    if path:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text + "\n")


def main(argv=None):
    """Main function with command line argument parsing. Returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(log_to_file=not args.no_log_file, log_to_console=not args.quiet)
    logger.info("bqc lab: %s seed=%d", args.command, args.seed)

    try:
        result, code, _ = args.handler(args)
    except (UsageError, QuantumSimulationError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        emit({"command": args.command, "error": str(e), "seed": args.seed}, args.out)
        return config.EXIT_USAGE

    emit(result, args.out)
    if code == config.EXIT_ABORT:
        logger.warning("protocol aborted at the decoy check")
    elif code == config.EXIT_FAILURE:
        logger.warning("quantitative check failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
