"""
JSON input files for circuits and measurement patterns.

Circuit:  {"wires": n, "ops": [{"g": "H"|"T"|"CNOT", "w": [..]}, ...]}
Graph:    {"m": n, "edges": [[u, v], ...], "order": [...],
           "deps": {"v": {"x": [...], "z": [...]}}, "phi": {"v": k}}

A graph file may name a flow ({"flow": {"u": f(u)}}) instead of explicit
dependency sets, or use a generator shortcut: {"chain": n} or
{"brickwork": {"rows": r, "columns": c}}. Angles are integers k (units of pi/4).
"""

import json
import logging
import os
from typing import Any, Dict, Mapping, Tuple

from lib.quantum import ValidationError

from .bfk import Dependencies, GraphSpec, MeasurementPattern, brickwork_graph, chain_graph
from .delegation import Circuit

logger = logging.getLogger(__name__)


def load_json(path):
    """
    Read a JSON file.

    Args:
        path (str): File path

    Returns:
        Parsed JSON value

    Raises:
        ValidationError: Missing file or invalid JSON
    """
    if not os.path.exists(path):
        raise ValidationError(f"Input file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"Invalid JSON in {path}: {e}") from None


def _require(data: Mapping[str, Any], key: str, what: str) -> Any:
    if not isinstance(data, Mapping) or key not in data:
        raise ValidationError(f"{what} is missing '{key}'")
    return data[key]


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------

def circuit_from_dict(data: Mapping[str, Any]) -> Circuit:
    wires = _require(data, "wires", "Circuit")
    ops = _require(data, "ops", "Circuit")
    if not isinstance(ops, list):
        raise ValidationError("Circuit 'ops' must be a list")
    pairs = []
    for index, op in enumerate(ops):
        gate = _require(op, "g", f"Circuit op {index}")
        op_wires = _require(op, "w", f"Circuit op {index}")
        if not isinstance(op_wires, list):
            raise ValidationError(f"Circuit op {index}: 'w' must be a list")
        pairs.append((gate, op_wires))
    try:
        return Circuit.from_ops(int(wires), pairs)
    except ValidationError:
        raise
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Bad circuit: {e}") from None


def circuit_to_dict(circuit: Circuit) -> Dict[str, Any]:
    return {"wires": circuit.n_wires, "ops": [op.to_record() for op in circuit.ops]}


def load_circuit(path: str) -> Circuit:
    circuit = circuit_from_dict(load_json(path))
    logger.debug("loaded circuit %s: %d wires, %d ops", path, circuit.n_wires, len(circuit))
    return circuit


# ---------------------------------------------------------------------------
# Graphs and patterns
# ---------------------------------------------------------------------------

def _int_keys(mapping: Any, what: str) -> Dict[int, Any]:
    if not isinstance(mapping, Mapping):
        raise ValidationError(f"'{what}' must be an object keyed by vertex")
    try:
        return {int(k): v for k, v in mapping.items()}
    except ValueError:
        raise ValidationError(f"'{what}' keys must be vertex numbers") from None


def graph_from_dict(data: Mapping[str, Any]) -> Tuple[GraphSpec, MeasurementPattern]:
    try:
        return _graph_from_dict(data)
    except ValidationError:
        raise
    except (TypeError, ValueError, AttributeError) as e:
        raise ValidationError(f"Bad graph: {e}") from None


def _graph_from_dict(data: Mapping[str, Any]) -> Tuple[GraphSpec, MeasurementPattern]:
    if not isinstance(data, Mapping):
        raise ValidationError("A graph file must hold a JSON object")
    phi = {v: int(k) for v, k in _int_keys(data.get("phi", {}), "phi").items()}

    if "chain" in data:
        graph = chain_graph(int(data["chain"]))
    elif "brickwork" in data:
        shape = data["brickwork"]
        graph = brickwork_graph(int(_require(shape, "rows", "brickwork")), int(_require(shape, "columns", "brickwork")))
    else:
        m = int(_require(data, "m", "Graph"))
        edges = [tuple(int(x) for x in e) for e in data.get("edges", [])]
        if any(len(e) != 2 for e in edges):
            raise ValidationError(f"Every edge needs two vertices, got {data.get('edges')}")
        order = [int(v) for v in _require(data, "order", "Graph")]
        if "flow" in data:
            flow = {u: int(f) for u, f in _int_keys(data["flow"], "flow").items()}
            graph = GraphSpec.from_flow(m, edges, order, flow)
        else:
            deps = {
                v: Dependencies(frozenset(int(u) for u in d.get("x", [])), frozenset(int(u) for u in d.get("z", [])))
                for v, d in _int_keys(data.get("deps", {}), "deps").items()
            }
            graph = GraphSpec(m, frozenset(edges), tuple(order), deps)

    graph.check_dependencies()
    missing = [v for v in graph.measurement_order if v not in phi]
    if missing:
        # unlisted angles default to 0
        phi.update({v: 0 for v in missing})
    return graph, MeasurementPattern.from_ints(phi)


def graph_to_dict(graph: GraphSpec, pattern: MeasurementPattern) -> Dict[str, Any]:
    deps = {
        str(v): {"x": sorted(graph.deps(v).x), "z": sorted(graph.deps(v).z)}
        for v in range(graph.m) if graph.deps(v).x or graph.deps(v).z
    }
    return {
        "m": graph.m,
        "edges": [list(e) for e in sorted(graph.edges)],
        "order": list(graph.measurement_order),
        "deps": deps,
        "phi": {str(v): a.k for v, a in sorted(pattern.phi.items())},
    }


def load_graph(path: str) -> Tuple[GraphSpec, MeasurementPattern]:
    graph, pattern = graph_from_dict(load_json(path))
    logger.debug("loaded graph %s: m=%d edges=%d measured=%d", path, graph.m, len(graph.edges),
                 len(graph.measurement_order))
    return graph, pattern
