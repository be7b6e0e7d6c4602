"""File formats: graph text/JSON forms, target and solution files, wiring
and network serialization.

The graph text format is line oriented:

    n <vertex_count>
    m <measure_0> <measure_1> ...
    e <u> <v> <weight> [color]

with one ``e`` line per edge.  Floats are written with ``repr``, which
Python guarantees to round-trip bit-exactly.  The JSON form carries the
same fields as an object.
"""

from __future__ import annotations

import json
import numpy as np

from .expander import ClusterWiring, GapCertificate
from .graph import GraphError, MeasuredGraph
from .homogenize import MacroNetwork
from .prescribe import SpectralTarget, WeightSolution
from .topology import ColorAssignment


def _fmt(x: float) -> str:
    return repr(float(x))


# -- measured graphs -----------------------------------------------------


def graph_to_text(g: MeasuredGraph) -> str:
    lines = [f"n {g.vertex_count}"]
    lines.append("m " + " ".join(_fmt(x) for x in g.measures))
    for u, v, w, color in g.edges():
        tail = f" {color}" if color is not None else ""
        lines.append(f"e {u} {v} {_fmt(w)}{tail}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> MeasuredGraph:
    n = None
    measures = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "n":
            n = int(parts[1])
        elif kind == "m":
            measures = [float(x) for x in parts[1:]]
        elif kind == "e":
            if len(parts) == 4:
                edges.append((int(parts[1]), int(parts[2]), float(parts[3])))
            elif len(parts) == 5:
                edges.append((int(parts[1]), int(parts[2]), float(parts[3]), int(parts[4])))
            else:
                raise GraphError(f"line {lineno}: malformed edge record {line!r}")
        else:
            raise GraphError(f"line {lineno}: unknown record {kind!r}")
    if n is None or measures is None:
        raise GraphError("missing 'n' or 'm' record")
    if len(measures) != n:
        raise GraphError(f"expected {n} measures, got {len(measures)}")
    return MeasuredGraph(measures, edges)


def graph_to_json_obj(g: MeasuredGraph) -> dict:
    return {
        "vertex_count": g.vertex_count,
        "measures": [float(x) for x in g.measures],
        "edges": [
            [u, v, w] if color is None else [u, v, w, color]
            for u, v, w, color in g.edges()
        ],
    }


def graph_from_json_obj(obj: dict) -> MeasuredGraph:
    measures = obj["measures"]
    if len(measures) != obj["vertex_count"]:
        raise GraphError("vertex_count does not match measures")
    return MeasuredGraph(measures, [tuple(e) for e in obj["edges"]])


# -- spectral targets and weight solutions --------------------------------


def target_to_json_obj(t: SpectralTarget) -> dict:
    obj = {"targets": list(t.targets), "N": t.N, "epsilon": t.epsilon}
    if t.padding is not None:
        obj["padding"] = list(t.padding)
    return obj


def target_from_json_obj(obj: dict) -> SpectralTarget:
    return SpectralTarget(
        targets=tuple(obj["targets"]),
        N=int(obj["N"]),
        epsilon=float(obj.get("epsilon", 0.5)),
        padding=tuple(obj["padding"]) if "padding" in obj else None,
    )


def solution_to_json_obj(ws: WeightSolution) -> dict:
    return {
        "N": ws.N,
        "vertex_measure": ws.vertex_measure,
        "weights": [[u, v, float(w)] for (u, v), w in sorted(ws.weights.items())],
        "achieved_spectrum": [float(x) for x in ws.achieved_spectrum],
        "mismatch": float(ws.mismatch),
        "restarts_used": ws.restarts_used,
        "seed": ws.seed,
    }


def solution_from_json_obj(obj: dict) -> WeightSolution:
    return WeightSolution(
        N=int(obj["N"]),
        vertex_measure=float(obj["vertex_measure"]),
        weights={(int(u), int(v)): float(w) for u, v, w in obj["weights"]},
        achieved_spectrum=np.asarray(obj["achieved_spectrum"], dtype=float),
        mismatch=float(obj["mismatch"]),
        restarts_used=int(obj["restarts_used"]),
        seed=int(obj.get("seed", 0)),
    )


# -- color assignments -----------------------------------------------------


def colors_to_text(ca: ColorAssignment) -> str:
    """One line per directed Hamiltonian cycle, as a vertex sequence."""
    lines = [f"# N={ca.N} D={ca.D} orientation_seed={ca.orientation_seed}"]
    for cyc in ca.cycles:
        lines.append(" ".join(str(v) for v in cyc))
    return "\n".join(lines) + "\n"


def colors_from_text(text: str) -> ColorAssignment:
    cycles = []
    seed = 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if token.startswith("orientation_seed="):
                    seed = int(token.split("=", 1)[1])
            continue
        cycles.append(tuple(int(x) for x in line.split()))
    if not cycles:
        raise ValueError("no cycles found")
    N = len(cycles[0])
    edge_color = {}
    for color, cyc in enumerate(cycles):
        if sorted(cyc) != list(range(N)):
            raise ValueError(f"cycle {color} is not a permutation of 0..{N - 1}")
        for i in range(N):
            u, v = cyc[i], cyc[(i + 1) % N]
            key = (u, v) if u < v else (v, u)
            if key in edge_color:
                raise ValueError(f"edge {key} appears in two cycles")
            edge_color[key] = color
    expected = {(u, v) for u in range(N) for v in range(u + 1, N)}
    if set(edge_color) != expected:
        raise ValueError("cycles do not cover E(K_N)")
    return ColorAssignment(
        N=N,
        cycles=tuple(cycles),
        edge_color=edge_color,
        orientation_seed=seed,
        orientations=tuple(False for _ in cycles),
    )


# -- cluster wirings -------------------------------------------------------


def wiring_to_json_obj(w: ClusterWiring) -> dict:
    cert = w.gap_certificate
    obj = {
        "size": w.size,
        "D": w.D,
        "permutations": [p.tolist() for p in w.permutations],
        "gap_certificate": {
            "lambda2_adjacency": cert.lambda2_adjacency,
            "threshold": cert.threshold,
            "cheeger_lower": cert.cheeger_lower,
            "resamples": cert.resamples,
            "permutation_draws": cert.permutation_draws,
            "seed": cert.seed,
        },
    }
    if w.ports is not None:
        obj["ports"] = {str(c): list(p) for c, p in w.ports.items()}
        obj["port_seed"] = w.port_seed
    return obj


def wiring_from_json_obj(obj: dict) -> ClusterWiring:
    cert = GapCertificate(**obj["gap_certificate"])
    ports = None
    if "ports" in obj:
        ports = {int(c): tuple(p) for c, p in obj["ports"].items()}
    return ClusterWiring(
        size=int(obj["size"]),
        D=int(obj["D"]),
        permutations=tuple(np.asarray(p, dtype=np.int64) for p in obj["permutations"]),
        gap_certificate=cert,
        ports=ports,
        port_seed=obj.get("port_seed"),
    )


# -- assembled networks ----------------------------------------------------


def network_bookkeeping_json_obj(net: MacroNetwork) -> dict:
    """Sidecar for the graph text file: node -> cluster/corridor labels."""
    return {
        "m": net.m,
        "N": net.N,
        "D": net.D,
        "seed": net.seed,
        "edge_order": [list(e) for e in net.edge_order],
        "corridor_lengths": {f"{u}-{v}": k for (u, v), k in net.corridor_lengths.items()},
        "cluster_of": net.cluster_of.tolist(),
        "corridor_of": net.corridor_of.tolist(),
        "corridor_pos": net.corridor_pos.tolist(),
        "cells": {str(c): cell.C for c, cell in net.cells.items()},
    }


# -- file helpers ----------------------------------------------------------


def write_text(path, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def read_text(path) -> str:
    with open(path) as fh:
        return fh.read()


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
