"""Combinatorial scaffolding: Hamiltonian-cycle coloring of K_N and
Euler-characteristic bookkeeping for the surface dual-graph models.

For odd N the complete graph splits into D = (N-1)/2 edge-disjoint
Hamiltonian cycles (Walecki's construction: a zigzag starter cycle through
a hub vertex, rotated D times).  Orienting each cycle gives every vertex
exactly one incoming and one outgoing edge per color, which is the degree
structure the corridor assembler needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .graph import MeasuredGraph


@dataclass(frozen=True)
class ColorAssignment:
    """Directed Hamiltonian cycles covering E(K_N), one color each."""

    N: int
    cycles: Tuple[Tuple[int, ...], ...]
    edge_color: Dict[Tuple[int, int], int]
    orientation_seed: int
    orientations: Tuple[bool, ...]

    @property
    def D(self) -> int:
        return (self.N - 1) // 2

    def directed_edges(self, color: int):
        """Yield (tail, head) pairs of the given color, following the cycle."""
        cyc = self.cycles[color]
        for i in range(len(cyc)):
            yield cyc[i], cyc[(i + 1) % len(cyc)]

    def out_neighbor(self, color: int, vertex: int) -> int:
        cyc = self.cycles[color]
        i = cyc.index(vertex)
        return cyc[(i + 1) % len(cyc)]


def _zigzag_starter(k: int) -> list[int]:
    """Walecki starter path 0, 1, 2k-1, 2, 2k-2, ... on Z_{2k}, ending at k."""
    out = [0]
    lo, hi = 1, 2 * k - 1
    take_lo = True
    while lo <= hi:
        if take_lo:
            out.append(lo)
            lo += 1
        else:
            out.append(hi)
            hi -= 1
        take_lo = not take_lo
    return out


def walecki_decomposition(N: int, orientation_seed: int = 0) -> ColorAssignment:
    """Split E(K_N) into (N-1)/2 directed Hamiltonian cycles (N odd >= 5).

    Each undirected cycle gets one of its two orientations at random
    (seed-determined and recorded).  The decomposition is verified before
    returning: edge-disjoint cycles covering E(K_N) exactly once.
    """
    if N % 2 == 0 or N < 5:
        raise ValueError(f"need odd N >= 5, got {N}")
    k = (N - 1) // 2
    hub = N - 1
    starter = _zigzag_starter(k)
    rng = np.random.default_rng(orientation_seed)
    flips = rng.integers(0, 2, size=k).astype(bool)

    cycles = []
    for i in range(k):
        cyc = [hub] + [(x + i) % (2 * k) for x in starter]
        if flips[i]:
            cyc = [cyc[0]] + cyc[1:][::-1]
        cycles.append(tuple(cyc))

    edge_color: Dict[Tuple[int, int], int] = {}
    for color, cyc in enumerate(cycles):
        for idx in range(len(cyc)):
            u, v = cyc[idx], cyc[(idx + 1) % len(cyc)]
            key = (u, v) if u < v else (v, u)
            if key in edge_color:
                raise AssertionError(f"edge {key} covered twice in Walecki output")
            edge_color[key] = color
    expected = {(u, v) for u in range(N) for v in range(u + 1, N)}
    if set(edge_color) != expected:
        raise AssertionError("Walecki output does not cover E(K_N)")

    return ColorAssignment(
        N=N,
        cycles=tuple(cycles),
        edge_color=edge_color,
        orientation_seed=orientation_seed,
        orientations=tuple(bool(f) for f in flips),
    )


def genus_complete_construction(N: int) -> int:
    """Genus 1 + N(N-3)/2 of the surface dual to K_N with genus-0 pieces."""
    if N < 4:
        raise ValueError(f"need N >= 4, got {N}")
    return 1 + (N * (N - 3)) // 2


@dataclass(frozen=True)
class SurfaceModel:
    """Dual graph of a cut surface: vertex-piece areas, genera, base weights.

    ``dual_graph`` carries the piece areas as measures and the prescribed
    base weights w_e; the pinch family rescales those weights by delta.
    """

    dual_graph: MeasuredGraph
    vertex_genera: Tuple[int, ...]

    def __post_init__(self):
        if len(self.vertex_genera) != self.dual_graph.vertex_count:
            raise ValueError("one genus per vertex piece required")
        if any(g < 0 for g in self.vertex_genera):
            raise ValueError("vertex genera must be non-negative")

    @property
    def edge_base_weights(self) -> Dict[Tuple[int, int], float]:
        return {(u, v): w for u, v, w, _ in self.dual_graph.edges()}


def euler_genus_of_dual(s: SurfaceModel) -> int:
    """Genus from piece Euler characteristics: chi(X_v) = 2 - 2 g_v - deg(v).

    Collar annuli contribute chi = 0, so the total surface satisfies
    2 - 2*gamma = sum_v chi(X_v).
    """
    g = s.dual_graph
    deg = np.zeros(g.vertex_count, dtype=int)
    u, v, _ = g.edge_arrays
    np.add.at(deg, u, 1)
    np.add.at(deg, v, 1)
    chi_total = sum(2 - 2 * gv - int(dv) for gv, dv in zip(s.vertex_genera, deg))
    if chi_total % 2 != 0:
        raise ValueError(f"inconsistent input: total chi {chi_total} is odd")
    return 1 - chi_total // 2


def p3_surface_model(w12: float, w23: float) -> SurfaceModel:
    """The worked-example surface: three tori pieces of areas (2pi, 4pi, 2pi)
    joined in a path, genus 1 each."""
    dual = MeasuredGraph(
        [2 * np.pi, 4 * np.pi, 2 * np.pi],
        [(0, 1, w12), (1, 2, w23)],
    )
    return SurfaceModel(dual_graph=dual, vertex_genera=(1, 1, 1))


def complete_surface_model(
    N: int, weights: Dict[Tuple[int, int], float], vertex_area: float | None = None
) -> SurfaceModel:
    """K_N surface model: N genus-0 pieces with N-1 boundary curves each.

    Default piece area 2*pi*(N-3), the hyperbolic area forced by
    Gauss-Bonnet for an (N-1)-holed sphere.
    """
    if vertex_area is None:
        vertex_area = 2 * np.pi * (N - 3)
    edges = [(u, v, weights[(u, v) if u < v else (v, u)]) for u in range(N) for v in range(u + 1, N)]
    dual = MeasuredGraph([vertex_area] * N, edges)
    return SurfaceModel(dual_graph=dual, vertex_genera=(0,) * N)
