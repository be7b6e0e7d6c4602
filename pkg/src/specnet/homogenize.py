"""Block cell problems, corridor chains, and the heavy-vertex assembler.

Each copy of the fundamental block is a small port-graph.  Gluing two
copies along a color-i face adds an edge of that color's port conductance
between the out-face node of one copy and the in-face node of the next;
sealing a color within a single copy identifies its in and out face nodes
at equal potential (a no-op self-loop for single-node blocks).

The cell problem for color i minimizes the energy of one period of the
bi-infinite chain under the unit potential shift per period; the minimum
is the effective conductance C_i.  A corridor of K sealed copies then has
end-to-end conductance C_i/K up to an O(1/K^2) correction, which is the
law the assembled networks are measured against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .expander import ClusterWiring, WiringError, expose_ports, sample_wiring
from .graph import MeasuredGraph
from .prescribe import SpectralTarget, WeightSolution
from .topology import ColorAssignment


class CellProblemError(ValueError):
    """Singular cell or corridor system (disconnected after sealing)."""


class AssemblyError(RuntimeError):
    """Network assembly failed (scale too small or sampling failure)."""


@dataclass(frozen=True)
class BlockModel:
    """Port-graph standing for the fundamental block.

    ``measures`` are per-node volumes summing to V_F; ``ports`` maps each
    color to its (in_node, out_node) face pair, and ``port_conductance``
    to the face coupling used whenever that color's faces are glued.
    """

    measures: Tuple[float, ...]
    internal_edges: Tuple[Tuple[int, int, float], ...]
    ports: Dict[int, Tuple[int, int]]
    port_conductance: Dict[int, float]

    def __post_init__(self):
        if not self.measures or any(mv <= 0 for mv in self.measures):
            raise ValueError("block measures must be positive")
        n = len(self.measures)
        for u, v, w in self.internal_edges:
            if not (0 <= u < n and 0 <= v < n) or w <= 0:
                raise ValueError(f"bad internal edge ({u},{v},{w})")
        if set(self.ports) != set(self.port_conductance):
            raise ValueError("ports and port conductances must cover the same colors")
        for color, (a, b) in self.ports.items():
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"port nodes for color {color} out of range")
            if self.port_conductance[color] <= 0:
                raise ValueError(f"port conductance for color {color} must be positive")
        # the block itself must be connected through internal edges
        if n > 1:
            parent = list(range(n))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for u, v, _ in self.internal_edges:
                parent[find(v)] = find(u)
            if len({find(i) for i in range(n)}) != 1:
                raise ValueError("block internal edges must connect all nodes")

    @property
    def node_count(self) -> int:
        return len(self.measures)

    @property
    def D(self) -> int:
        return len(self.ports)

    @property
    def V_F(self) -> float:
        return float(sum(self.measures))


def default_block(D: int, V_F: float = 1.0, port_conductance: float = 1.0) -> BlockModel:
    """Single-node block: every face lands on the one node, C_i = conductance."""
    return BlockModel(
        measures=(V_F,),
        internal_edges=(),
        ports={i: (0, 0) for i in range(D)},
        port_conductance={i: port_conductance for i in range(D)},
    )


def diamond_block(V_F: float = 1.0) -> BlockModel:
    """Four-node test block (D = 2) with a nontrivial cell solution.

    Color 0 runs along the 0 -> 3 axis, color 1 across the 1 -> 2 axis, so
    sealing either color contracts the other axis and changes the
    effective conductance.
    """
    q = V_F / 4.0
    return BlockModel(
        measures=(q, q, q, q),
        internal_edges=((0, 1, 1.0), (0, 2, 2.0), (1, 3, 2.0), (2, 3, 1.0)),
        ports={0: (0, 3), 1: (1, 2)},
        port_conductance={0: 1.5, 1: 1.0},
    )


@dataclass(frozen=True)
class CellSolution:
    """Harmonic one-period potential and its energy (the conductance C)."""

    color: int
    chi: np.ndarray
    C: float


@dataclass(frozen=True)
class _SealedBlock:
    """Block with all colors except one identified in-to-out."""

    color: int
    rep: Tuple[int, ...]          # original node -> contracted node
    node_count: int
    measures: np.ndarray
    edges: Tuple[Tuple[int, int, float], ...]
    in_node: int
    out_node: int
    conductance: float


def _seal_block(b: BlockModel, color: int) -> _SealedBlock:
    if color not in b.ports:
        raise ValueError(f"block has no color {color}")
    n = b.node_count
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j, (a, bb) in b.ports.items():
        if j != color:
            parent[find(bb)] = find(a)
    roots = sorted({find(i) for i in range(n)})
    index = {r: k for k, r in enumerate(roots)}
    rep = tuple(index[find(i)] for i in range(n))
    measures = np.zeros(len(roots))
    for i, mv in enumerate(b.measures):
        measures[rep[i]] += mv
    edges = []
    for u, v, w in b.internal_edges:
        ru, rv = rep[u], rep[v]
        if ru != rv:
            edges.append((ru, rv, w))
    a_in, a_out = b.ports[color]
    return _SealedBlock(
        color=color,
        rep=rep,
        node_count=len(roots),
        measures=measures,
        edges=tuple(edges),
        in_node=rep[a_in],
        out_node=rep[a_out],
        conductance=b.port_conductance[color],
    )


def effective_conductance(b: BlockModel, color: int) -> CellSolution:
    """Solve the one-period cell problem for the given color.

    Colors j != color are sealed in-to-out; the color's out-port connects
    to the in-port of the next period through the port conductance with a
    unit potential shift.  The minimizer is a linear solve; its energy is
    the effective conductance C > 0.  The returned chi lives on the
    original block nodes, gauge-fixed to 0 at the in-port.
    """
    sealed = _seal_block(b, color)
    n = sealed.node_count
    c = sealed.conductance
    # energy: sum_e w (x_u - x_v)^2 + c * (x_in + 1 - x_out)^2; the wrap
    # edge enters the stiffness normally and the unit shift lands in the rhs
    K = np.zeros((n, n))
    for u, v, w in sealed.edges:
        K[u, u] += w
        K[v, v] += w
        K[u, v] -= w
        K[v, u] -= w
    i_in, i_out = sealed.in_node, sealed.out_node
    K[i_in, i_in] += c
    K[i_out, i_out] += c
    K[i_in, i_out] -= c
    K[i_out, i_in] -= c
    rhs = np.zeros(n)
    rhs[i_in] -= c
    rhs[i_out] += c
    # gauge: chi[in] = 0
    free = [i for i in range(n) if i != i_in]
    x = np.zeros(n)
    if free:
        idx = np.array(free)
        try:
            x[idx] = np.linalg.solve(K[np.ix_(idx, idx)], rhs[idx])
        except np.linalg.LinAlgError as exc:
            raise CellProblemError(
                "cell system singular (period disconnected after sealing)"
            ) from exc
    energy = 0.0
    for u, v, w in sealed.edges:
        energy += w * (x[u] - x[v]) ** 2
    energy += c * (x[i_in] + 1.0 - x[i_out]) ** 2
    if not energy > 0:
        raise CellProblemError(f"non-positive cell energy {energy}")
    chi = np.array([x[sealed.rep[i]] for i in range(b.node_count)])
    return CellSolution(color=color, chi=chi, C=float(energy))


def corridor_chain(
    b: BlockModel, color: int, K: int
) -> tuple[MeasuredGraph, int, int, list]:
    """K sealed copies chained along one color.

    Returns (graph, entry_node, exit_node, copy_of) where entry/exit are
    the free in-face of copy 0 and out-face of copy K-1, and ``copy_of``
    maps each graph node to its copy index.
    """
    if K < 1:
        raise ValueError("need at least one block in the chain")
    sealed = _seal_block(b, color)
    nc = sealed.node_count
    measures = np.tile(sealed.measures, K)
    edges = []
    copy_of = []
    for t in range(K):
        base = t * nc
        copy_of.extend([t] * nc)
        for u, v, w in sealed.edges:
            edges.append((base + u, base + v, w))
        if t + 1 < K:
            edges.append((base + sealed.out_node, (t + 1) * nc + sealed.in_node, sealed.conductance))
    g = MeasuredGraph(measures, edges)
    return g, sealed.in_node, (K - 1) * nc + sealed.out_node, copy_of


def corridor_min_energy(
    b: BlockModel, color: int, K: int, a: float, b_val: float
) -> tuple[float, np.ndarray]:
    """Exact minimal energy of a K-block corridor clamped to (a, b_val).

    The end data couple to the chain through the color's port conductance
    (the same coupling a cluster attachment uses), so the single-node
    block reproduces the series law energy = c (a-b)^2 / (K+1) exactly.
    Returns (energy, interior potentials).
    """
    g, entry, exit_, _ = corridor_chain(b, color, K)
    c = b.port_conductance[color]
    n = g.vertex_count
    edges = [(u, v, w) for u, v, w, _ in g.edges()]
    K_mat = np.zeros((n, n))
    rhs = np.zeros(n)
    for u, v, w in edges:
        K_mat[u, u] += w
        K_mat[v, v] += w
        K_mat[u, v] -= w
        K_mat[v, u] -= w
    K_mat[entry, entry] += c
    rhs[entry] += c * a
    K_mat[exit_, exit_] += c
    rhs[exit_] += c * b_val
    try:
        x = np.linalg.solve(K_mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise CellProblemError(f"corridor system singular: {exc}") from exc
    energy = c * (x[entry] - a) ** 2 + c * (x[exit_] - b_val) ** 2
    for u, v, w in edges:
        energy += w * (x[u] - x[v]) ** 2
    return float(energy), x


def corridor_length(m: int, C_color: float, w_star: float) -> int:
    """Block count floor(m * C / w*) of the corridor for one edge."""
    if m < 1 or C_color <= 0 or w_star <= 0:
        raise ValueError("need m >= 1 and positive conductance and weight")
    K = int(math.floor(m * C_color / w_star))
    if K < 1:
        raise AssemblyError(
            f"m = {m} too small: corridor length floor({m}*{C_color}/{w_star}) = 0"
        )
    return K


@dataclass
class MacroNetwork:
    """Assembled heavy-vertex network with full node bookkeeping.

    ``cluster_of[i]`` is the macroscopic vertex of node i or -1;
    ``corridor_of[i]`` indexes into ``edge_order`` or is -1;
    ``corridor_pos[i]`` is the copy index along its corridor or -1.
    """

    graph: MeasuredGraph
    m: int
    N: int
    D: int
    cluster_of: np.ndarray
    corridor_of: np.ndarray
    corridor_pos: np.ndarray
    edge_order: Tuple[Tuple[int, int], ...]
    corridor_lengths: Dict[Tuple[int, int], int]
    color_assignment: ColorAssignment
    cells: Dict[int, CellSolution]
    wirings: Tuple[ClusterWiring, ...]
    block: BlockModel
    seed: int

    def cluster_nodes(self, v: int) -> np.ndarray:
        return np.nonzero(self.cluster_of == v)[0]

    def corridor_nodes(self, edge: Tuple[int, int]) -> np.ndarray:
        idx = self.edge_order.index(edge)
        return np.nonzero(self.corridor_of == idx)[0]


def assemble_network(
    t: SpectralTarget,
    ws: WeightSolution,
    b: BlockModel,
    ca: ColorAssignment,
    m: int,
    seed: int,
    cells: Optional[Mapping[int, CellSolution]] = None,
    gap_threshold: Optional[float] = None,
) -> MacroNetwork:
    """Build the full network: N expander clusters of m^3 block copies,
    joined by one corridor per K_N edge.

    Cluster wirings are sampled per vertex with seeds derived from
    ``seed``; the D port edges freed in each cluster receive the D
    incoming and D outgoing corridors of the matching colors.  Corridor
    interior copies are sealed in every color but their own.
    """
    N = ca.N
    if ws.N != N:
        raise ValueError(f"weight solution is for N={ws.N}, color assignment for N={N}")
    if t.N != N:
        raise ValueError(f"spectral target is for N={t.N}, color assignment for N={N}")
    D = ca.D
    if b.D != D:
        raise ValueError(f"block has {b.D} colors, need D={D}")
    size = m**3
    if size <= 4 * D:
        raise AssemblyError(f"m={m} too small: cluster size {size} <= 4D = {4 * D}")

    if cells is None:
        cells = {i: effective_conductance(b, i) for i in range(D)}
    lengths: Dict[Tuple[int, int], int] = {}
    for key, color in ca.edge_color.items():
        lengths[key] = corridor_length(m, cells[color].C, ws.weights[key])

    rng = np.random.default_rng(seed)
    cluster_seeds = rng.integers(0, 2**62, size=N)
    port_seeds = rng.integers(0, 2**62, size=N)
    wirings = []
    for v in range(N):
        ported = None
        for bump in range(5):
            try:
                wiring = sample_wiring(
                    size, D, int(cluster_seeds[v]) + bump, gap_threshold=gap_threshold
                )
                ported = expose_ports(wiring, int(port_seeds[v]) + bump)
                break
            except WiringError:
                continue
        if ported is None:
            raise AssemblyError(f"cluster {v}: wiring sampling failed after retries")
        wirings.append(ported)

    bn = b.node_count
    sealed = {i: _seal_block(b, i) for i in range(D)}
    cluster_span = size * bn
    n_cluster_nodes = N * cluster_span
    edge_order = tuple(sorted(ca.edge_color))
    corridor_base = {}
    offset = n_cluster_nodes
    for key in edge_order:
        corridor_base[key] = offset
        offset += lengths[key] * sealed[ca.edge_color[key]].node_count
    n_total = offset

    measures = np.empty(n_total)
    block_meas = np.asarray(b.measures)
    for v in range(N):
        for tt in range(size):
            base = v * cluster_span + tt * bn
            measures[base : base + bn] = block_meas
    cluster_of = np.full(n_total, -1, dtype=np.int64)
    corridor_of = np.full(n_total, -1, dtype=np.int64)
    corridor_pos = np.full(n_total, -1, dtype=np.int64)
    cluster_of[:n_cluster_nodes] = np.repeat(np.arange(N), cluster_span)

    edges: list[tuple] = []

    def cluster_node(v: int, copy: int, local: int) -> int:
        return v * cluster_span + copy * bn + local

    # cluster interiors: block contents plus wiring edges through the ports
    for v in range(N):
        w = wirings[v]
        for tt in range(size):
            base = cluster_node(v, tt, 0)
            for u_l, v_l, wt in b.internal_edges:
                edges.append((base + u_l, base + v_l, wt))
        for color, perm in enumerate(w.permutations):
            out_l, in_l = b.ports[color][1], b.ports[color][0]
            cond = b.port_conductance[color]
            skip = w.ports[color]
            for tt in range(size):
                head = int(perm[tt])
                if (tt, head) == skip:
                    continue
                edges.append(
                    (cluster_node(v, tt, out_l), cluster_node(v, head, in_l), cond, color)
                )

    # corridors: sealed copies chained along their color, ends attached to
    # the exposed cluster port faces
    for key in edge_order:
        color = ca.edge_color[key]
        sb = sealed[color]
        K_e = lengths[key]
        base = corridor_base[key]
        for tt in range(K_e):
            cbase = base + tt * sb.node_count
            corridor_of[cbase : cbase + sb.node_count] = edge_order.index(key)
            corridor_pos[cbase : cbase + sb.node_count] = tt
            measures[cbase : cbase + sb.node_count] = sb.measures
            for u_l, v_l, wt in sb.edges:
                edges.append((cbase + u_l, cbase + v_l, wt))
            if tt + 1 < K_e:
                edges.append(
                    (
                        cbase + sb.out_node,
                        base + (tt + 1) * sb.node_count + sb.in_node,
                        sb.conductance,
                        color,
                    )
                )
        # orientation: corridor runs tail -> head along the directed cycle
        u_v, v_v = key
        head = ca.out_neighbor(color, u_v)
        tail_v, head_v = (u_v, v_v) if head == v_v else (v_v, u_v)
        tail_port = wirings[tail_v].ports[color]      # (s, sigma(s)): out face of s freed
        head_port = wirings[head_v].ports[color]
        tail_node = cluster_node(tail_v, tail_port[0], b.ports[color][1])
        head_node = cluster_node(head_v, head_port[1], b.ports[color][0])
        edges.append((tail_node, base + sb.in_node, sb.conductance, color))
        edges.append(
            (head_node, base + (K_e - 1) * sb.node_count + sb.out_node, sb.conductance, color)
        )

    graph = MeasuredGraph(measures, edges)
    if not graph.is_connected():
        raise AssemblyError(
            f"assembled network disconnected ({graph.component_count()} components)"
        )
    return MacroNetwork(
        graph=graph,
        m=m,
        N=N,
        D=D,
        cluster_of=cluster_of,
        corridor_of=corridor_of,
        corridor_pos=corridor_pos,
        edge_order=edge_order,
        corridor_lengths=lengths,
        color_assignment=ca,
        cells=dict(cells),
        wirings=tuple(wirings),
        block=b,
        seed=seed,
    )


def macro_laplacian(
    ws: WeightSolution,
    ca: ColorAssignment,
    cells: Mapping[int, CellSolution],
    m: int,
    V_F: float,
) -> MeasuredGraph:
    """Macroscopic N-vertex model: measures m^3 V_F, weights C_{c(e)} / K_e(m)."""
    if V_F <= 0:
        raise ValueError("V_F must be positive")
    edges = []
    for key, color in ca.edge_color.items():
        K_e = corridor_length(m, cells[color].C, ws.weights[key])
        edges.append((key[0], key[1], cells[color].C / K_e, color))
    return MeasuredGraph(np.full(ca.N, m**3 * V_F), edges)
