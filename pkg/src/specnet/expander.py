"""Cluster internals: random 2D-regular colored wirings with certified
spectral gap, port exposure, and Cheeger-constant machinery.

A wiring on n nodes is a tuple of D permutations; color class i is the
directed functional graph of permutation i.  The union must be a simple
connected 2D-regular undirected graph with adjacency second eigenvalue
below the certified threshold (asymptotically 2*sqrt(2D-1), plus slack).
Permutations are redrawn one at a time until the union is simple; the
gap and connectivity are then verified on the result, never assumed.

Ports: deleting one edge per color, the D deleted edges pairwise
vertex-disjoint, frees one outgoing and one incoming face per color for
corridor attachment while keeping the cluster connected.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import DisconnectedGraphError, MeasuredGraph

_DENSE_EIG_LIMIT = 1500


class WiringError(RuntimeError):
    """Sampling or port exposure failed within its budget."""


@dataclass(frozen=True)
class GapCertificate:
    """Measured adjacency second eigenvalue and the implied Cheeger floor."""

    lambda2_adjacency: float
    threshold: float
    cheeger_lower: float
    resamples: int
    permutation_draws: int
    seed: int


@dataclass(frozen=True)
class ClusterWiring:
    """D directed permutation color classes on ``size`` nodes.

    ``ports`` maps each color to the deleted edge (tail, head): the tail's
    outgoing face and the head's incoming face are exposed for corridors.
    Unset (None) until `expose_ports` runs.
    """

    size: int
    D: int
    permutations: Tuple[np.ndarray, ...]
    gap_certificate: GapCertificate
    ports: Optional[Dict[int, Tuple[int, int]]] = None
    port_seed: Optional[int] = None

    def undirected_edges(self, skip_ports: bool = False):
        """Yield (u, v, color) for every wiring edge, optionally minus ports."""
        for color, perm in enumerate(self.permutations):
            skip = self.ports.get(color) if (skip_ports and self.ports) else None
            for t in range(self.size):
                head = int(perm[t])
                if skip is not None and (t, head) == skip:
                    continue
                yield t, head, color

    def graph(self, skip_ports: bool = False) -> MeasuredGraph:
        """Unit-measure, unit-weight measured graph of the wiring."""
        edges = [(u, v, 1.0, c) for u, v, c in self.undirected_edges(skip_ports)]
        return MeasuredGraph(np.ones(self.size), edges)


def _draw_simple_permutations(size, D, rng, max_draws):
    """Redraw permutations one at a time until the union is simple.

    A fixed point would be a self-loop; a 2-cycle or a collision with an
    earlier color would be a parallel edge.  Rejecting per permutation
    keeps the expected draw count small even for D = 3.
    """
    taken: set[tuple[int, int]] = set()
    perms = []
    draws = 0
    for _ in range(D):
        while True:
            if draws >= max_draws:
                raise WiringError(
                    f"could not draw a simple wiring within {max_draws} permutation draws"
                )
            draws += 1
            perm = rng.permutation(size)
            cand: set[tuple[int, int]] = set()
            ok = True
            for t in range(size):
                h = int(perm[t])
                if h == t:
                    ok = False
                    break
                key = (t, h) if t < h else (h, t)
                if key in cand or key in taken:
                    ok = False
                    break
                cand.add(key)
            if ok:
                taken |= cand
                perms.append(perm)
                break
    return perms, draws


def _union_connected(size: int, perms) -> bool:
    parent = list(range(size))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for perm in perms:
        for t in range(size):
            ra, rb = find(t), find(int(perm[t]))
            if ra != rb:
                parent[rb] = ra
    root = find(0)
    return all(find(i) == root for i in range(size))


def _adjacency_lambda2(size: int, perms) -> float:
    rows, cols = [], []
    for perm in perms:
        for t in range(size):
            h = int(perm[t])
            rows.extend((t, h))
            cols.extend((h, t))
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
    if size <= _DENSE_EIG_LIMIT:
        vals = np.linalg.eigvalsh(A.toarray())
        return float(vals[-2])
    v0 = np.random.default_rng(7).standard_normal(size)
    vals = spla.eigsh(A, k=2, which="LA", v0=v0, return_eigenvectors=False)
    return float(np.sort(vals)[0])


def sample_wiring(
    size: int,
    D: int,
    seed: int,
    gap_threshold: Optional[float] = None,
    resample_budget: int = 100,
) -> ClusterWiring:
    """Sample a certified 2D-regular colored wiring on ``size`` nodes.

    Resamples until the union graph is simple, connected, and has
    adjacency second eigenvalue at or below ``gap_threshold`` (default
    2*sqrt(2D-1) + 0.5).  Deterministic for a fixed seed.
    """
    if D < 2:
        raise ValueError(f"need D >= 2 (degree 2D >= 4), got D={D}")
    if size <= 4 * D:
        raise ValueError(f"need size > 4D = {4 * D}, got {size}")
    threshold = (
        2.0 * np.sqrt(2.0 * D - 1.0) + 0.5 if gap_threshold is None else float(gap_threshold)
    )
    rng = np.random.default_rng(seed)
    total_draws = 0
    best: Optional[tuple[float, list]] = None
    for attempt in range(resample_budget):
        perms, draws = _draw_simple_permutations(size, D, rng, max_draws=10_000)
        total_draws += draws
        if not _union_connected(size, perms):
            continue
        lam2 = _adjacency_lambda2(size, perms)
        if best is None or lam2 < best[0]:
            best = (lam2, perms)
        if lam2 <= threshold:
            cert = GapCertificate(
                lambda2_adjacency=lam2,
                threshold=threshold,
                cheeger_lower=(2.0 * D - lam2) / 2.0,
                resamples=attempt + 1,
                permutation_draws=total_draws,
                seed=seed,
            )
            return ClusterWiring(
                size=size,
                D=D,
                permutations=tuple(np.asarray(p, dtype=np.int64) for p in perms),
                gap_certificate=cert,
            )
    best_gap = best[0] if best else float("nan")
    raise WiringError(
        f"no wiring met lambda2 <= {threshold:.4f} in {resample_budget} resamples "
        f"(best candidate lambda2 = {best_gap:.4f})"
    )


def expose_ports(w: ClusterWiring, seed: int) -> ClusterWiring:
    """Choose one edge per color, pairwise vertex-disjoint, as the ports.

    Candidates are scanned in seed-shuffled order, greedily skipping any
    edge touching an already-used vertex.  The post-deletion graph must
    stay connected; this is verified by traversal.
    """
    if w.ports is not None:
        raise ValueError("ports already exposed")
    rng = np.random.default_rng(seed)
    used: set[int] = set()
    ports: Dict[int, Tuple[int, int]] = {}
    for color, perm in enumerate(w.permutations):
        order = rng.permutation(w.size)
        chosen = None
        for t in order:
            t = int(t)
            h = int(perm[t])
            if t not in used and h not in used:
                chosen = (t, h)
                break
        if chosen is None:
            raise WiringError(
                f"no vertex-disjoint port edge available for color {color} "
                f"(size {w.size}, D {w.D}); should not happen for size > 4D"
            )
        used.update(chosen)
        ports[color] = chosen
    out = replace(w, ports=ports, port_seed=seed)
    if not out.graph(skip_ports=True).is_connected():
        raise WiringError("port deletion disconnected the cluster")
    return out


def cheeger_exact(g: MeasuredGraph, size_limit: int = 20) -> float:
    """Exact edge-expansion min_{0<|S|<=n/2} |boundary(S)| / |S| (unit weights).

    Walks all subsets in Gray-code order with incremental boundary
    updates, so the cost is O(2^n * avg_degree); capped at ``size_limit``
    vertices.
    """
    n = g.vertex_count
    if n > size_limit:
        raise ValueError(f"cheeger_exact limited to {size_limit} vertices, got {n}")
    if n < 2:
        raise ValueError("need at least two vertices")
    adj = [[] for _ in range(n)]
    for u, v, _, _ in g.edges():
        adj[u].append(v)
        adj[v].append(u)
    deg = [len(a) for a in adj]

    in_s = [False] * n
    nbrs_in_s = [0] * n
    boundary = 0
    size_s = 0
    half = n // 2
    best = float("inf")
    for step in range(1, 1 << n):
        v = (step & -step).bit_length() - 1  # Gray code flip position
        if in_s[v]:
            in_s[v] = False
            size_s -= 1
            boundary -= deg[v] - 2 * nbrs_in_s[v]
            for u in adj[v]:
                nbrs_in_s[u] -= 1
        else:
            in_s[v] = True
            size_s += 1
            boundary += deg[v] - 2 * nbrs_in_s[v]
            for u in adj[v]:
                nbrs_in_s[u] += 1
        if 0 < size_s <= half:
            ratio = boundary / size_s
            if ratio < best:
                best = ratio
    return best


def cheeger_bounds(g: MeasuredGraph, seed: int = 0) -> tuple[float, float]:
    """Spectral sandwich (lam1/2, sqrt(lam1*(2*dmax - lam1))) for the
    unit-weight combinatorial Laplacian."""
    if not g.is_connected():
        raise DisconnectedGraphError(g.component_count())
    n = g.vertex_count
    u, v, _ = g.edge_arrays
    ones = np.ones(u.size)
    rows = np.concatenate([u, v, u, v])
    cols = np.concatenate([v, u, u, v])
    vals = np.concatenate([-ones, -ones, ones, ones])
    L = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    d_max = float(L.diagonal().max())
    if n <= _DENSE_EIG_LIMIT:
        lam1 = float(np.linalg.eigvalsh(L.toarray())[1])
    else:
        v0 = np.random.default_rng(seed).standard_normal(n)
        vals2 = spla.eigsh(
            L.tocsc(), k=2, sigma=-1e-2, which="LM", v0=v0, return_eigenvectors=False
        )
        lam1 = float(np.sort(vals2)[1])
    lam1 = max(lam1, 0.0)
    upper_sq = max(lam1 * (2.0 * d_max - lam1), 0.0)
    return lam1 / 2.0, float(np.sqrt(upper_sq))
