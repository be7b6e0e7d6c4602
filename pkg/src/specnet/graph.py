"""Measured weighted graphs and their generalized Laplacian spectra.

A measured graph carries a strictly positive measure per vertex and a
strictly positive weight per undirected edge.  The associated operator
acts by

    (L f)(i) = (1 / nu_i) * sum_{j ~ i} w_ij (f(i) - f(j)),

which is self-adjoint in the measure inner product <f, g> = sum_i nu_i f_i g_i.
Spectra are computed from the equivalent symmetric pencil (K, M) where K is
the edge quadratic-form (stiffness) matrix and M the diagonal measure matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_THRESHOLD_DEFAULT = 2000


class GraphError(ValueError):
    """Invalid graph input or unsupported request."""


class DisconnectedGraphError(GraphError):
    """Raised by spectral routines that require a connected graph."""

    def __init__(self, component_count: int):
        self.component_count = component_count
        super().__init__(f"graph is disconnected ({component_count} components)")


class EigenConvergenceError(GraphError):
    """Iterative eigensolver failed to converge within its budget."""

    def __init__(self, message: str, achieved_residuals=None):
        self.achieved_residuals = achieved_residuals
        super().__init__(message)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


class MeasuredGraph:
    """Immutable undirected graph with vertex measures and edge weights.

    Parameters
    ----------
    measures : sequence of float
        One strictly positive measure per vertex.
    edges : iterable of tuples
        Each entry is ``(u, v, weight)`` or ``(u, v, weight, color)`` with
        ``u != v`` and ``weight > 0``.  Parallel entries for the same
        unordered pair are merged by summing weights; self-loops are
        dropped (they contribute nothing to the quadratic form).  Colors
        are optional integer tags; merged parallel edges keep a common
        color, else the tag is cleared.
    """

    def __init__(self, measures: Sequence[float], edges: Iterable[tuple]):
        measures = np.asarray(measures, dtype=float)
        if measures.ndim != 1 or measures.size == 0:
            raise GraphError("measures must be a non-empty 1-d sequence")
        if not np.all(measures > 0):
            raise GraphError("all vertex measures must be strictly positive")
        n = measures.size

        weight_of: dict[tuple[int, int], float] = {}
        color_of: dict[tuple[int, int], Optional[int]] = {}
        for entry in edges:
            if len(entry) == 3:
                u, v, w = entry
                color = None
            elif len(entry) == 4:
                u, v, w, color = entry
            else:
                raise GraphError(f"edge entry must have 3 or 4 fields, got {entry!r}")
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) out of range for {n} vertices")
            if u == v:
                continue
            w = float(w)
            if not w > 0:
                raise GraphError(f"edge ({u},{v}) has non-positive weight {w}")
            key = (u, v) if u < v else (v, u)
            if key in weight_of:
                weight_of[key] += w
                if color_of[key] != color:
                    color_of[key] = None
            else:
                weight_of[key] = w
                color_of[key] = None if color is None else int(color)

        keys = sorted(weight_of)
        self._n = n
        self._measures = measures
        self._measures.setflags(write=False)
        self._eu = np.array([k[0] for k in keys], dtype=np.int64)
        self._ev = np.array([k[1] for k in keys], dtype=np.int64)
        self._ew = np.array([weight_of[k] for k in keys], dtype=float)
        self._ecolor = tuple(color_of[k] for k in keys)
        for arr in (self._eu, self._ev, self._ew):
            arr.setflags(write=False)
        self._component_count: Optional[int] = None

    # -- basic accessors ---------------------------------------------------

    @property
    def vertex_count(self) -> int:
        return self._n

    @property
    def measures(self) -> np.ndarray:
        return self._measures

    @property
    def edge_count(self) -> int:
        return self._ew.size

    @property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u, v, weight) arrays in canonical sorted-pair order."""
        return self._eu, self._ev, self._ew

    def edges(self):
        """Yield (u, v, weight, color) in canonical order."""
        for i in range(self._ew.size):
            yield int(self._eu[i]), int(self._ev[i]), float(self._ew[i]), self._ecolor[i]

    def weight(self, u: int, v: int) -> float:
        """Weight of the unordered edge {u, v}; 0.0 if absent."""
        key = (u, v) if u < v else (v, u)
        idx = np.searchsorted(self._eu, key[0])
        while idx < self._eu.size and self._eu[idx] == key[0]:
            if self._ev[idx] == key[1]:
                return float(self._ew[idx])
            idx += 1
        return 0.0

    @property
    def total_measure(self) -> float:
        return float(self._measures.sum())

    def component_count(self) -> int:
        if self._component_count is None:
            uf = _UnionFind(self._n)
            for u, v in zip(self._eu, self._ev):
                uf.union(int(u), int(v))
            self._component_count = len({uf.find(i) for i in range(self._n)})
        return self._component_count

    def is_connected(self) -> bool:
        return self.component_count() == 1

    # -- matrices ----------------------------------------------------------

    def stiffness_matrix(self) -> sp.csr_matrix:
        """Sparse K with quadratic form f^T K f = sum_e w_e (f_u - f_v)^2."""
        n = self._n
        u, v, w = self._eu, self._ev, self._ew
        rows = np.concatenate([u, v, u, v])
        cols = np.concatenate([v, u, u, v])
        vals = np.concatenate([-w, -w, w, w])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def measure_matrix(self) -> sp.dia_matrix:
        return sp.diags(self._measures)

    def __repr__(self) -> str:
        return f"MeasuredGraph(n={self._n}, edges={self.edge_count})"


@dataclass
class EigenResult:
    """Eigenpairs of the generalized problem K v = lam M v.

    ``eigenvalues`` ascend; ``eigenvectors`` (columns), when present, are
    orthonormal in the measure inner product.  ``residuals`` hold the
    relative residual per pair, ``method`` is ``"dense"`` or ``"iterative"``.
    """

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    residuals: np.ndarray
    method: str


def laplacian_apply(g: MeasuredGraph, f: Sequence[float]) -> np.ndarray:
    """Apply the measured Laplacian: (L f)(i) = (1/nu_i) sum_j w_ij (f_i - f_j)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (g.vertex_count,):
        raise GraphError(
            f"vector length {f.shape} does not match vertex count {g.vertex_count}"
        )
    u, v, w = g.edge_arrays
    out = np.zeros(g.vertex_count)
    diff = f[u] - f[v]
    np.add.at(out, u, w * diff)
    np.add.at(out, v, -w * diff)
    return out / g.measures


def dirichlet_energy(g: MeasuredGraph, f: Sequence[float]) -> float:
    """Edge energy sum_e w_e (f_u - f_v)^2 = <f, L f> in the measure product."""
    f = np.asarray(f, dtype=float)
    if f.shape != (g.vertex_count,):
        raise GraphError(
            f"vector length {f.shape} does not match vertex count {g.vertex_count}"
        )
    u, v, w = g.edge_arrays
    return float(np.sum(w * (f[u] - f[v]) ** 2))


def measure_inner(g: MeasuredGraph, f, h) -> float:
    """Measure inner product sum_i nu_i f_i h_i."""
    return float(np.sum(g.measures * np.asarray(f) * np.asarray(h)))


def _relative_residuals(g: MeasuredGraph, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    K = g.stiffness_matrix()
    M = g.measures
    norm_K = spla.norm(K, np.inf) if K.nnz else 1.0
    res = np.empty(vals.size)
    for i, lam in enumerate(vals):
        v = vecs[:, i]
        r = K @ v - lam * (M * v)
        denom = norm_K * np.linalg.norm(v) + abs(lam) * np.linalg.norm(M * v)
        res[i] = np.linalg.norm(r) / denom if denom > 0 else np.linalg.norm(r)
    return res


def _measure_orthonormalize(g: MeasuredGraph, vecs: np.ndarray) -> np.ndarray:
    """Gram-Schmidt in the measure inner product (stabilized, two passes)."""
    out = vecs.copy()
    nu = g.measures
    for _ in range(2):
        for j in range(out.shape[1]):
            for i in range(j):
                out[:, j] -= np.sum(nu * out[:, i] * out[:, j]) * out[:, i]
            nrm = np.sqrt(np.sum(nu * out[:, j] ** 2))
            if nrm == 0:
                raise GraphError("rank-deficient eigenvector block")
            out[:, j] /= nrm
    return out


def spectrum_dense(
    g: MeasuredGraph,
    with_vectors: bool = True,
    dense_threshold: int = DENSE_THRESHOLD_DEFAULT,
) -> EigenResult:
    """Full spectrum of the generalized problem via a dense symmetric solve.

    The pencil (K, M) is symmetrized by conjugating with M^{-1/2}, so a
    standard symmetric eigensolver applies even though L itself is not
    symmetric for non-constant measures.
    """
    if g.vertex_count > dense_threshold:
        raise GraphError(
            f"vertex count {g.vertex_count} exceeds dense threshold {dense_threshold}"
        )
    if not g.is_connected():
        raise DisconnectedGraphError(g.component_count())

    K = g.stiffness_matrix().toarray()
    s = 1.0 / np.sqrt(g.measures)
    A = (K * s[np.newaxis, :]) * s[:, np.newaxis]
    A = 0.5 * (A + A.T)
    vals, y = scipy.linalg.eigh(A)
    vecs = y * s[:, np.newaxis]
    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    res = _relative_residuals(g, vals, vecs)
    return EigenResult(
        eigenvalues=vals,
        eigenvectors=vecs if with_vectors else None,
        residuals=res,
        method="dense",
    )


def spectrum_smallest_k(
    g: MeasuredGraph,
    k: int,
    tol: float = 1e-9,
    seed: int = 0,
    with_vectors: bool = True,
    maxiter: Optional[int] = None,
) -> EigenResult:
    """Smallest k eigenpairs via shift-invert Lanczos on the pencil (K, M).

    Deterministic for a fixed seed (the seed fixes the Lanczos start
    vector).  The shift sits slightly below zero so the factored operator
    K - sigma*M stays positive definite while resolving the small cluster
    of low eigenvalues that the heavy-vertex networks produce.
    """
    n = g.vertex_count
    if not g.is_connected():
        raise DisconnectedGraphError(g.component_count())
    if not 0 < k < n:
        raise GraphError(f"need 0 < k < vertex_count, got k={k}, n={n}")

    K = g.stiffness_matrix().tocsc()
    M = sp.diags(g.measures).tocsc()
    # Gershgorin upper bound for the spectral scale of the pencil.
    degrees = np.zeros(n)
    u, v, w = g.edge_arrays
    np.add.at(degrees, u, w)
    np.add.at(degrees, v, w)
    lam_scale = 2.0 * float(np.max(degrees / g.measures))
    sigma = -1e-6 * lam_scale

    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    ncv = min(n, max(4 * k + 1, 40))
    try:
        vals, vecs = spla.eigsh(
            K,
            k=k,
            M=M,
            sigma=sigma,
            which="LM",
            v0=v0,
            ncv=ncv,
            maxiter=maxiter,
            tol=max(tol * 1e-2, 0.0),
        )
    except spla.ArpackNoConvergence as exc:
        achieved = None
        if exc.eigenvalues is not None and exc.eigenvectors is not None and len(exc.eigenvalues):
            achieved = _relative_residuals(g, exc.eigenvalues, exc.eigenvectors)
        raise EigenConvergenceError(
            f"ARPACK did not converge for k={k} (n={n}): {exc}", achieved
        ) from exc

    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    vecs = _measure_orthonormalize(g, vecs)
    res = _relative_residuals(g, vals, vecs)
    if np.any(res > max(tol, 1e-8)):
        raise EigenConvergenceError(
            f"iterative eigenpairs exceed residual tolerance {tol}", res
        )
    return EigenResult(
        eigenvalues=vals,
        eigenvectors=vecs if with_vectors else None,
        residuals=res,
        method="iterative",
    )
