"""Prescribing a target spectrum through edge weights.

Positive weights on the complete graph K_N realizing any strictly
increasing nonzero spectrum always exist; this module searches for them
numerically.  Weights are optimized in log space (keeping them in the
open positive cone) with a damped Gauss-Newton / Levenberg-Marquardt
loop whose Jacobian comes from first-order eigenvalue perturbation:
for a measure-normalized eigenvector v of a simple eigenvalue,

    d lam / d w_e = (v(u) - v(v))^2   for  e = {u, v}.

A closed-form solver for the three-vertex path with measures
(2*pi, 4*pi, 2*pi) doubles as an exact oracle for the optimizer, and
`pad_targets` extends a short target list to the full N-1 slots by
appending values safely above the target window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .graph import EigenResult, MeasuredGraph, spectrum_dense

POSITIVITY_FLOOR = 1e-12
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


class PrescriptionError(ValueError):
    """Weight search failed; carries the best mismatch encountered."""

    def __init__(self, message: str, best_mismatch: float = math.inf):
        self.best_mismatch = best_mismatch
        super().__init__(message)


class BoundaryFailureError(PrescriptionError):
    """A weight converged onto the positivity floor (solver deficiency)."""


class InfeasibleTargetError(ValueError):
    """Target pair outside the feasible region of the path-graph solver."""


class DegenerateSpectrumError(ValueError):
    """Eigenvalue gap below threshold; perturbation derivatives unreliable."""


@dataclass(frozen=True)
class SpectralTarget:
    """Strictly increasing positive targets plus tolerance and padding policy.

    ``targets`` omit the forced zero eigenvalue.  ``epsilon`` is clamped
    strictly below 1.  ``N`` is the carrier complete-graph size and must
    be at least max(n+1, 4); the heavy-vertex assembler additionally
    requires N odd and >= 5, which it enforces itself.  ``padding``, when
    given, supplies the N-1-n extra eigenvalues explicitly (in absolute
    units, i.e. already multiplied by the block volume); otherwise
    `pad_targets` generates a default ramp.
    """

    targets: tuple
    N: int
    epsilon: float = 0.5
    padding: Optional[tuple] = None

    def __post_init__(self):
        targets = tuple(float(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        if len(targets) == 0:
            raise ValueError("need at least one target eigenvalue")
        if targets[0] <= 0 or any(b <= a for a, b in zip(targets, targets[1:])):
            raise ValueError("targets must be strictly increasing and positive")
        n = len(targets)
        if self.N < max(n + 1, 4):
            raise ValueError(f"N={self.N} too small; need N >= max(n+1, 4) = {max(n + 1, 4)}")
        object.__setattr__(self, "epsilon", min(float(self.epsilon), _BELOW_ONE))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.padding is not None:
            padding = tuple(float(p) for p in self.padding)
            object.__setattr__(self, "padding", padding)
            if len(padding) != self.N - 1 - n:
                raise ValueError(
                    f"padding must have N-1-n = {self.N - 1 - n} entries, got {len(padding)}"
                )
            if any(b <= a for a, b in zip(padding, padding[1:])):
                raise ValueError("padding must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.targets)


@dataclass
class WeightSolution:
    """Positive edge weights on K_N realizing a prescribed nonzero spectrum."""

    N: int
    vertex_measure: float
    weights: dict
    achieved_spectrum: np.ndarray
    mismatch: float
    restarts_used: int
    seed: int = 0

    def graph(self) -> MeasuredGraph:
        measures = np.full(self.N, self.vertex_measure)
        edges = [(u, v, w) for (u, v), w in self.weights.items()]
        return MeasuredGraph(measures, edges)

    def weight_array(self) -> np.ndarray:
        """Weights in canonical sorted-pair order."""
        return np.array([self.weights[k] for k in sorted(self.weights)])


def complete_graph_edges(N: int) -> list[tuple[int, int]]:
    return [(u, v) for u in range(N) for v in range(u + 1, N)]


def pad_targets(t: SpectralTarget, V_F: float) -> np.ndarray:
    """Full list mu_1..mu_{N-1}: targets scaled by V_F, then padding.

    Defaults to the arithmetic ramp (lam_n + 2 + j) * V_F for j = 1.., whose
    first value sits one step above (lam_n + 2) * V_F; every padding value
    must clear (lam_n + 1) * V_F strictly so the extra eigenvalues stay out
    of the target window.
    """
    if V_F <= 0:
        raise ValueError("V_F must be positive")
    lam = np.asarray(t.targets)
    mu_head = lam * V_F
    n_pad = t.N - 1 - t.n
    if n_pad == 0:
        return mu_head
    if t.padding is not None:
        tail = np.asarray(t.padding, dtype=float)
    else:
        tail = (lam[-1] + 2.0 + np.arange(1, n_pad + 1)) * V_F
    floor = (lam[-1] + 1.0) * V_F
    if not np.all(tail > floor):
        raise ValueError(f"padding values must exceed (lam_n + 1) * V_F = {floor}")
    mu = np.concatenate([mu_head, tail])
    if np.any(np.diff(mu) <= 0):
        raise ValueError("padded target list is not strictly increasing")
    return mu


def solve_p3_closed_form(lambda1: float, lambda2: float) -> tuple[float, float]:
    """Exact weights on the path v1-v2-v3 with measures (2pi, 4pi, 2pi).

    The trace and 2x2-minor conditions make (w12, w23) the roots of a
    quadratic; the discriminant factors as
    (8 pi^2 / 9) (2 lam1 - lam2)(lam1 - 2 lam2), non-negative exactly when
    lam2 >= 2 lam1.  Returns the root pair with w12 >= w23 > 0.
    """
    if not (0 < lambda1 < lambda2):
        raise ValueError("need 0 < lambda1 < lambda2")
    disc = (8.0 * math.pi**2 / 9.0) * (2 * lambda1 - lambda2) * (lambda1 - 2 * lambda2)
    if disc < 0:
        raise InfeasibleTargetError(
            f"targets ({lambda1}, {lambda2}) infeasible for the 3-path: "
            f"need lambda2 >= 2*lambda1"
        )
    s = 4.0 * math.pi * (lambda1 + lambda2) / 3.0
    root = math.sqrt(disc)
    w12 = (s + root) / 2.0
    w23 = (s - root) / 2.0
    return w12, w23


def p3_graph(w12: float, w23: float) -> MeasuredGraph:
    """The worked-example path graph carrying the closed-form weights."""
    return MeasuredGraph(
        [2 * math.pi, 4 * math.pi, 2 * math.pi],
        [(0, 1, w12), (1, 2, w23)],
    )


def spectral_jacobian(
    g: MeasuredGraph,
    eigen: EigenResult,
    gap_threshold: float = 1e-8,
) -> np.ndarray:
    """Matrix of d lam_k / d w_e over the provided eigenpairs.

    Entry (k, e) is (v_k(u) - v_k(v))^2 for edge e = {u, v} in the graph's
    canonical edge order, assuming measure-normalized eigenvectors.
    Raises DegenerateSpectrumError when any consecutive gap falls below
    gap_threshold times the spectral scale.
    """
    if eigen.eigenvectors is None:
        raise ValueError("eigen result must carry eigenvectors")
    vals = eigen.eigenvalues
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    gaps = np.diff(vals)
    if vals.size > 1 and np.min(gaps) < gap_threshold * scale:
        k = int(np.argmin(gaps))
        raise DegenerateSpectrumError(
            f"eigenvalues {k} and {k + 1} nearly degenerate "
            f"(gap {gaps[k]:.3e} < {gap_threshold:.1e} * scale {scale:.3e})"
        )
    u, v, _ = g.edge_arrays
    vec = eigen.eigenvectors
    return (vec[u, :] - vec[v, :]).T ** 2


def _spectrum_of_weights(
    u: np.ndarray, v: np.ndarray, w: np.ndarray, measures: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of the pencil for an edge-weight vector (dense, small N)."""
    n = measures.size
    K = np.zeros((n, n))
    np.add.at(K, (u, v), -w)
    np.add.at(K, (v, u), -w)
    np.add.at(K, (u, u), w)
    np.add.at(K, (v, v), w)
    s = 1.0 / np.sqrt(measures)
    A = (K * s[np.newaxis, :]) * s[:, np.newaxis]
    vals, y = np.linalg.eigh(0.5 * (A + A.T))
    return vals, y * s[:, np.newaxis]


def _cap_max_weight(theta, eu, ev, measures, mu, tol, cap, rounds: int = 400) -> np.ndarray:
    """Walk along the solution manifold until the largest weight is <= cap.

    The spectrum pins only n_vertices - 1 combinations of the edge
    weights, so converged solutions form a manifold.  Downstream, corridor
    lengths scale like m / w_e, so the largest weight controls the worst
    quantization error; a caller that knows its target scale can ask for
    solutions whose corridors stay long.  Each round takes a damped
    null-space step against the over-cap excess sum_e max(0, th_e - log cap)^2,
    then re-converges with min-norm Gauss-Newton; a step counts only if the
    mismatch stays within tol, the excess strictly drops, and no weight
    collapses.  Stops at the cap, or at a stall (best effort: the cap is a
    preference, not a contract).
    """
    scale = float(np.max(mu))
    cap_log = math.log(cap)

    def jacobian_at(th):
        w = np.exp(th)
        vals, vecs = _spectrum_of_weights(eu, ev, w, measures)
        jac = ((vecs[eu, 1:] - vecs[ev, 1:]).T ** 2) * w[np.newaxis, :]
        return vals, jac

    def reconverge(th):
        """Min-norm Gauss-Newton back onto the solution manifold."""
        for _ in range(12):
            vals, jac = jacobian_at(th)
            resid = vals[1:] - mu
            if float(np.max(np.abs(resid))) <= tol:
                return th
            if np.min(np.diff(vals)) < 1e-6 * scale:
                return None
            th = th - np.linalg.pinv(jac, rcond=1e-10) @ resid
        return None

    best = theta.copy()
    theta_floor = max(float(np.min(theta)) - 1.5, math.log(POSITIVITY_FLOOR) + 7.0)

    def excess(th):
        return float(np.sum(np.maximum(th - cap_log, 0.0) ** 2))

    beta = 0.25
    for _ in range(rounds):
        if excess(best) <= 0.0:
            break
        vals, jac = jacobian_at(best)
        if np.min(np.diff(vals)) < 1e-4 * scale:
            break  # near-degenerate targets: perturbation rows unreliable
        pull = -np.maximum(best - cap_log, 0.0)
        null_move = pull - np.linalg.pinv(jac, rcond=1e-10) @ (jac @ pull)
        norm = float(np.linalg.norm(null_move))
        if norm < 1e-9:
            break
        stepped = False
        b = beta
        while b > 1e-4:
            cand = reconverge(best + (b / norm) * null_move)
            if (
                cand is not None
                and excess(cand) < excess(best) - 1e-16
                and float(np.min(cand)) >= theta_floor
            ):
                best = cand
                beta = min(2.0 * b, 0.25)
                stepped = True
                break
            b *= 0.5
        if not stepped:
            break
    return best


def prescribe_on_topology(
    edges: Sequence[tuple[int, int]],
    measures: Sequence[float],
    mu: Sequence[float],
    tol: float = 1e-8,
    seed: int = 0,
    restarts: int = 32,
    iterations: int = 500,
    max_weight: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Damped Gauss-Newton search for weights on a fixed edge set.

    Minimizes the spectral mismatch to ``mu`` (the desired nonzero
    eigenvalues, ascending) over log-weights.  Returns
    (weights, achieved_spectrum, mismatch, starts_used) with weights in
    the order of ``edges``.  Raises PrescriptionError when no start
    reaches ``tol``, and BoundaryFailureError when a converged weight sits
    on the positivity floor.

    ``max_weight``, when given, asks for a solution whose largest weight
    stays at or below it: the search explores several starts, keeps the
    branch with the smallest maximum weight, and walks it along the
    solution manifold toward the cap (best effort).
    """
    edges = [(int(a), int(b)) if a < b else (int(b), int(a)) for a, b in edges]
    if len(set(edges)) != len(edges):
        raise ValueError("duplicate edges in topology")
    measures = np.asarray(measures, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if mu.size != measures.size - 1:
        raise ValueError("mu must list all nonzero eigenvalues (length n_vertices - 1)")
    if np.any(mu <= 0) or np.any(np.diff(mu) <= 0):
        raise ValueError("mu must be strictly increasing and positive")
    if len(edges) < mu.size:
        raise ValueError("fewer edges than prescribed eigenvalues")

    eu = np.array([e[0] for e in edges])
    ev = np.array([e[1] for e in edges])
    n_edges = len(edges)
    scale = float(np.max(mu))
    rng = np.random.default_rng(seed)

    best_mismatch = math.inf
    pinned_only = False
    # the solution set is a manifold with several branches; explore a few
    # starts and keep the most balanced branch (largest corridor lengths
    # downstream, weights far from the positivity floor)
    explore = min(8, restarts)
    found: list[tuple[float, int, np.ndarray]] = []
    starts_attempted = 0
    for start in range(restarts):
        starts_attempted = start + 1
        w_flat = float(np.mean(mu)) * np.mean(measures) / measures.size
        jitter = 0.2 * (1.0 + 0.25 * start)
        theta0 = np.full(n_edges, np.log(w_flat))
        theta = theta0 + jitter * rng.standard_normal(n_edges)
        damp = 1e-3
        for _ in range(iterations):
            w = np.exp(theta)
            vals, vecs = _spectrum_of_weights(eu, ev, w, measures)
            resid = vals[1:] - mu
            mismatch = float(np.max(np.abs(resid)))
            best_mismatch = min(best_mismatch, mismatch)
            if mismatch <= tol:
                if np.min(w) <= POSITIVITY_FLOOR:
                    # converged onto the boundary of the positive cone;
                    # a strictly positive solution exists, so retry
                    pinned_only = True
                    break
                found.append((float(np.max(theta)), start, theta.copy()))
                break
            gaps = np.diff(vals)
            if np.min(gaps) < 1e-12 * scale:
                theta = theta + np.log1p(1e-3 * rng.standard_normal(n_edges))
                continue
            jac_w = (vecs[eu, 1:] - vecs[ev, 1:]).T ** 2
            jac = jac_w * w[np.newaxis, :]
            # anneal a pull toward the equal-weight anchor: it selects an
            # interior point on the (underdetermined) solution manifold and
            # vanishes quadratically as the mismatch does
            alpha = (0.1 * mismatch) ** 2
            g_vec = jac.T @ resid + alpha * (theta - theta0)
            jtj = jac.T @ jac + alpha * np.eye(n_edges)
            diag = np.maximum(np.diag(jtj), 1e-12 * scale**2)
            accepted = False
            for _ in range(12):
                try:
                    delta = np.linalg.solve(jtj + damp * np.diag(diag), -g_vec)
                except np.linalg.LinAlgError:
                    damp *= 10.0
                    continue
                theta_try = np.clip(theta + delta, -60.0, 60.0)
                vals_try, _ = _spectrum_of_weights(eu, ev, np.exp(theta_try), measures)
                obj_try = np.sum((vals_try[1:] - mu) ** 2) + alpha * np.sum(
                    (theta_try - theta0) ** 2
                )
                obj_cur = np.sum(resid**2) + alpha * np.sum((theta - theta0) ** 2)
                if obj_try < obj_cur:
                    theta = theta_try
                    damp = max(damp / 3.0, 1e-12)
                    accepted = True
                    break
                damp *= 4.0
            if not accepted:
                break
        if found and starts_attempted >= explore:
            break
    if found:
        found.sort(key=lambda item: (item[0], item[1]))
        theta = found[0][2]
        if max_weight is not None and float(np.max(np.exp(theta))) > max_weight:
            theta = _cap_max_weight(theta, eu, ev, measures, mu, tol, max_weight)
        w = np.exp(theta)
        vals, _ = _spectrum_of_weights(eu, ev, w, measures)
        mismatch = float(np.max(np.abs(vals[1:] - mu)))
        return w, vals[1:], mismatch, starts_attempted
    if pinned_only:
        raise BoundaryFailureError(
            f"every converged start had a weight pinned at the positivity "
            f"floor ({POSITIVITY_FLOOR}); solver deficiency, not infeasibility",
            best_mismatch=best_mismatch,
        )
    raise PrescriptionError(
        f"no start reached mismatch {tol} within {restarts} restarts "
        f"(best {best_mismatch:.3e})",
        best_mismatch=best_mismatch,
    )


def prescribe_complete_graph(
    N: int,
    vertex_measure: float,
    mu: Sequence[float],
    tol: float = 1e-8,
    seed: int = 0,
    restarts: int = 32,
    iterations: int = 500,
    max_weight: Optional[float] = None,
) -> WeightSolution:
    """Find positive weights on K_N whose nonzero spectrum matches ``mu``.

    The constant-measure problem reduces to unit measures by eigenvalue
    scaling (multiplying all measures by c divides the spectrum by c), so
    the search always runs at unit measure on the scaled targets.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if vertex_measure <= 0:
        raise ValueError("vertex_measure must be positive")
    mu = np.asarray(mu, dtype=float)
    edges = complete_graph_edges(N)
    weights, achieved_unit, mismatch_unit, starts = prescribe_on_topology(
        edges,
        np.ones(N),
        mu * vertex_measure,
        tol=tol * vertex_measure,
        seed=seed,
        restarts=restarts,
        iterations=iterations,
        max_weight=max_weight,
    )
    solution = WeightSolution(
        N=N,
        vertex_measure=float(vertex_measure),
        weights={e: float(w) for e, w in zip(edges, weights)},
        achieved_spectrum=achieved_unit / vertex_measure,
        mismatch=mismatch_unit / vertex_measure,
        restarts_used=starts,
        seed=seed,
    )
    check = spectrum_dense(solution.graph()).eigenvalues[1:]
    solution.achieved_spectrum = check
    solution.mismatch = float(np.max(np.abs(check - mu)))
    return solution
