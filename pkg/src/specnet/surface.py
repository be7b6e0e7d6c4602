"""Discrete collar-pinch model for the surface pipeline.

Pinching every dual-graph edge to core length pi * delta * w_e gives a
bottleneck of conductance delta * w_e between vertex pieces of fixed
area, so the leading-order spectral object is simply the dual measured
graph with weights scaled by delta.  Rescaling the metric by delta
divides eigenvalues by delta and sends the curvature to -1/delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import EigenResult, MeasuredGraph
from .topology import SurfaceModel


def pinch_model(s: SurfaceModel, delta: float) -> MeasuredGraph:
    """Conductance network of the surface pinched at scale delta.

    Vertex measures are the piece areas; each edge weight is the collar
    conductance ell_e / pi = delta * w_e.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    g = s.dual_graph
    edges = [(u, v, delta * w) for u, v, w, _ in g.edges()]
    return MeasuredGraph(g.measures, edges)


@dataclass(frozen=True)
class RescaledSpectrum:
    """Spectrum after the metric rescaling that undoes the pinch."""

    eigenvalues: np.ndarray
    delta: float
    kappa: float


def rescaled_spectrum(pinched: EigenResult, delta: float) -> RescaledSpectrum:
    """Divide every eigenvalue by delta; report curvature kappa = -1/delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return RescaledSpectrum(
        eigenvalues=pinched.eigenvalues / delta,
        delta=float(delta),
        kappa=-1.0 / delta,
    )
