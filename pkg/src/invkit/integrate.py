"""Exact integrals of piecewise quadratic forms over polytopes."""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import kernels
from .polyhedra import HPolyhedron, dim


def triangulate(V) -> np.ndarray:
    """Simplices (count, n+1, n) covering the convex hull of the points ``V``.

    Fan from the centroid over the triangulated hull facets. Returns an
    empty array when the hull is not full-dimensional.
    """
    V = np.asarray(V, dtype=float)
    n = V.shape[1]
    if V.shape[0] <= n:
        return np.zeros((0, n + 1, n))
    try:
        hull = ConvexHull(V)
    except QhullError:
        return np.zeros((0, n + 1, n))
    c = V[hull.vertices].mean(axis=0)
    F = V[hull.simplices]  # (facets, n, n)
    apex = np.broadcast_to(c, (F.shape[0], 1, n))
    return np.concatenate([apex, F], axis=1)


def second_moment(P: HPolyhedron) -> np.ndarray:
    """``int_P x x' dx`` for a polytope ``P`` (zero when not full-dimensional)."""
    n = P.n
    if P.is_empty() or dim(P) < n:
        return np.zeros((n, n))
    return kernels.simplex_second_moments(triangulate(P.vertices()))


def integrate_quadratic(polytope: HPolyhedron, partition) -> list:
    """Matrices ``C_i`` with ``int_polytope x' Q(x) x dx = sum_i <C_i, Q_i>``.

    ``Q(x)`` is ``Q_i`` on piece ``i``; ``C_i`` is the second moment of the
    polytope restricted to that piece.
    """
    if not polytope.is_bounded():
        raise ValueError("the integration domain must be bounded")
    out = []
    for P in partition.pieces:
        out.append(second_moment(polytope.intersect(P)))
    return out


def integral(Q, polytope: HPolyhedron, partition) -> float:
    """Value of the integral for numeric matrices ``Q``."""
    return float(sum(np.sum(C * np.asarray(q)) for C, q in zip(integrate_quadratic(polytope, partition), Q)))
