"""Comparison helpers shared by the tests."""

import json
from pathlib import Path

import numpy as np

from invkit.pwse import PiecewiseSemiEllipsoid

DATA = Path(__file__).parent / "data"


def load_set(name) -> PiecewiseSemiEllipsoid:
    return PiecewiseSemiEllipsoid.from_dict(json.loads((DATA / name).read_text()))


def cone_key(P):
    """Unit facet normals sorted lexicographically: identifies a cone up to row scaling."""
    A = P.facet_rows().A
    A = A / np.linalg.norm(A, axis=1)[:, None]
    return A[np.lexsort(np.round(A, 9).T[::-1])]


def match_pieces(S, T, tol=1e-9):
    """Pairs (i, k) of pieces with the same cone and matrices within ``tol``, or None."""
    if S.m != T.m:
        return None
    used, pairs = set(), []
    for i, P in enumerate(S.partition.pieces):
        ki = cone_key(P)
        hit = None
        for k, R in enumerate(T.partition.pieces):
            kk = cone_key(R)
            if k not in used and kk.shape == ki.shape and np.max(np.abs(kk - ki)) <= tol:
                hit = k
                break
        if hit is None or np.max(np.abs(S.Q[i] - T.Q[hit])) > tol:
            return None
        used.add(hit)
        pairs.append((i, hit))
    return pairs


def unit_directions(count, n=2, seed=0):
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((count, n))
    return D / np.linalg.norm(D, axis=1)[:, None]


def angles(count):
    t = 2 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(t), np.sin(t)])


def support_2d(S, x, tol=1e-12) -> float:
    """Direct ``sup {x'y : gauge(S, y) <= 1}`` for a planar set, piece by piece.

    On each cone the maximum of a linear function over ``{y' Q y <= 1}`` sits
    either on a bounding ray or at the stationary point of the ellipse arc.
    """
    x = np.asarray(x, dtype=float)
    best = 0.0
    for i, (P, Q) in enumerate(zip(S.partition.pieces, S.Q)):
        for r in S.partition.generators(i):
            q = r @ Q @ r
            if q <= tol:
                if x @ r > tol:
                    return np.inf
                continue
            best = max(best, (x @ r) / np.sqrt(q))
        w, V = np.linalg.eigh(Q)
        if w[0] > tol:
            y = np.linalg.solve(Q, x)
            y /= np.sqrt(x @ y)
            if P.contains(y, tol=1e-12):
                best = max(best, x @ y)
    return best
