"""Piecewise semi-ellipsoids: gauge, support function and closed-form polar.

A piecewise semi-ellipsoid is described by a conic partition ``(P_i)`` and
PSD matrices ``Q_i``; its gauge is ``sqrt(x' Q_i x)`` on ``P_i``. Extended
real values are plain floats, with ``math.inf`` for "+infinity" (so
``inf <= inf`` holds, as required when comparing gauges).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoPieceContains
from .linalg import is_psd, null_basis, numerical_rank, pseudoinverse, range_basis, sym
from .partition import ConicPartition, build_partition, facet_cones, single_piece
from .polyhedra import HPolyhedron, VPolyhedron, dim, to_hrep

ExtendedReal = float

# polar directions within CONE_TOL are merged, which moves a quadratic form
# by up to 2 |Q| CONE_TOL; the relative checks leave room for that
CONT_TOL = 1e-6
CONV_TOL = 1e-6
FACE_AGREE_TOL = 1e-7
RANK_TOL = 1e-9
CONE_TOL = 1e-7  # directions closer than this (radians) are merged in the polar

#: when True, gauge evaluation checks that every piece containing x agrees
DEBUG = False


@dataclass
class Violation:
    kind: str  # "psd", "continuity" or "convexity"
    pair: tuple
    residual: float

    def __str__(self):
        return f"{self.kind} violated at {self.pair}: residual {self.residual:.3e}"


class PiecewiseSemiEllipsoid:
    """Convex set whose gauge is ``sqrt(x' Q_i x)`` on each cone ``P_i``."""

    def __init__(self, partition: ConicPartition, Q):
        Q = [sym(q) for q in Q]
        if len(Q) != partition.m:
            raise ValueError(f"{partition.m} pieces but {len(Q)} matrices")
        for q in Q:
            if q.shape != (partition.n, partition.n):
                raise ValueError("matrix size does not match the partition dimension")
        self.partition = partition
        self.Q = Q
        self._polar = None
        self._stackQ = np.stack(Q) if Q else np.zeros((0, partition.n, partition.n))

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def m(self) -> int:
        return self.partition.m

    def __repr__(self):
        return f"PiecewiseSemiEllipsoid(n={self.n}, m={self.m})"

    # -- evaluation -----------------------------------------------------------

    def gauge_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = self.partition.locate_many(X)
        out = np.full(X.shape[0], math.inf)
        hit = idx >= 0
        if not np.all(hit) and self.partition.covering:
            bad = X[np.argmin(hit)]
            raise NoPieceContains(f"no piece contains {bad}")
        if np.any(hit):
            Xh = X[hit]
            vals = np.einsum("ki,kij,kj->k", Xh, self._stackQ[idx[hit]], Xh)
            out[hit] = np.sqrt(np.maximum(vals, 0.0))
        if DEBUG:
            self._check_agreement(X, out)
        return out

    def gauge(self, x) -> ExtendedReal:
        return float(self.gauge_many(np.asarray(x, dtype=float)[None, :])[0])

    def _check_agreement(self, X, values):
        for x, v in zip(X, values):
            for i in self.partition.pieces_containing(x):
                w = math.sqrt(max(float(x @ self.Q[i] @ x), 0.0))
                assert abs(w - v) <= 1e-7 * max(1.0, v), (x, i, w, v)

    def support_many(self, Y) -> np.ndarray:
        return self.polar().gauge_many(Y)

    def support(self, y) -> ExtendedReal:
        """Support function, evaluated as the gauge of the polar set."""
        return self.polar().gauge(y)

    def contains(self, x, tol: float = 1e-9) -> bool:
        return self.gauge(x) <= 1.0 + tol

    def boundary_points(self, directions) -> np.ndarray:
        """Points ``d / gauge(d)`` on the boundary (rows; NaN where the gauge is 0 or inf)."""
        D = np.atleast_2d(np.asarray(directions, dtype=float))
        g = self.gauge_many(D)
        with np.errstate(divide="ignore", invalid="ignore"):
            P = D / g[:, None]
        P[~np.isfinite(g) | (g <= 0)] = np.nan
        return P

    # -- validity -------------------------------------------------------------

    def validate(self, cont_tol: float = CONT_TOL, conv_tol: float = CONV_TOL, psd_tol: float = 1e-9) -> list:
        """Violations of PSD-ness, continuity and convexity (empty when valid).

        Tolerances are relative to ``max(1, largest entry)`` of the matrices
        involved, so that a rescaled set gives the same verdict.
        """
        out = []
        for i, q in enumerate(self.Q):
            if not is_psd(q, psd_tol):
                out.append(Violation("psd", (i,), float(np.linalg.eigvalsh(q)[0])))
        for (i, j) in self.partition.neighbors:
            G = self.partition.pair_face(i, j)
            W = range_basis(G)
            D = self.Q[i] - self.Q[j]
            scale = max(1.0, float(np.abs(self.Q[i]).max()), float(np.abs(self.Q[j]).max()))
            r = float(np.max(np.abs(W @ D @ W.T))) if W.size else 0.0
            if r > cont_tol * scale:
                out.append(Violation("continuity", (i, j), r))
            nij = self.partition.normals[(i, j)]
            gap = (G @ D @ nij) if G.shape[0] else np.zeros(0)
            worst = float(np.min(gap)) if gap.size else 0.0
            if worst < -conv_tol * scale:
                out.append(Violation("convexity", (i, j), -worst))
        return out

    def is_valid(self, **kw) -> bool:
        return not self.validate(**kw)

    def is_bounded(self) -> bool:
        """True iff the gauge vanishes only at the origin."""
        for P, q in zip(self.partition.pieces, self.Q):
            K = null_basis(q, RANK_TOL)
            if K.shape[0] == 0:
                continue
            C = null_basis(K)  # rows spanning the orthogonal complement of ker q
            eq = np.vstack([P.A, C, -C]) if C.size else P.A
            if dim(HPolyhedron(eq, n=self.n)) >= 1:
                return False
        return True

    # -- polar ----------------------------------------------------------------

    def polar(self) -> "PiecewiseSemiEllipsoid":
        """Closed-form polar set (cached).

        Pieces are the cones ``Q_i P_i`` with matrices ``pinv(Q_i)`` and, for
        each face ``F`` shared by the pieces ``I``, the cone generated by
        ``Q_i F`` (``i`` in ``I``) with matrix ``E pinv(E Q_i E) E``, ``E``
        the projector onto ``span F``. Cones that are not full-dimensional
        are dropped.
        """
        if self._polar is None:
            if not self.partition.covering:
                raise ValueError("the polar of a set with empty interior is not supported")
            self._polar = _polar(self)
        return self._polar

    # -- constructors and serialization --------------------------------------

    @classmethod
    def from_ellipsoid(cls, Q) -> "PiecewiseSemiEllipsoid":
        Q = sym(Q)
        return cls(single_piece(Q.shape[0]), [Q])

    @classmethod
    def from_polytope(cls, P: HPolyhedron) -> "PiecewiseSemiEllipsoid":
        """Polytope with the origin in its interior, one rank-1 piece per facet."""
        P = P.facet_rows()
        part = facet_cones(P)
        Q = [np.outer(a, a) / c ** 2 for a, c in zip(P.A, P.b)]
        return cls(part, Q)

    def to_dict(self) -> dict:
        return {
            "schema": "invkit/1",
            "kind": "pwse",
            "n": self.n,
            "partition": self.partition.to_dict(),
            "Q": [q.tolist() for q in self.Q],
        }

    @classmethod
    def from_dict(cls, d: dict, covering: bool = True) -> "PiecewiseSemiEllipsoid":
        n = int(d.get("n") or len(d["Q"][0]))
        cones = [HPolyhedron.from_dict(c, n=n) for c in d["partition"]]
        if len(cones) == 1 and cones[0].nrows == 0:
            part = single_piece(n)
        else:
            part = build_partition(cones, require_cover=covering)
        return cls(part, [np.asarray(q, dtype=float) for q in d["Q"]])


def gauge(S: PiecewiseSemiEllipsoid, x) -> ExtendedReal:
    return S.gauge(x)


def support(S: PiecewiseSemiEllipsoid, y) -> ExtendedReal:
    return S.support(y)


def polar(S: PiecewiseSemiEllipsoid) -> PiecewiseSemiEllipsoid:
    return S.polar()


def sublevel_contains(S: PiecewiseSemiEllipsoid, x, tol: float = 1e-9) -> bool:
    return S.contains(x, tol)


def validate(S: PiecewiseSemiEllipsoid) -> list:
    return S.validate()


def from_ellipsoid(Q) -> PiecewiseSemiEllipsoid:
    return PiecewiseSemiEllipsoid.from_ellipsoid(Q)


def from_polytope(P: HPolyhedron) -> PiecewiseSemiEllipsoid:
    return PiecewiseSemiEllipsoid.from_polytope(P)


# ----------------------------------------------------------------------------


def _incidence(part: ConicPartition, G) -> frozenset:
    return frozenset(k for k, P in enumerate(part.pieces) if P.contains_many(G, 1e-9).all())


def partition_faces(part: ConicPartition) -> dict:
    """Faces of dimension >= 1 shared by at least two pieces.

    Maps the set ``I`` of pieces containing the face to the face generators.
    A face is identified by ``I`` because it equals the intersection of the
    pieces in ``I``.
    """
    faces = {}
    for i, j in itertools.combinations(range(part.m), 2):
        G = part.pair_face(i, j)
        if G is None:
            continue
        I = _incidence(part, G)
        faces.setdefault(I, G)
    if part.n <= 2:
        return faces
    queue = list(faces)
    while queue:
        I = queue.pop()
        for J in list(faces):
            U = I | J
            if U in faces or U == I or U == J:
                continue
            inter = part.intersection(sorted(U))
            if dim(inter) < 1:
                continue
            G = inter.cone_generators()
            K = _incidence(part, G)
            if K not in faces:
                faces[K] = G
                queue.append(K)
    return faces


def _polar(S: PiecewiseSemiEllipsoid) -> PiecewiseSemiEllipsoid:
    part = S.partition
    n = S.n
    cones, mats = [], []
    for i in range(part.m):
        G = part.generators(i)
        cones.append(G @ S.Q[i])
        mats.append(pseudoinverse(S.Q[i], RANK_TOL))
    for I, G in partition_faces(part).items():
        idx = sorted(I)
        E = range_basis(G)
        E = E.T @ E
        reduced = [E @ S.Q[i] @ E for i in idx]
        ref = reduced[0]
        scale = max(1.0, float(np.max(np.abs(ref))))
        for k in range(1, len(idx)):
            gap = float(np.max(np.abs(reduced[k] - ref)))
            if gap > FACE_AGREE_TOL * scale:
                raise ValueError(
                    f"pieces {idx[0]} and {idx[k]} disagree on their common face (gap {gap:.3e})")
        cones.append(np.vstack([G @ S.Q[i] for i in idx]))
        mats.append(E @ pseudoinverse(ref, RANK_TOL) @ E)
    # images of a shared ray computed from different pieces agree only up to
    # rounding; snapping makes neighbouring cones meet exactly
    cones = _snap_directions([_unit_rows(C) for C in cones], CONE_TOL)
    # after snapping, distinct directions are CONE_TOL apart, so a cone that
    # kept two of them must not be dropped as flat: rank uses a finer scale
    keep = [k for k, C in enumerate(cones)
            if C.shape[0] >= n and numerical_rank(C, 1e-2 * CONE_TOL) == n]
    cones, mats = [cones[k] for k in keep], [mats[k] for k in keep]
    hcones = [to_hrep(VPolyhedron(n, np.zeros((1, n)), C)) for C in cones]
    bounded = S.is_bounded()
    if not hcones:
        empty = ConicPartition([], covering=False, dimension=n)
        return PiecewiseSemiEllipsoid(empty, [])
    new = build_partition(hcones, require_cover=bounded)
    return PiecewiseSemiEllipsoid(new, mats)


def _snap_directions(cones, tol):
    """Replace unit rows closer than ``tol`` to an earlier row by that row."""
    reps = np.zeros((0, cones[0].shape[1])) if cones else None
    out = []
    for C in cones:
        D = C.copy()
        for k, u in enumerate(C):
            if reps.shape[0]:
                d = np.linalg.norm(reps - u, axis=1)
                h = int(np.argmin(d))
                if d[h] <= tol:
                    D[k] = reps[h]
                    continue
            reps = np.vstack([reps, u])
        out.append(D)
    return out


def _unit_rows(C):
    nr = np.linalg.norm(C, axis=1)
    C = C[nr > 1e-14]
    return C / np.linalg.norm(C, axis=1)[:, None]
