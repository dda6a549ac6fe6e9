"""Conic partitions of R^n: validation, neighbour structure, facet cones."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NotCovering, OriginNotContained, OverlappingPieces
from .linalg import null_basis
from .polyhedra import HPolyhedron, VPolyhedron, dim, to_hrep

MEMBER_TOL = 1e-10
SEP_TOL = 1e-9


@dataclass(eq=False)
class ConicPartition:
    """Full-dimensional cones covering R^n with lower-dimensional overlaps.

    ``neighbors`` holds the pairs ``(i, j)``, ``i < j``, whose intersection
    has dimension ``n - 1``; ``normals[(i, j)]`` is the unit normal of that
    intersection pointing into piece ``i`` (``normals[(j, i)]`` is its
    negation). ``covering`` is False only for partial partitions, which
    arise as polars of unbounded sets.
    """

    pieces: list
    neighbors: list = field(default_factory=list)
    normals: dict = field(default_factory=dict)
    covering: bool = True
    dimension: int | None = None

    def __post_init__(self):
        if self.dimension is None:
            if not self.pieces:
                raise ValueError("an empty partition needs an explicit dimension")
            self.dimension = self.pieces[0].n
        self._gens = [P.cone_generators() for P in self.pieces]
        rows = [P.A for P in self.pieces]
        self._stack = np.vstack(rows) if rows else np.zeros((0, self.n))
        self._ptr = np.cumsum([0] + [P.nrows for P in self.pieces]).astype(np.intp)
        self._pair_cache = {}

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def m(self) -> int:
        return len(self.pieces)

    def generators(self, i: int) -> np.ndarray:
        return self._gens[i]

    def locate(self, x, tol: float = MEMBER_TOL) -> int:
        return int(self.locate_many(np.asarray(x, dtype=float)[None, :], tol)[0])

    def locate_many(self, X, tol: float = MEMBER_TOL) -> np.ndarray:
        """First piece containing each row of ``X``; -1 where none does."""
        return kernels.locate_pieces(np.atleast_2d(np.asarray(X, dtype=float)), self._stack, self._ptr, tol)

    def pieces_containing(self, x, tol: float = MEMBER_TOL) -> list:
        x = np.asarray(x, dtype=float)
        s = tol * max(np.linalg.norm(x), 1e-300)
        return [i for i, P in enumerate(self.pieces) if np.all(P.A @ x <= s)]

    def pair_face(self, i: int, j: int):
        """Generators of ``P_i & P_j`` (rows), or None when it is ``{0}``."""
        key = (min(i, j), max(i, j))
        if key not in self._pair_cache:
            inter = self.intersection(key)
            self._pair_cache[key] = inter.cone_generators() if dim(inter) >= 1 else None
        return self._pair_cache[key]

    def intersection(self, idx) -> HPolyhedron:
        idx = list(idx)
        return HPolyhedron(np.vstack([self.pieces[i].A for i in idx]), n=self.n)

    def to_dict(self) -> list:
        return [P.to_dict() for P in self.pieces]


def _separated(Gi, Ai, Gj):
    """Decide the overlap of two cones from a facet of the first.

    Returns 0 if some facet strictly separates (intersection is {0}), 1 if a
    facet weakly separates (intersection is lower dimensional), None if no
    facet of the first cone separates.
    """
    if Gj.shape[0] == 0:
        return None
    vals = Gj @ Ai.T  # rows of Ai are outward normals: Pi <= {a x <= 0}
    weak = np.all(vals >= -SEP_TOL, axis=0)
    if not np.any(weak):
        return None
    strict = np.all(vals > SEP_TOL, axis=0)
    return 0 if np.any(strict) else 1


def _oriented_normal(G_int, G_i, n):
    N = null_basis(G_int, 1e-9) if G_int.shape[0] else np.eye(n)
    if N.shape[0] != 1:
        return None
    v = N[0]
    s = G_i @ v
    if np.sum(s) < 0:
        v = -v
    return v / np.linalg.norm(v)


def build_partition(cones, require_cover: bool = True, n_samples: int = 2000, seed: int = 0) -> ConicPartition:
    """Validate a list of cones as a conic partition and compute its neighbours.

    Raises ``OverlappingPieces`` when two pieces share interior points and
    ``NotCovering`` when (with ``require_cover``) some direction is missed.
    """
    cones = list(cones)
    if not cones:
        raise ValueError("a partition needs at least one piece")
    n = cones[0].n
    if any(C.n != n for C in cones):
        raise ValueError("pieces live in different dimensions")
    pieces = []
    for k, C in enumerate(cones):
        if not C.is_cone:
            raise ValueError(f"piece {k} is not a cone")
        P = C.facet_rows()
        if dim(P) != n:
            raise ValueError(f"piece {k} is not full-dimensional")
        pieces.append(P)
    gens = [P.cone_generators() for P in pieces]
    neighbors, normals, faces = [], {}, {}
    for i, j in itertools.combinations(range(len(pieces)), 2):
        s = _separated(gens[i], pieces[i].A, gens[j])
        if s is None:
            s = _separated(gens[j], pieces[j].A, gens[i])
        if s == 0:
            faces[(i, j)] = None
            continue
        inter = HPolyhedron(np.vstack([pieces[i].A, pieces[j].A]), n=n)
        d = dim(inter)
        if d == n:
            raise OverlappingPieces(f"pieces {i} and {j} overlap in a full-dimensional set")
        faces[(i, j)] = inter.cone_generators() if d >= 1 else None
        if d == n - 1:
            v = _oriented_normal(faces[(i, j)], gens[i], n)
            neighbors.append((i, j))
            normals[(i, j)] = v
            normals[(j, i)] = -v
    part = ConicPartition(pieces, neighbors, normals, covering=require_cover, dimension=n)
    part._pair_cache.update(faces)
    if require_cover:
        _check_cover(part, n_samples, seed)
    return part


def _check_cover(part: ConicPartition, n_samples: int, seed: int):
    rng = np.random.default_rng(seed)
    n = part.n
    if part.m == 1:
        if part.pieces[0].nrows:
            raise NotCovering("a single piece must be the whole space")
        return
    by_piece = {i: [] for i in range(part.m)}
    for (i, j) in part.neighbors:
        by_piece[i].append(j)
        by_piece[j].append(i)
    for i, P in enumerate(part.pieces):
        G = part.generators(i)
        for a in P.A:
            a = a / np.linalg.norm(a)
            F = G[np.abs(G @ a) <= 1e-9]
            across = [j for j in by_piece[i] if np.allclose(part.normals[(i, j)], -a, atol=1e-7)]
            if not across:
                raise NotCovering(f"facet of piece {i} with normal {a} borders no other piece")
            if any(part.pieces[j].contains_many(F, 1e-9).all() for j in across):
                continue
            W = rng.random((64, F.shape[0]))
            X = W @ F
            ok = np.zeros(X.shape[0], dtype=bool)
            for j in across:
                ok |= part.pieces[j].contains_many(X, 1e-9)
            if not ok.all():
                raise NotCovering(f"facet of piece {i} with normal {a} is not fully covered")
    D = rng.standard_normal((n_samples, n))
    if np.any(part.locate_many(D, 1e-9) < 0):
        raise NotCovering("some sampled direction lies in no piece")


def single_piece(n: int) -> ConicPartition:
    return ConicPartition([HPolyhedron.whole_space(n)], dimension=n)


def orthant_partition(n: int) -> ConicPartition:
    """The 2^n orthants ("quadrants" when n = 2)."""
    cones = []
    for signs in itertools.product([1.0, -1.0], repeat=n):
        cones.append(HPolyhedron(-np.diag(signs)))
    return build_partition(cones)


def facet_cones(P: HPolyhedron, **kw) -> ConicPartition:
    """Partition made of the conic hulls of the facets of a polytope.

    ``P`` must be bounded with the origin in its interior.
    """
    P = P.facet_rows()
    if np.any(P.b <= 1e-12):
        raise OriginNotContained("facet cones need the origin in the interior")
    V = P.vertices()
    cones = []
    for a, c in zip(P.A, P.b):
        tight = V[np.abs(V @ a - c) <= 1e-8 * max(1.0, c)]
        cones.append(to_hrep(VPolyhedron(P.n, np.zeros((1, P.n)), tight)))
    return build_partition(cones, **kw)
