"""Polyhedra and polyhedral cones in H- and V-representation.

All H-representations use ``A x <= b``; a cone has ``b == 0``. Cones written
the other way round (``a^T x >= 0``) go through :meth:`HPolyhedron.from_cone_rows`.

Representation conversion uses the double-description method on the
homogenized cone ``{(x, t) : A x - b t <= 0, t >= 0}``. Redundancy removal
and the convergence tests of the viability iteration use linear programs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .errors import (
    ComplexityBudgetExceeded,
    DimensionMismatch,
    EmptyPolyhedron,
    OriginNotContained,
    UnboundedNonCone,
)
from .linalg import null_basis, numerical_rank, range_basis

NORMAL_TOL = 1e-12
DUP_TOL = 1e-9
DD_TOL = 1e-9
REDUNDANCY_TOL = 1e-9
FM_ROW_BUDGET = 100_000


# ----------------------------------------------------------------------------
# linear programming


def lp_maximize(c, A, b, A_eq=None, b_eq=None):
    """Maximize ``c @ x`` over ``{A x <= b, A_eq x = b_eq}``.

    Returns ``(status, value, x)`` with status one of ``"optimal"``,
    ``"infeasible"`` or ``"unbounded"``.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).reshape(-1)
    kw = {}
    if A.shape[0]:
        kw["A_ub"], kw["b_ub"] = A, b
    if A_eq is not None and len(A_eq):
        kw["A_eq"] = np.asarray(A_eq, dtype=float).reshape(-1, n)
        kw["b_eq"] = np.asarray(b_eq, dtype=float).reshape(-1)
    res = linprog(-c, bounds=[(None, None)] * n, method="highs", **kw)
    if res.status == 0:
        return "optimal", float(-res.fun), res.x
    if res.status == 2:
        return "infeasible", -np.inf, None
    if res.status == 3:
        return "unbounded", np.inf, None
    raise RuntimeError(f"LP solver failed: {res.message}")


# ----------------------------------------------------------------------------
# double description


def _orthonormal_rows(L):
    if L.shape[0] == 0:
        return L
    return range_basis(L, 1e-12)


def dd_cone(A, tol: float = DD_TOL):
    """Extreme rays and lineality basis of ``{x : A x <= 0}``.

    Returns ``(rays, lines)``: unit rays (rows) of the pointed part and an
    orthonormal basis (rows) of the lineality space.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    A = A[norms > NORMAL_TOL] / norms[norms > NORMAL_TOL, None]
    L = np.eye(d)
    R = np.zeros((0, d))
    done = []
    for a in A:
        if L.shape[0]:
            la = L @ a
            k = int(np.argmax(np.abs(la)))
            if abs(la[k]) > tol:
                l0 = L[k] * (-np.sign(la[k]))
                al0 = float(a @ l0)
                rest = np.delete(L, k, axis=0)
                rest = rest - np.outer(rest @ a / al0, l0)
                L = _orthonormal_rows(rest)
                if R.shape[0]:
                    R = R - np.outer(R @ a / al0, l0)
                    R /= np.linalg.norm(R, axis=1)[:, None]
                R = np.vstack([R, l0 / np.linalg.norm(l0)])
                done.append(a)
                continue
        if R.shape[0] == 0:
            done.append(a)
            continue
        vals = R @ a
        pos = np.nonzero(vals > tol)[0]
        if pos.size == 0:
            done.append(a)
            continue
        neg = np.nonzero(vals < -tol)[0]
        keep = vals <= tol
        if neg.size:
            Aproc = np.vstack(done) if done else np.zeros((0, d))
            Z = np.abs(R @ Aproc.T) <= tol
            pointed_dim = d - L.shape[0]
            ps, qs = kernels.dd_adjacent_pairs(Z, pos, neg, max(pointed_dim - 2, 0))
            if ps.size:
                new = vals[ps, None] * R[qs] - vals[qs, None] * R[ps]
                new /= np.linalg.norm(new, axis=1)[:, None]
                R = np.vstack([R[keep], new])
            else:
                R = R[keep]
        else:
            R = R[keep]
        R = _dedupe_rows(R, 1e-9)
        done.append(a)
    return R, L


def _dedupe_rows(R, tol):
    if R.shape[0] < 2:
        return R
    out = []
    for r in R:
        if not any(np.max(np.abs(r - s)) <= tol for s in out):
            out.append(r)
    return np.asarray(out)


def _hull_rows(G, lines, tol: float = DD_TOL):
    """H-rep rows ``y`` with ``cone(G) + span(lines) = {x : Y x <= 0}``."""
    d = G.shape[1] if G.ndim == 2 and G.size else lines.shape[1]
    cons = [G] if G.size else []
    if lines.size:
        cons += [lines, -lines]
    C = np.vstack(cons) if cons else np.zeros((0, d))
    rays, lin = dd_cone(C, tol)
    rows = [rays]
    if lin.shape[0]:
        rows += [lin, -lin]
    return np.vstack(rows) if rows else np.zeros((0, d))


# ----------------------------------------------------------------------------
# representations


@dataclass(frozen=True, eq=False)
class VPolyhedron:
    """``conv(vertices) + cone(rays) + span(lines)``."""

    n: int
    vertices: np.ndarray = None
    rays: np.ndarray = None
    lines: np.ndarray = None

    def __post_init__(self):
        for name in ("vertices", "rays", "lines"):
            v = getattr(self, name)
            v = np.zeros((0, self.n)) if v is None else np.asarray(v, dtype=float).reshape(-1, self.n)
            object.__setattr__(self, name, v)

    @property
    def is_cone(self) -> bool:
        return self.vertices.shape[0] <= 1 and (
            self.vertices.shape[0] == 0 or np.allclose(self.vertices, 0)
        )

    def generators(self) -> np.ndarray:
        """Rays plus both orientations of every line."""
        return np.vstack([self.rays, self.lines, -self.lines])


class HPolyhedron:
    """Polyhedron ``{x : A x <= b}``."""

    def __init__(self, A, b=None, n: int | None = None):
        A = np.asarray(A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(0 if A.size == 0 else 1, -1) if n is None or A.size else A.reshape(0, n)
        if n is not None and A.size == 0:
            A = A.reshape(0, n)
        b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float).reshape(-1)
        if b.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"A has {A.shape[0]} rows but b has {b.shape[0]}")
        norms = np.linalg.norm(A, axis=1)
        zero = norms <= NORMAL_TOL
        if np.any(zero & (b < -NORMAL_TOL)):
            # 0 <= negative: keep a single infeasible marker row
            A = np.zeros((1, A.shape[1]))
            b = np.array([-1.0])
            self._infeasible = True
        else:
            A, b = A[~zero], b[~zero]
            self._infeasible = False
        A.setflags(write=False)
        b.setflags(write=False)
        self.A = A
        self.b = b

    @classmethod
    def from_cone_rows(cls, rows, n: int | None = None) -> "HPolyhedron":
        """Cone ``{x : a_i^T x >= 0}``; rows are negated on ingest."""
        rows = np.asarray(rows, dtype=float)
        if rows.size == 0:
            return cls(np.zeros((0, n)), n=n)
        return cls(-np.atleast_2d(rows))

    @classmethod
    def box(cls, lo, hi) -> "HPolyhedron":
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        n = lo.size
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([hi, -lo]))

    @classmethod
    def whole_space(cls, n: int) -> "HPolyhedron":
        return cls(np.zeros((0, n)), n=n)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def nrows(self) -> int:
        return self.A.shape[0]

    @property
    def is_cone(self) -> bool:
        return not self._infeasible and bool(np.all(np.abs(self.b) <= NORMAL_TOL))

    def __repr__(self):
        return f"HPolyhedron(n={self.n}, rows={self.nrows})"

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if self._infeasible:
            return False
        return bool(np.all(self.A @ x <= self.b + tol * max(1.0, np.linalg.norm(x))))

    def contains_many(self, X, tol: float = 1e-9) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._infeasible:
            return np.zeros(X.shape[0], dtype=bool)
        slack = tol * np.maximum(1.0, np.linalg.norm(X, axis=1))
        return np.all(X @ self.A.T <= self.b[None, :] + slack[:, None], axis=1)

    def intersect(self, other: "HPolyhedron") -> "HPolyhedron":
        if other.n != self.n:
            raise DimensionMismatch("intersecting polyhedra of different dimensions")
        return HPolyhedron(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]), n=self.n)

    def canonical(self) -> "HPolyhedron":
        """Unit-norm normals, duplicate rows (up to positive scaling) removed."""
        if self._infeasible or self.nrows == 0:
            return self
        s = np.linalg.norm(self.A, axis=1)
        A = self.A / s[:, None]
        b = self.b / s
        keepA, keepb = [], []
        for a, c in zip(A, b):
            dup = False
            for k, (a2, c2) in enumerate(zip(keepA, keepb)):
                if np.max(np.abs(a - a2)) <= DUP_TOL:
                    dup = True
                    if c < c2:
                        keepb[k] = c
                    break
            if not dup:
                keepA.append(a)
                keepb.append(c)
        return HPolyhedron(np.asarray(keepA), np.asarray(keepb), n=self.n)

    def scaled(self, t: float) -> "HPolyhedron":
        """The set ``t P``."""
        return HPolyhedron(self.A, self.b * t, n=self.n)

    # -- double description -------------------------------------------------

    @cached_property
    def _generators(self):
        n = self.n
        if self._infeasible:
            return None
        if self.is_cone:
            R, L = dd_cone(self.A)
            return np.zeros((1, n)), R, L
        H = np.vstack([
            np.hstack([self.A, -self.b[:, None]]),
            np.hstack([np.zeros((1, n)), -np.ones((1, 1))]),
        ])
        R, L = dd_cone(H)
        # lines of the homogenized cone have t = 0 because of the row t >= 0
        t = R[:, -1]
        vert = t > DD_TOL
        if not np.any(vert):
            return None
        V = R[vert, :n] / t[vert, None]
        rays = R[~vert, :n]
        if rays.shape[0]:
            rays = rays / np.linalg.norm(rays, axis=1)[:, None]
        lines = range_basis(L[:, :n], 1e-12) if L.shape[0] else np.zeros((0, n))
        return _dedupe_rows(V, 1e-9), rays, lines

    def to_vrep(self) -> VPolyhedron:
        g = self._generators
        if g is None:
            raise EmptyPolyhedron("polyhedron is empty")
        V, R, L = g
        return VPolyhedron(self.n, V, R, L)

    def is_empty(self) -> bool:
        return self._generators is None

    def is_bounded(self) -> bool:
        g = self._generators
        return g is None or (g[1].shape[0] == 0 and g[2].shape[0] == 0)

    def vertices(self) -> np.ndarray:
        v = self.to_vrep()
        if v.rays.shape[0] or v.lines.shape[0]:
            raise UnboundedNonCone("polyhedron is unbounded; use to_vrep() for rays")
        return v.vertices

    def cone_generators(self) -> np.ndarray:
        """Rays and +/- lines of a cone (rows)."""
        if not self.is_cone:
            raise ValueError("not a cone")
        _, R, L = self._generators
        return np.vstack([R, L, -L])

    def facet_rows(self) -> "HPolyhedron":
        """Irredundant H-rep of a full-dimensional polyhedron, read off its generators.

        A row is kept iff the generators tight on it span a facet. Lower
        dimensional inputs fall back to :func:`remove_redundancy`.
        """
        P = self.canonical()
        if P.nrows == 0 or P.is_empty():
            return P
        n = P.n
        if dim(P) < n:
            return remove_redundancy(P)
        V, R, L = P._generators
        if P.is_cone:
            G = np.vstack([R, L])
            H = P.A
            target = n - 1
        else:
            G = np.vstack([np.hstack([V, np.ones((V.shape[0], 1))]),
                           np.hstack([R, np.zeros((R.shape[0], 1))]),
                           np.hstack([L, np.zeros((L.shape[0], 1))])])
            H = np.hstack([P.A, -P.b[:, None]])
            target = n
        vals = G @ H.T
        scale = 1e-8 * np.maximum(1.0, np.abs(P.b))
        keep = [k for k in range(P.nrows)
                if numerical_rank(G[np.abs(vals[:, k]) <= scale[k]], 1e-9) >= target]
        return HPolyhedron(P.A[keep], P.b[keep], n=n)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, d: dict, n: int | None = None) -> "HPolyhedron":
        A = np.asarray(d.get("A", []), dtype=float)
        if A.size == 0:
            n = n if n is not None else int(d.get("n", 0))
            return cls(np.zeros((0, n)), n=n)
        b = d.get("b")
        return cls(A, None if b is None else np.asarray(b, dtype=float))


# ----------------------------------------------------------------------------
# operations


def to_vrep(P: HPolyhedron) -> VPolyhedron:
    return P.to_vrep()


def to_hrep(V: VPolyhedron) -> HPolyhedron:
    """H-representation of ``conv(V.vertices) + cone(V.rays) + span(V.lines)``."""
    n = V.n
    if V.is_cone:
        Y = _hull_rows(V.rays, V.lines)
        return HPolyhedron(Y, np.zeros(Y.shape[0]), n=n).canonical()
    G = np.vstack([np.hstack([V.vertices, np.ones((V.vertices.shape[0], 1))]),
                   np.hstack([V.rays, np.zeros((V.rays.shape[0], 1))])])
    Lh = np.hstack([V.lines, np.zeros((V.lines.shape[0], 1))])
    Y = _hull_rows(G, Lh)
    A, c = Y[:, :n], Y[:, n]
    keep = np.linalg.norm(A, axis=1) > 1e-10
    return HPolyhedron(A[keep], -c[keep], n=n).canonical()


def preimage(P: HPolyhedron, M) -> HPolyhedron:
    """``{x : M x in P}``; same number of rows, no invertibility needed."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != P.n:
        raise DimensionMismatch(f"matrix maps into R^{M.shape[0]} but P lives in R^{P.n}")
    return HPolyhedron(P.A @ M, P.b.copy(), n=M.shape[1])


def remove_redundancy(P: HPolyhedron, tol: float = REDUNDANCY_TOL) -> HPolyhedron:
    """Drop every inequality implied by the others (one LP per row)."""
    P = P.canonical()
    if P._infeasible:
        raise EmptyPolyhedron("polyhedron is empty")
    n = P.n
    if P.nrows == 0:
        return P
    status, _, _ = lp_maximize(np.zeros(n), P.A, P.b)
    if status == "infeasible":
        raise EmptyPolyhedron("polyhedron is empty")
    keep = np.ones(P.nrows, dtype=bool)
    for k in range(P.nrows):
        others = keep.copy()
        others[k] = False
        A = np.vstack([P.A[others], P.A[k:k + 1]])
        b = np.concatenate([P.b[others], [P.b[k] + 1.0]])
        status, val, _ = lp_maximize(P.A[k], A, b)
        if status == "optimal" and val <= P.b[k] + tol:
            keep[k] = False
    return HPolyhedron(P.A[keep], P.b[keep], n=n)


def eliminate_last(P: HPolyhedron, budget: int = FM_ROW_BUDGET, redundancy: bool = True) -> HPolyhedron:
    """Projection onto the first ``n - 1`` coordinates by Fourier-Motzkin."""
    if P.n < 2:
        raise ValueError("need at least two coordinates to eliminate one")
    P = P.canonical()
    c = P.A[:, -1] if P.nrows else np.zeros(0)
    npos = int(np.sum(c > 1e-12))
    nneg = int(np.sum(c < -1e-12))
    if P.nrows - npos - nneg + npos * nneg > budget:
        raise ComplexityBudgetExceeded(
            f"Fourier-Motzkin would create {npos * nneg} rows (budget {budget})")
    A2, b2 = kernels.fm_combine(P.A, P.b, P.n - 1, 1e-12)
    Q = HPolyhedron(A2, b2, n=P.n - 1)
    return remove_redundancy(Q) if redundancy else Q.canonical()


def eliminate(P: HPolyhedron, k: int, budget: int = FM_ROW_BUDGET) -> HPolyhedron:
    """Eliminate the last ``k`` coordinates."""
    for _ in range(k):
        P = eliminate_last(P, budget)
    return P


def dim(P: HPolyhedron) -> int:
    """Dimension of the affine hull, or -1 for the empty set."""
    g = P._generators
    if g is None:
        return -1
    V, R, L = g
    if P.is_cone:
        G = np.vstack([R, L])
        return numerical_rank(G, 1e-9) if G.size else 0
    G = np.vstack([np.hstack([V, np.ones((V.shape[0], 1))]),
                   np.hstack([R, np.zeros((R.shape[0], 1))]),
                   np.hstack([L, np.zeros((L.shape[0], 1))])])
    return numerical_rank(G, 1e-9) - 1


def dim_lp(P: HPolyhedron, tol: float = 1e-9) -> int:
    """Dimension via LPs that detect implicit equalities (slow; used as a cross-check)."""
    P = P.canonical()
    if P._infeasible:
        return -1
    n = P.n
    if P.nrows == 0:
        return n
    status, _, _ = lp_maximize(np.zeros(n), P.A, P.b)
    if status == "infeasible":
        return -1
    eq = []
    for k in range(P.nrows):
        status, val, _ = lp_maximize(-P.A[k], P.A, P.b)
        # min a_k x == b_k  <=>  row k is tight on all of P
        if status == "optimal" and -val >= P.b[k] - tol:
            eq.append(P.A[k])
    return n - (numerical_rank(np.asarray(eq), 1e-9) if eq else 0)


def polar_polytope(P: HPolyhedron) -> HPolyhedron:
    """Polar set ``{y : y^T x <= 1 for all x in P}`` (polar cone for cones)."""
    P = P.canonical()
    n = P.n
    if P.is_cone:
        if P.nrows == 0:
            return HPolyhedron(np.vstack([np.eye(n), -np.eye(n)]), np.zeros(2 * n))
        return to_hrep(VPolyhedron(n, np.zeros((1, n)), P.A))
    if np.any(P.b < -1e-12):
        raise OriginNotContained("polar requires the origin to belong to the set")
    pos = P.b > 1e-12
    V = P.A[pos] / P.b[pos, None]
    R = P.A[~pos]
    if V.shape[0] == 0:
        V = np.zeros((1, n))
    return to_hrep(VPolyhedron(n, V, R))


def support(P: HPolyhedron, y) -> float:
    """``max_{x in P} y^T x`` by LP."""
    status, val, _ = lp_maximize(np.asarray(y, dtype=float), P.A, P.b)
    if status == "infeasible":
        return -np.inf
    return val


def contains_polyhedron(outer: HPolyhedron, inner: HPolyhedron, tol: float = 1e-8) -> bool:
    """``inner <= outer`` tested by one LP per row of ``outer``."""
    for a, c in zip(outer.A, outer.b):
        if support(inner, a) > c + tol:
            return False
    return True


def same_set(P: HPolyhedron, Q: HPolyhedron, tol: float = 1e-8) -> bool:
    return contains_polyhedron(P, Q, tol) and contains_polyhedron(Q, P, tol)
