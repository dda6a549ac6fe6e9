"""Linear control systems, their algebraic reduction and invariance checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, OriginNotContained, UnboundedNonCone
from .linalg import Subspace, is_psd, orthogonal_complement, projection_matrix
from .polyhedra import FM_ROW_BUDGET, HPolyhedron, contains_polyhedron, eliminate_last, remove_redundancy

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
U_TOL = 1e-8


def _as_matrix(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix")
    return M


def _check_state_set(X: HPolyhedron, n: int):
    if X.n != n:
        raise DimensionMismatch(f"state set lives in R^{X.n}, system in R^{n}")
    if not X.is_bounded():
        raise UnboundedNonCone("the state set must be bounded")
    if X.nrows and np.any(X.b <= 0):
        raise OriginNotContained("the state set must contain the origin in its interior")


@dataclass
class LinearControlSystem:
    """``x+ = A x + B u`` with ``x`` constrained to the polytope ``X``."""

    A: np.ndarray
    B: np.ndarray
    X: HPolyhedron

    def __post_init__(self):
        self.A = _as_matrix(self.A, "A")
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionMismatch("A must be square")
        self.B = _as_matrix(self.B, "B") if np.size(self.B) else np.zeros((n, 0))
        if self.B.shape[0] != n:
            raise DimensionMismatch(f"B has {self.B.shape[0]} rows, expected {n}")
        _check_state_set(self.X, n)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist(), "X": self.X.to_dict()}


@dataclass
class AlgebraicSystem:
    """``E x+ = C x`` with ``x`` in ``X``."""

    E: np.ndarray
    C: np.ndarray
    X: HPolyhedron

    def __post_init__(self):
        self.E = np.asarray(self.E, dtype=float).reshape(-1, self.X.n)
        self.C = np.asarray(self.C, dtype=float).reshape(-1, self.X.n)
        if self.E.shape != self.C.shape:
            raise DimensionMismatch("E and C must have the same shape")

    @property
    def r(self) -> int:
        return self.E.shape[0]


@dataclass
class SwitchedControlSystem:
    """``x+ = A_s x + B_s u`` where the mode ``s`` is chosen by the environment."""

    modes: list
    X: HPolyhedron
    _systems: list = field(init=False, repr=False)

    def __post_init__(self):
        if not self.modes:
            raise ValueError("a switched system needs at least one mode")
        self._systems = [LinearControlSystem(A, B, self.X) for A, B in self.modes]
        self.modes = [(s.A, s.B) for s in self._systems]
        if len({s.n for s in self._systems}) != 1:
            raise DimensionMismatch("modes act on different state dimensions")

    @property
    def n(self) -> int:
        return self._systems[0].n

    @property
    def systems(self) -> list:
        return list(self._systems)

    def to_dict(self) -> dict:
        return {"modes": [{"A": A.tolist(), "B": B.tolist()} for A, B in self.modes], "X": self.X.to_dict()}


def system_from_dict(d: dict):
    X = HPolyhedron.from_dict(d["X"])
    if "modes" in d and d["modes"]:
        return SwitchedControlSystem([(m["A"], m.get("B", [])) for m in d["modes"]], X)
    return LinearControlSystem(d["A"], d.get("B", []), X)


def _sign_fixed(W):
    # first entry of largest magnitude made positive, for a reproducible basis
    W = W.copy()
    for k in range(W.shape[0]):
        i = int(np.argmax(np.abs(W[k]) > 1e-12))
        if W[k, i] < 0:
            W[k] = -W[k]
    return W


def reduce_to_algebraic(sys: LinearControlSystem, compress: bool = True) -> AlgebraicSystem:
    """Eliminate the input: ``x+`` is reachable iff ``E x+ = C x``.

    ``E`` projects onto the orthogonal complement of the image of ``B`` and
    ``C = E A``. With ``compress`` the projector is replaced by an
    orthonormal basis of that complement (``n - rank B`` rows).
    """
    n = sys.n
    img = Subspace.image(sys.B) if sys.m else Subspace(n, np.zeros((0, n)))
    perp = orthogonal_complement(img)
    if compress:
        E = _sign_fixed(perp.basis)
    else:
        E = projection_matrix(perp)
    return AlgebraicSystem(E, E @ sys.A, sys.X)


def is_invariant_autonomous_ellipsoid(A, Q, tol: float = 1e-9) -> bool:
    """Whether ``{x : x' Q x <= 1}`` is invariant under ``x+ = A x``."""
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    return is_psd(Q - A.T @ Q @ A, tol)


# -- viability kernel ---------------------------------------------------------


def viability_step(sys: LinearControlSystem, P: HPolyhedron, budget: int = FM_ROW_BUDGET) -> HPolyhedron:
    """States of ``X`` from which some input leads into ``P``.

    ``budget`` caps the rows produced by each elimination step.
    """
    n, m = sys.n, sys.m
    Ab = np.hstack([sys.A, sys.B])
    rows = np.vstack([P.A @ Ab, np.hstack([sys.X.A, np.zeros((sys.X.nrows, m))])])
    rhs = np.concatenate([P.b, sys.X.b])
    lifted = HPolyhedron(rows, rhs, n=n + m)
    for _ in range(m):
        lifted = eliminate_last(lifted, budget=budget, redundancy=True)
    return remove_redundancy(lifted)


class ViabilityResult(NamedTuple):
    kernel: HPolyhedron
    converged: bool
    iterates: list


def viability_kernel(sys: LinearControlSystem, max_iter: int = 50, tol: float = 1e-8,
                     budget: int = FM_ROW_BUDGET) -> ViabilityResult:
    """Iterate ``P <- viability_step(P)`` from ``X`` until it stops shrinking.

    ``iterates`` starts with ``X``; the fixed point is not repeated.
    Convergence is tested by comparing support functions along the facet
    normals of both sets (``P_k`` inside ``P_{k+1}`` up to ``tol``).
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    P = remove_redundancy(sys.X)
    iterates = [P]
    for _ in range(max_iter):
        nxt = viability_step(sys, P, budget)
        if contains_polyhedron(nxt, P, tol):
            return ViabilityResult(P, True, iterates)
        P = nxt
        iterates.append(P)
    return ViabilityResult(P, False, iterates)


# -- invariance checks --------------------------------------------------------


@dataclass
class InvarianceReport:
    """Worst residuals of the primal and dual invariance tests.

    ``primal`` is ``max(min_u gauge(A x + B u) - 1)`` over sampled boundary
    points, ``dual`` the largest gap in the polar-side inequality and
    ``containment`` the largest relative excess of the support function
    over the offsets of ``X``. Negative parts are clipped to zero.
    """

    primal: float
    dual: float
    containment: float
    tol: float = 1e-6

    @property
    def primal_ok(self) -> bool:
        return self.primal <= self.tol

    @property
    def dual_ok(self) -> bool:
        return self.dual <= self.tol

    @property
    def contained(self) -> bool:
        return self.containment <= self.tol

    @property
    def passed(self) -> bool:
        return self.primal_ok and self.dual_ok and self.contained

    def to_dict(self) -> dict:
        return {"primal": self.primal, "dual": self.dual, "containment": self.containment,
                "passed": self.passed}


def _sphere(rng, count, n):
    D = rng.standard_normal((count, n))
    return D / np.linalg.norm(D, axis=1)[:, None]


def _line_argmin(f, X0, bvec, hi_limit: float = 1e8, tol: float = U_TOL):
    """Vectorized golden-section search of ``argmin_u f(X0 + u b)`` per row.

    Returns 0 for rows where the search does not improve on ``f(X0)``.
    """
    N = X0.shape[0]
    f0 = f(X0)
    R = np.ones(N)
    for _ in range(64):
        lo_v = f(X0 - R[:, None] * bvec)
        hi_v = f(X0 + R[:, None] * bvec)
        grow = (lo_v < f0) | (hi_v < f0)
        if not grow.any() or R.max() >= hi_limit:
            break
        R[grow] *= 2.0
    a, b = -R.copy(), R.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = f(X0 + c[:, None] * bvec)
    fd = f(X0 + d[:, None] * bvec)
    while np.max(b - a) > tol:
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = b - GOLDEN * (b - a)
        nd = a + GOLDEN * (b - a)
        # reuse one interior point, evaluate the other
        newc = np.where(left, nc, d)
        newd = np.where(left, c, nd)
        fnew = f(X0 + np.where(left, nc, nd)[:, None] * bvec)
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = newc, newd
    u = (a + b) / 2
    return np.where(f(X0 + u[:, None] * bvec) < f0, u, 0.0)


def _golden_min(f, X0, bvec, **kw):
    """Vectorized ``min_u f(X0 + u b)`` per row."""
    u = _line_argmin(f, X0, bvec, **kw)
    return f(X0 + u[:, None] * bvec)


def _min_gauge_on_affine(S, y, U) -> float:
    """``min_w gauge(S, y + U w)``: one convex QP per piece, best attained value."""
    import clarabel

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = settings.tol_gap_rel = settings.tol_feas = 1e-12
    best, best_z = np.inf, y
    for P, Q in zip(S.partition.pieces, S.Q):
        H = U.T @ Q @ U
        Pm = sp.csc_matrix(np.triu(2.0 * (H + H.T) / 2))
        q = 2.0 * U.T @ Q @ y
        G = sp.csc_matrix(P.A @ U) if P.nrows else sp.csc_matrix((0, U.shape[1]))
        h = P.b - P.A @ y if P.nrows else np.zeros(0)
        sol = clarabel.DefaultSolver(Pm, q, G, h, [clarabel.NonnegativeConeT(G.shape[0])], settings)
        res = sol.solve()
        if str(res.status) not in ("Solved", "AlmostSolved"):
            continue
        z = y + U @ np.asarray(res.x)
        val = float(z @ Q @ z)
        if val < best:
            best, best_z = val, z
    # report the gauge actually attained at the minimizer
    return float(S.gauge(best_z)) if np.isfinite(best) else np.inf


def _primal_residual(A, B, S, X):
    """Largest ``min_u gauge(S, A x + B u) - 1`` over the rows of ``X``."""
    Y = X @ A.T
    if B.shape[1] == 0 or not np.any(B):
        vals = S.gauge_many(Y)
    elif B.shape[1] == 1:
        vals = _golden_min(S.gauge_many, Y, B[:, 0][None, :])
    else:
        U = Subspace.image(B).basis.T
        if U.shape[1] == S.n:
            return -1.0  # the origin is reachable
        # coordinate descent over an orthonormal basis of the input directions;
        # every value found is attained, hence an upper bound of the minimum
        Z = Y.copy()
        vals = S.gauge_many(Z)
        for _ in range(20):
            prev = vals.copy()
            for b in U.T:
                step = _line_argmin(S.gauge_many, Z, b[None, :])
                Z = Z + step[:, None] * b
            vals = S.gauge_many(Z)
            if np.max(prev - vals) <= U_TOL:
                break
        # solve exactly where the upper bound still looks like a violation
        for k in np.flatnonzero(vals > 1.0):
            vals[k] = min(vals[k], _min_gauge_on_affine(S, Y[k], U))
    return float(np.max(vals - 1.0)) if vals.size else 0.0


def _dual_residual(alg: AlgebraicSystem, polar_set, rng, count):
    """Largest ``gauge(S°, C' y) - gauge(S°, E' y)`` over sampled ``y``."""
    if alg.r == 0:
        return 0.0
    Y = _sphere(rng, count, alg.r)
    lhs = polar_set.gauge_many(Y @ alg.C)
    rhs = polar_set.gauge_many(Y @ alg.E)
    # infinity on the right satisfies the inequality, including inf <= inf
    gap = np.where(np.isinf(rhs), -np.inf, lhs - rhs)
    return float(np.max(gap))


def _containment_residual(S, X: HPolyhedron, polar_set):
    P = remove_redundancy(X)
    h = polar_set.gauge_many(P.A)
    return float(np.max(h / P.b - 1.0))


def check_control_invariance(sys, S, n_samples: int = 1000, polar=None, seed: int = 0,
                             tol: float = 1e-6) -> InvarianceReport:
    """Test control invariance of ``S`` and its inclusion in the state set.

    Two independent tests are run: a primal one that minimizes the gauge of
    ``A x + B u`` over ``u`` at sampled boundary points ``x``, and a dual
    one that compares gauges of the polar set along ``C' y`` and ``E' y``.
    ``polar`` may pass a known polar of ``S`` for the dual test. Switched
    systems are checked mode by mode (worst case reported).
    """
    rng = np.random.default_rng(seed)
    polar_set = S.polar() if polar is None else polar
    systems = sys.systems if isinstance(sys, SwitchedControlSystem) else [sys]
    D = _sphere(rng, n_samples, S.n)
    g = S.gauge_many(D)
    ok = np.isfinite(g) & (g > 1e-12)
    boundary = D[ok] / g[ok, None]
    primal = dual = -np.inf
    for s in systems:
        primal = max(primal, _primal_residual(s.A, s.B, S, boundary))
        dual = max(dual, _dual_residual(reduce_to_algebraic(s), polar_set, rng, n_samples))
    cont = _containment_residual(S, systems[0].X, polar_set)
    return InvarianceReport(max(primal, 0.0), max(dual, 0.0), max(cont, 0.0), tol)


def autonomous_invariance_gaps(A, S, n_samples: int = 500, seed: int = 0) -> dict:
    """Worst violation of each of the four equivalent invariance inequalities.

    With ``S°`` the polar of ``S`` and ``y``, ``x`` sampled on the sphere:
    ``h(S, A'y) <= h(S, y)``, ``g(S, x) >= g(S, Ax)``,
    ``g(S°, A'y) <= g(S°, y)`` and ``h(S°, x) >= h(S°, Ax)``, where ``h`` is
    the support function and ``g`` the gauge.
    """
    A = np.asarray(A, dtype=float)
    rng = np.random.default_rng(seed)
    P = S.polar()
    Y = _sphere(rng, n_samples, S.n)
    X = _sphere(rng, n_samples, S.n)

    def gap(lo, hi):
        d = np.where(np.isinf(hi), -np.inf, lo - hi)
        return float(np.max(d))

    return {
        "support": gap(S.support_many(Y @ A), S.support_many(Y)),
        "gauge": gap(S.gauge_many(X @ A.T), S.gauge_many(X)),
        "polar_gauge": gap(P.gauge_many(Y @ A), P.gauge_many(Y)),
        "polar_support": gap(P.support_many(X @ A.T), P.support_many(X)),
    }
