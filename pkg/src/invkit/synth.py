"""Synthesis of control invariant piecewise semi-ellipsoids by semidefinite programming.

The decision variables are the matrices ``Q_i`` of the *polar-side* set,
whose gauge is the support function of the invariant set ``S``. For the
reduced system ``E x+ = C x`` invariance of ``S`` reads
``g(C' y) <= g(E' y)`` for every ``y``, where ``g`` is that gauge. On each
cone ``{y : C' y in P_i, E' y in P_j}`` this is copositivity of
``E Q_j E' - C Q_i C'``, which is encoded with a sufficient LMI.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .certify import encode_copositivity
from .conic import Affine, ConicProgram, Solution, default_backend
from .errors import DimensionMismatch, EmptyPolyhedron, Infeasible, InvkitError, NumericalFailure
from .integrate import integrate_quadratic
from .linalg import psd_part
from .partition import ConicPartition, facet_cones
from .polyhedra import HPolyhedron, dim, polar_polytope, remove_redundancy
from .pwse import PiecewiseSemiEllipsoid
from .systems import (InvarianceReport, LinearControlSystem, SwitchedControlSystem,
                      check_control_invariance, reduce_to_algebraic, viability_kernel)

MEMBER_TOL = 1e-9


class EmptyIntersectionEverywhere(InvkitError):
    """No invariance block could be generated (suspicious input)."""


def inner_radius(X: HPolyhedron) -> float:
    """Radius of the largest origin-centred ball inside ``X``."""
    P = remove_redundancy(X)
    return float(np.min(P.b / np.linalg.norm(P.A, axis=1)))


@dataclass
class SynthesisProblem:
    """System, partition of the dual space and integration domain of the objective.

    ``ball_fraction`` asks the set to contain the ball of radius
    ``ball_fraction * inner_radius(X)`` around the origin, which rules out
    the trivial solution ``Q = 0``. ``objective_polytope`` defaults to ``X``.
    """

    system: object
    partition: ConicPartition
    objective_polytope: HPolyhedron | None = None
    ball_fraction: float = 1e-2

    def __post_init__(self):
        if self.partition.n != self.system.n:
            raise DimensionMismatch("partition and state dimensions differ")
        if self.objective_polytope is None:
            self.objective_polytope = self.system.X
        if self.objective_polytope.n != self.system.n:
            raise DimensionMismatch("objective polytope has the wrong dimension")
        if self.objective_polytope.is_empty():
            raise EmptyPolyhedron("the objective polytope is empty")
        if not self.objective_polytope.is_bounded():
            raise ValueError("the objective polytope must be bounded")

    @property
    def modes(self) -> list:
        if isinstance(self.system, SwitchedControlSystem):
            return self.system.systems
        return [self.system]

    @property
    def X(self) -> HPolyhedron:
        return self.system.X


def partition_from_iterate(system, k: int = 0) -> ConicPartition:
    """Facet cones of the polar of the ``k``-th viability iterate.

    ``k = 0`` uses the state set itself (the quadrants for a box). Positive
    ``k`` needs a single-mode system; when the iteration converges earlier
    the fixed point is used.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        P = system.X
    else:
        if not isinstance(system, LinearControlSystem):
            raise ValueError("viability iterates are only defined for single-mode systems")
        res = viability_kernel(system, max_iter=k)
        P = res.iterates[min(k, len(res.iterates) - 1)]
    return facet_cones(polar_polytope(P))


@dataclass
class Assembled:
    """A program together with handles to the expressions of interest."""

    program: ConicProgram
    Q: list
    u: dict
    blocks: dict = field(default_factory=dict)
    objective_weights: list = field(default_factory=list)
    margin: Affine | None = None


def invariance_cones(E, C, partition: ConicPartition) -> dict:
    """Full-dimensional cones ``{y : C' y in P_i, E' y in P_j}`` keyed by ``(i, j)``.

    Lower-dimensional cones are skipped: the full-dimensional ones already
    cover the whole space, and the inequality extends to the rest by
    continuity.
    """
    r = E.shape[0]
    out = {}
    for i, j in itertools.product(range(partition.m), repeat=2):
        rows = np.vstack([partition.pieces[i].A @ C.T, partition.pieces[j].A @ E.T])
        K = HPolyhedron(rows, n=r)
        if dim(K) == r:
            out[(i, j)] = K
    return out


def _add_invariance(prog, Q, partition, sys, tag):
    alg = reduce_to_algebraic(sys)
    E, C = alg.E, alg.C
    if alg.r == 0:
        return {}
    cones = invariance_cones(E, C, partition)
    if not cones:
        raise EmptyIntersectionEverywhere("no invariance constraint could be generated")
    blocks = {}
    for (i, j), K in cones.items():
        M = E @ Q[j] @ E.T - C @ Q[i] @ C.T
        blocks[(tag, i, j)] = encode_copositivity(M, K, prog, label=f"inv{tag}[{i},{j}]")
    return blocks


def ball_margin(prob: SynthesisProblem) -> float:
    """Squared radius of the ball the set must contain."""
    return (prob.ball_fraction * inner_radius(prob.X)) ** 2


def _assemble(prob: SynthesisProblem, systems, margin: bool = False) -> Assembled:
    part = prob.partition
    n = part.n
    prog = ConicProgram()
    Q = [prog.symmetric(n, f"Q{i}", psd=True) for i in range(part.m)]
    blocks = {}
    # the set contains a ball: Q_i - eps I copositive on P_i; with ``margin``
    # eps becomes a variable t and the program maximizes it instead
    eps = prog.scalar("t") if margin else ball_margin(prob)
    if margin or eps > 0:
        for i, P in enumerate(part.pieces):
            blocks[("ball", i)] = encode_copositivity(Q[i] - eps * np.eye(n), P, prog, label=f"ball[{i}]")
    for tag, sys in enumerate(systems):
        blocks.update(_add_invariance(prog, Q, part, sys, tag))
    # support of S at each vertex of the polar of X is at most one
    V = polar_polytope(prob.X).vertices()
    for k, v in enumerate(V):
        for i, P in enumerate(part.pieces):
            if P.contains(v, MEMBER_TOL * max(1.0, np.linalg.norm(v))):
                prog.add_le(v @ Q[i] @ v - 1.0, f"state[{k},{i}]")
    iu = np.triu_indices(n)
    u = {}
    for (i, j) in part.neighbors:
        nij = part.normals[(i, j)]
        u[(i, j)] = uij = prog.vector(n, f"u{i},{j}")
        jump = uij[:, None] @ nij[None, :] + nij[:, None] @ uij[None, :]
        prog.add_eq((Q[i] - Q[j] - jump)[iu], f"continuity[{i},{j}]")
        G = part.pair_face(i, j)
        prog.add_le(G @ ((Q[j] - Q[i]) @ nij), f"convexity[{i},{j}]")
    if margin:
        prog.maximize(eps)
        return Assembled(prog, Q, u, blocks, [], eps)
    W = integrate_quadratic(prob.objective_polytope, part)
    obj = Affine(0.0)
    for Ci, Qi in zip(W, Q):
        obj = obj + Qi.dot(Ci)
    prog.maximize(obj)
    return Assembled(prog, Q, u, blocks, W)


def assemble(prob: SynthesisProblem) -> Assembled:
    """Semidefinite program whose feasible points are invariant polar-side sets."""
    if isinstance(prob.system, SwitchedControlSystem):
        return assemble_switched(prob)
    if not isinstance(prob.system, LinearControlSystem):
        raise TypeError("expected a LinearControlSystem")
    return _assemble(prob, [prob.system])


def assemble_switched(prob: SynthesisProblem) -> Assembled:
    """As ``assemble`` with one family of invariance blocks per mode."""
    return _assemble(prob, prob.modes)


def assemble_margin(prob: SynthesisProblem) -> Assembled:
    """Feasibility version: same constraints, maximize the squared ball radius ``t``.

    Always feasible (``Q = 0``, ``t = 0``), and the synthesis program is
    feasible exactly when the optimal ``t`` reaches ``ball_margin(prob)``.
    """
    return _assemble(prob, prob.modes, margin=True)


def largest_margin(prob: SynthesisProblem, backend=None) -> float:
    asm = assemble_margin(prob)
    return float((backend or default_backend()).solve(asm.program)[asm.margin])


@dataclass
class SynthesisResult:
    """Solution of the synthesis program.

    ``polar_side`` has gauge equal to the support function of the invariant
    set ``S``; ``report`` holds the independent invariance and inclusion
    checks run on ``S``.
    """

    polar_side: PiecewiseSemiEllipsoid
    S: PiecewiseSemiEllipsoid
    status: str
    objective: float
    report: InvarianceReport
    solution: Solution
    assembled: Assembled

    @property
    def Q(self) -> list:
        return self.polar_side.Q


def enforce_continuity(Q, partition: ConicPartition, u=None, return_u: bool = False):
    """Smallest correction of ``Q`` (and the jump vectors ``u``) making every
    ``Q_i - Q_j = u n' + n u'`` hold to rounding.

    Solver output meets these equalities only to its feasibility tolerance,
    which matters once the polar inverts nearly singular pieces.
    """
    n, m = partition.n, partition.m
    pairs = list(partition.neighbors)
    if not pairs:
        out = [np.array(q, dtype=float) for q in Q]
        return (out, {}) if return_u else out
    iu = np.triu_indices(n)
    t = len(iu[0])
    z = np.concatenate([np.asarray(q)[iu] for q in Q]
                       + [np.asarray(u[p]) if u is not None else np.zeros(n) for p in pairs])
    M = np.zeros((len(pairs) * t, z.size))
    for k, (i, j) in enumerate(pairs):
        nij = partition.normals[(i, j)]
        for r, (a, b) in enumerate(zip(*iu)):
            row = k * t + r
            M[row, i * t + r] = 1.0
            M[row, j * t + r] = -1.0
            base = m * t + k * n
            M[row, base + a] -= nij[b]
            M[row, base + b] -= nij[a]
    dz = np.linalg.lstsq(M, -(M @ z), rcond=None)[0]
    z = z + dz
    out = []
    for i in range(m):
        q = np.zeros((n, n))
        q[iu] = z[i * t:(i + 1) * t]
        out.append(q + np.triu(q, 1).T)
    if return_u:
        base = m * t
        return out, {p: z[base + k * n:base + (k + 1) * n] for k, p in enumerate(pairs)}
    return out


def _clean(partition, Q, u, iters: int = 100, tol: float = 1e-12) -> list:
    """Alternate projections onto the PSD cone and the continuity equalities.

    The solver meets both only to its tolerance; the polar inverts nearly
    singular pieces, so both are restored to rounding level here.
    """
    for _ in range(iters):
        Q = [psd_part(q) for q in Q]
        Q, u = enforce_continuity(Q, partition, u, return_u=True)
        worst = max(-np.linalg.eigvalsh(q)[0] / max(1.0, np.abs(q).max()) for q in Q)
        if worst <= tol:
            break
    return Q


def solve(prob: SynthesisProblem, backend=None, n_check: int = 1000) -> SynthesisResult:
    """Assemble, solve and verify.

    Raises ``Infeasible`` when no set over this partition is certifiable
    with the first-level copositivity condition (this does not prove that no
    invariant set exists) and ``NumericalFailure`` when the solver fails.
    """
    backend = backend or default_backend()
    asm = assemble(prob)
    try:
        sol = backend.solve(asm.program)
    except NumericalFailure:
        # nearly infeasible programs stall the solver; settle feasibility
        # with the well-posed margin program
        t, eps = largest_margin(prob, backend), ball_margin(prob)
        if t < eps * (1 - 1e-6):
            raise Infeasible(f"largest certifiable ball has squared radius {t:.3e} < {eps:.3e}") from None
        raise
    Q = _clean(prob.partition, [sol[q] for q in asm.Q], {k: sol[v] for k, v in asm.u.items()})
    polar_side = PiecewiseSemiEllipsoid(prob.partition, Q)
    S = polar_side.polar()
    report = check_control_invariance(prob.system, S, n_samples=n_check, polar=polar_side)
    return SynthesisResult(polar_side, S, "optimal", sol.objective, report, sol, asm)
