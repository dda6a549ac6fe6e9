"""A small conic program representation and its Clarabel backend.

Programs are built from affine expressions over scalar variables. A
symmetric matrix variable is a matrix expression over its upper-triangle
scalars; positive semidefiniteness is imposed as a separate PSD block, so
every cone in the program is one of: zero (equalities), nonnegative
orthant (inequalities and sign constraints) and PSD triangle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import Infeasible, NumericalFailure, Unbounded

FEAS_TOL = 1e-7
SQRT2 = math.sqrt(2.0)


class Affine:
    """Affine expression ``const + sum_v coef[v] * x_v`` of any array shape."""

    __slots__ = ("const", "coef")
    __array_ufunc__ = None  # let numpy defer to the reflected operators

    def __init__(self, const, coef=None):
        self.const = np.asarray(const, dtype=float)
        self.coef = {} if coef is None else coef

    @property
    def shape(self):
        return self.const.shape

    @classmethod
    def variable(cls, index: int) -> "Affine":
        return cls(0.0, {index: np.array(1.0)})

    def _map(self, f):
        return Affine(f(self.const), {v: f(c) for v, c in self.coef.items()})

    def __add__(self, other):
        if not isinstance(other, Affine):
            return Affine(self.const + np.asarray(other, dtype=float), dict(self.coef))
        shape = np.broadcast_shapes(self.shape, other.shape)
        coef = {v: np.broadcast_to(c, shape).copy() for v, c in self.coef.items()}
        for v, c in other.coef.items():
            coef[v] = coef[v] + c if v in coef else np.broadcast_to(c, shape).copy()
        return Affine(self.const + other.const, coef)

    __radd__ = __add__

    def __neg__(self):
        return self._map(lambda a: -a)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        k = np.asarray(k, dtype=float)
        return self._map(lambda a: a * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1.0 / k)

    def __matmul__(self, M):
        M = np.asarray(M, dtype=float)
        return self._map(lambda a: a @ M)

    def __rmatmul__(self, M):
        M = np.asarray(M, dtype=float)
        return self._map(lambda a: M @ a)

    def __getitem__(self, key):
        return self._map(lambda a: a[key])

    @property
    def T(self):
        return self._map(lambda a: a.T)

    def sum(self):
        return self._map(np.sum)

    def dot(self, W):
        """Frobenius inner product with a constant array."""
        W = np.asarray(W, dtype=float)
        return self._map(lambda a: np.sum(a * W))

    def value(self, x) -> np.ndarray:
        out = self.const.copy()
        for v, c in self.coef.items():
            out = out + c * x[v]
        return out

    def flat(self, nvars: int):
        """(constant vector, sparse coefficient matrix) of the flattened expression."""
        size = int(np.prod(self.shape)) if self.shape else 1
        rows, cols, vals = [], [], []
        for v, c in self.coef.items():
            c = np.broadcast_to(c, self.shape).reshape(-1)
            nz = np.nonzero(c)[0]
            rows.append(nz)
            cols.append(np.full(nz.size, v))
            vals.append(c[nz])
        if rows:
            G = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, nvars))
        else:
            G = sp.csc_matrix((size, nvars))
        return self.const.reshape(-1), G


@dataclass
class ConicProgram:
    """Maximize a linear objective subject to zero, nonnegative and PSD cones."""

    nvars: int = 0
    names: list = field(default_factory=list)
    nonneg: list = field(default_factory=list)
    equalities: list = field(default_factory=list)
    inequalities: list = field(default_factory=list)  # expr <= 0
    psd_blocks: list = field(default_factory=list)
    objective: Affine = field(default_factory=lambda: Affine(0.0))
    labels: dict = field(default_factory=dict)

    def scalar(self, name: str = "", nonneg: bool = False) -> Affine:
        k = self.nvars
        self.nvars += 1
        self.names.append(name or f"x{k}")
        if nonneg:
            self.nonneg.append(k)
        return Affine.variable(k)

    def vector(self, n: int, name: str = "") -> Affine:
        idx = [self.scalar(f"{name}[{i}]").coef for i in range(n)]
        coef = {}
        for i, c in enumerate(idx):
            (v,) = c
            e = np.zeros(n)
            e[i] = 1.0
            coef[v] = e
        return Affine(np.zeros(n), coef)

    def symmetric(self, n: int, name: str = "", psd: bool = False) -> Affine:
        coef = {}
        for i in range(n):
            for j in range(i, n):
                (v,) = self.scalar(f"{name}[{i},{j}]").coef
                E = np.zeros((n, n))
                E[i, j] = E[j, i] = 1.0
                coef[v] = E
        Q = Affine(np.zeros((n, n)), coef)
        if psd:
            self.add_psd(Q, f"{name} psd")
        return Q

    def add_eq(self, expr: Affine, label: str = ""):
        self.equalities.append((expr, label))

    def add_le(self, expr: Affine, label: str = ""):
        """Elementwise ``expr <= 0``."""
        self.inequalities.append((expr, label))

    def add_psd(self, expr: Affine, label: str = ""):
        if len(expr.shape) != 2 or expr.shape[0] != expr.shape[1]:
            raise ValueError("PSD blocks need square expressions")
        self.psd_blocks.append((expr, label))

    def maximize(self, expr: Affine):
        if expr.shape != ():
            raise ValueError("the objective must be scalar")
        self.objective = expr

    # -- checks ---------------------------------------------------------------

    def residuals(self, x) -> dict:
        """Worst violation of each constraint family at ``x``."""
        x = np.asarray(x, dtype=float)
        eq = max((float(np.max(np.abs(e.value(x)))) for e, _ in self.equalities if e.const.size), default=0.0)
        le = max((float(np.max(e.value(x))) for e, _ in self.inequalities if e.const.size), default=0.0)
        nn = max((float(-x[k]) for k in self.nonneg), default=0.0)
        psd = 0.0
        for e, _ in self.psd_blocks:
            M = e.value(x)
            psd = max(psd, float(-np.linalg.eigvalsh((M + M.T) / 2)[0]))
        return {"equality": eq, "inequality": max(le, 0.0), "sign": max(nn, 0.0), "psd": max(psd, 0.0)}

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        def enc(e: Affine):
            c, G = e.flat(self.nvars)
            G = G.tocoo()
            return {"shape": list(e.shape), "const": c.tolist(),
                    "triplets": [[int(r), int(k), float(v)] for r, k, v in zip(G.row, G.col, G.data)]}

        return {
            "schema": "invkit/conic/1",
            "sense": "maximize",
            "variables": [{"name": nm, "nonneg": k in set(self.nonneg)} for k, nm in enumerate(self.names)],
            "objective": enc(self.objective),
            "constraints": (
                [{"cone": "zero", "label": lb, **enc(e)} for e, lb in self.equalities]
                + [{"cone": "nonpositive", "label": lb, **enc(e)} for e, lb in self.inequalities]
                + [{"cone": "psd", "label": lb, **enc(e)} for e, lb in self.psd_blocks]
            ),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ConicProgram":
        prog = cls()
        for v in d["variables"]:
            prog.scalar(v["name"], v["nonneg"])

        def dec(c):
            shape = tuple(c["shape"])
            const = np.asarray(c["const"], dtype=float).reshape(shape)
            coef = {}
            for r, k, val in c["triplets"]:
                if k not in coef:
                    coef[k] = np.zeros(int(np.prod(shape)) if shape else 1)
                coef[k][r] += val
            return Affine(const, {k: a.reshape(shape) for k, a in coef.items()})

        prog.objective = dec(d["objective"])
        for c in d["constraints"]:
            e = dec(c)
            {"zero": prog.add_eq, "nonpositive": prog.add_le, "psd": prog.add_psd}[c["cone"]](e, c.get("label", ""))
        return prog


@dataclass
class Solution:
    x: np.ndarray
    objective: float
    status: str
    residuals: dict
    info: dict = field(default_factory=dict)

    def __getitem__(self, expr: Affine) -> np.ndarray:
        return expr.value(self.x)


def _svec_rows(n: int):
    """Column-major upper-triangle order with sqrt(2) off-diagonal scaling."""
    idx, scale = [], []
    for j in range(n):
        for i in range(j + 1):
            idx.append(i * n + j)
            scale.append(1.0 if i == j else SQRT2)
    return np.asarray(idx), np.asarray(scale)


class ClarabelBackend:
    """Interior-point backend built on the Clarabel solver.

    Returns a ``Solution`` whose primal residuals are below ``feas_tol`` or
    raises ``Infeasible``, ``Unbounded`` or ``NumericalFailure``.
    """

    name = "clarabel"

    def __init__(self, tol: float = 1e-10, max_iter: int = 500, feas_tol: float = FEAS_TOL, verbose: bool = False):
        self.tol = tol
        self.max_iter = max_iter
        self.feas_tol = feas_tol
        self.verbose = verbose

    def _data(self, prog: ConicProgram):
        import clarabel

        N = prog.nvars
        blocks_A, blocks_b, cones = [], [], []
        eqs = [e for e, _ in prog.equalities if e.const.size]
        if eqs:
            parts = [e.flat(N) for e in eqs]
            c = np.concatenate([p[0] for p in parts])
            G = sp.vstack([p[1] for p in parts])
            # s = b - A x = 0 with b - A x = c + G x
            blocks_A.append(-G)
            blocks_b.append(c)
            cones.append(clarabel.ZeroConeT(c.size))
        les = [e for e, _ in prog.inequalities if e.const.size]
        rows_c, rows_G = [], []
        for e in les:
            c, G = e.flat(N)
            rows_c.append(-c)
            rows_G.append(G)
        if prog.nonneg:
            k = len(prog.nonneg)
            rows_G.append(-sp.csc_matrix((np.ones(k), (np.arange(k), prog.nonneg)), shape=(k, N)))
            rows_c.append(np.zeros(k))
        if rows_c:
            c = np.concatenate(rows_c)
            # s = -expr >= 0 with s = b - A x
            blocks_A.append(sp.vstack(rows_G))
            blocks_b.append(c)
            cones.append(clarabel.NonnegativeConeT(c.size))
        for e, _ in prog.psd_blocks:
            n = e.shape[0]
            c, G = e.flat(N)
            idx, scale = _svec_rows(n)
            blocks_A.append(-sp.diags(scale) @ G[idx])
            blocks_b.append(scale * c[idx])
            cones.append(clarabel.PSDTriangleConeT(n))
        A = sp.vstack(blocks_A).tocsc() if blocks_A else sp.csc_matrix((0, N))
        b = np.concatenate(blocks_b) if blocks_b else np.zeros(0)
        c0, g = prog.objective.flat(N)
        q = -np.asarray(g.todense()).reshape(-1)
        return A, b, q, cones

    def solve(self, prog: ConicProgram) -> Solution:
        import clarabel

        N = prog.nvars
        A, b, q, cones = self._data(prog)
        P = sp.csc_matrix((N, N))
        settings = clarabel.DefaultSettings()
        settings.verbose = self.verbose
        settings.max_iter = self.max_iter
        settings.tol_gap_abs = self.tol
        settings.tol_gap_rel = self.tol
        settings.tol_feas = self.tol
        settings.tol_ktratio = 1e-8
        solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
        sol = solver.solve()
        status = str(sol.status)
        S = clarabel.SolverStatus
        if sol.status in (S.PrimalInfeasible, S.AlmostPrimalInfeasible):
            raise Infeasible(f"the program is infeasible ({status})")
        if sol.status in (S.DualInfeasible, S.AlmostDualInfeasible):
            raise Unbounded(f"the objective is unbounded ({status})")
        x = np.asarray(sol.x, dtype=float)
        if x.size != N or not np.all(np.isfinite(x)):
            raise NumericalFailure(f"solver returned no usable point ({status})")
        res = prog.residuals(x)
        worst = max(res.values())
        if sol.status not in (S.Solved, S.AlmostSolved) or worst > self.feas_tol:
            raise NumericalFailure(
                f"solver status {status}, worst residual {worst:.2e}")
        obj = float(prog.objective.value(x))
        info = {"iterations": sol.iterations, "solve_time": sol.solve_time,
                "primal_objective": -sol.obj_val, "dual_objective": -sol.obj_val_dual}
        return Solution(x, obj, "optimal", res, info)


def default_backend() -> ClarabelBackend:
    return ClarabelBackend()
