"""Copositivity of a quadratic form over a polyhedral cone.

A symmetric ``Q`` is copositive on ``{x : a_k' x >= 0}`` whenever
``Q - sum_{k<l} lam_kl (a_k a_l' + a_l a_k')`` is PSD for some ``lam >= 0``:
on the cone every product ``(a_k' x)(a_l' x)`` is nonnegative. The
condition is sufficient only. Rows may be given in either sign convention
since flipping every row leaves the products unchanged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .conic import Affine, ConicProgram
from .linalg import is_psd, sym
from .polyhedra import HPolyhedron


@dataclass
class CopositivityCertificate:
    lam: dict          # (k, l), k < l -> multiplier
    psd_witness: np.ndarray
    rows: np.ndarray

    def check(self, Q, tol: float = 1e-7) -> bool:
        """Multipliers nonnegative and the witness PSD and consistent with ``Q``."""
        if any(v < -1e-10 for v in self.lam.values()):
            return False
        W = sym(Q) - _combination(self.rows, self.lam)
        return bool(np.max(np.abs(W - self.psd_witness)) <= tol and is_psd(self.psd_witness, tol))


@dataclass
class CopositivityBlock:
    """Handle returned by ``encode_copositivity``; reads the certificate off a solution."""

    rows: np.ndarray
    lam: dict          # (k, l) -> Affine scalar
    witness: Affine

    def certificate(self, solution) -> CopositivityCertificate:
        lam = {p: float(solution[e]) for p, e in self.lam.items()}
        return CopositivityCertificate(lam, sym(solution[self.witness]), self.rows)


def _combination(rows, lam):
    n = rows.shape[1] if rows.ndim == 2 else 0
    out = np.zeros((n, n))
    for (k, l), v in lam.items():
        out += v * (np.outer(rows[k], rows[l]) + np.outer(rows[l], rows[k]))
    return out


def cone_rows(P: HPolyhedron) -> np.ndarray:
    """Irredundant unit normals of a cone (rows, either orientation)."""
    if not P.is_cone:
        raise ValueError("copositivity is encoded over cones only")
    if P.nrows == 0:
        return np.zeros((0, P.n))
    return P.facet_rows().A


def encode_copositivity(Q: Affine, P: HPolyhedron, program: ConicProgram, level: int = 1,
                        label: str = "") -> CopositivityBlock:
    """Add the sufficient LMI for ``x' Q x >= 0`` on ``P`` to ``program``.

    One nonnegative multiplier per unordered pair of distinct rows and one
    PSD block. With fewer than two rows this is a plain PSD constraint.
    """
    if level != 1:
        raise ValueError("only the first level of the copositivity hierarchy is implemented")
    rows = cone_rows(P)
    lam = {}
    W = Q
    for k, l in itertools.combinations(range(rows.shape[0]), 2):
        v = program.scalar(f"lam{label}[{k},{l}]", nonneg=True)
        lam[(k, l)] = v
        W = W - v * (np.outer(rows[k], rows[l]) + np.outer(rows[l], rows[k]))
    program.add_psd(W, label or "copositivity")
    return CopositivityBlock(rows, lam, W)


def certify_copositive(Q, P: HPolyhedron, backend=None):
    """Search for a first-level certificate; None when the LMI is infeasible."""
    from .conic import default_backend
    from .errors import Infeasible

    Q = sym(Q)
    prog = ConicProgram()
    block = encode_copositivity(Affine(Q), P, prog)
    try:
        sol = (backend or default_backend()).solve(prog)
    except Infeasible:
        return None
    return block.certificate(sol)


def verify_copositivity_pointwise(Q, P: HPolyhedron, n_samples: int = 10_000, seed: int = 0) -> float:
    """Smallest ``x' Q x`` over random unit-norm points of the cone ``P``.

    Points are random nonnegative combinations of the cone generators
    (including both signs of lineality directions), together with the
    generators themselves.
    """
    Q = sym(Q)
    G = P.cone_generators()
    if G.shape[0] == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    W = rng.exponential(size=(n_samples, G.shape[0]))
    W *= rng.random((n_samples, G.shape[0])) < 0.7
    X = np.vstack([G, W @ G])
    nr = np.linalg.norm(X, axis=1)
    X = X[nr > 1e-12] / nr[nr > 1e-12, None]
    return float(np.min(np.einsum("ki,ij,kj->k", X, Q, X)))
