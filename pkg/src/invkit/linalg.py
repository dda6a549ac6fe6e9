"""Small dense symmetric linear algebra.

Every matrix handled here is tiny (n <= ~6 in practice), so robustness wins
over asymptotics: eigendecompositions go through LAPACK's symmetric
tridiagonal QR (``numpy.linalg.eigh``) and subspaces through the SVD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-10
DEFAULT_RANK_TOL = 1e-9


def sym(M) -> np.ndarray:
    """Return the symmetric matrix defined by the upper triangle of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    U = np.triu(M)
    return U + np.triu(M, 1).T


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Immutable symmetric matrix stored through its upper triangle.

    ``SymmetricMatrix(M)`` keeps only ``triu(M)``; the lower triangle is
    rebuilt from it, so symmetry holds by construction.
    """

    upper: np.ndarray

    def __init__(self, M):
        A = sym(M)
        A.setflags(write=False)
        object.__setattr__(self, "upper", np.triu(A))
        object.__setattr__(self, "_full", A)

    @property
    def n(self) -> int:
        return self._full.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._full

    def __array__(self, dtype=None, copy=None):
        return self._full if dtype is None else self._full.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._full, other._full)

    def __hash__(self):
        return hash(self._full.tobytes())

    def __repr__(self):
        return f"SymmetricMatrix({self._full.tolist()!r})"

    def is_psd(self, tol: float = 1e-9) -> bool:
        return is_psd(self._full, tol)


def _as_sym(M) -> np.ndarray:
    if isinstance(M, SymmetricMatrix):
        return M.array
    return sym(M)


def eig_sym(M):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of ``M``."""
    w, V = np.linalg.eigh(_as_sym(M), UPLO="U")
    return w, V


def is_psd(M, tol: float = 1e-9) -> bool:
    """True iff the smallest eigenvalue is >= ``-tol * max(1, ||M||)``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    A = _as_sym(M)
    w = np.linalg.eigvalsh(A)
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    return bool(w[0] >= -tol * scale)


def psd_part(M) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero)."""
    w, V = eig_sym(M)
    return sym((V * np.maximum(w, 0.0)) @ V.T)


def pseudoinverse(M, rank_tol: float = DEFAULT_RANK_TOL, psd_tol: float = 1e-8) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a PSD matrix.

    Eigenvalues below ``rank_tol * lambda_max`` count as zero. Non-PSD input
    (beyond ``psd_tol``) is a caller bug and raises ``ValueError``.
    """
    A = _as_sym(M)
    w, V = np.linalg.eigh(A, UPLO="U")
    lam_max = max(float(w[-1]), 0.0) if w.size else 0.0
    if w.size and w[0] < -psd_tol * max(1.0, lam_max):
        raise ValueError(f"pseudoinverse expects a PSD matrix (min eigenvalue {w[0]:.3e})")
    keep = w > rank_tol * lam_max if lam_max > 0 else np.zeros_like(w, dtype=bool)
    Vk = V[:, keep]
    P = (Vk / w[keep]) @ Vk.T
    return sym(P)


def numerical_rank(M, tol: float = 1e-9) -> int:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def range_basis(vectors, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (rows) of the span of ``vectors`` (given as rows)."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.size == 0:
        return np.zeros((0, V.shape[1] if V.ndim == 2 else 0))
    _, s, Vt = np.linalg.svd(V, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, V.shape[1]))
    r = int(np.sum(s > tol * s[0]))
    return Vt[:r]


def null_basis(M, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (rows) of ``{x : M x = 0}``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return Vt[r:]


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of R^n given by an orthonormal basis (one vector per row)."""

    n: int
    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float).reshape(-1, self.n)
        if B.shape[0]:
            G = B @ B.T
            if not np.allclose(G, np.eye(B.shape[0]), atol=ORTHO_TOL):
                raise ValueError("subspace basis must be orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @classmethod
    def span(cls, vectors, n: int | None = None, tol: float = 1e-9) -> "Subspace":
        V = np.asarray(vectors, dtype=float)
        if n is None:
            n = V.shape[-1]
        V = V.reshape(-1, n)
        return cls(n, range_basis(V, tol) if V.size else np.zeros((0, n)))

    @classmethod
    def image(cls, M, tol: float = 1e-9) -> "Subspace":
        """Column space of ``M``."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return cls.span(M.T, n=M.shape[0], tol=tol)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def __repr__(self):
        return f"Subspace(n={self.n}, dim={self.dim})"


def projection_matrix(S: Subspace) -> np.ndarray:
    """Orthogonal projector onto ``S``."""
    B = S.basis
    return sym(B.T @ B) if B.shape[0] else np.zeros((S.n, S.n))


def orthogonal_complement(S: Subspace) -> Subspace:
    if S.dim == 0:
        return Subspace.full(S.n)
    if S.dim == S.n:
        return Subspace(S.n, np.zeros((0, S.n)))
    return Subspace(S.n, null_basis(S.basis))
