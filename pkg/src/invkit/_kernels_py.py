"""Pure numpy implementations of the inner loops.

These are the reference versions; ``_kernels.pyx`` mirrors every function
with the same signature and is preferred at import when it was compiled.
"""

import numpy as np


def dd_adjacent_pairs(Z, pos, neg, min_common):
    """Adjacent (positive, negative) ray pairs for one double-description step.

    ``Z`` is a boolean (rays x constraints) incidence matrix. Rays ``p`` and
    ``q`` are adjacent iff their common zero set has at least ``min_common``
    constraints and no third ray's zero set contains it.
    """
    Z = np.asarray(Z, dtype=bool)
    pos = np.asarray(pos, dtype=np.intp)
    neg = np.asarray(neg, dtype=np.intp)
    out_p, out_q = [], []
    if pos.size == 0 or neg.size == 0:
        return np.zeros(0, np.intp), np.zeros(0, np.intp)
    notZ = ~Z
    for p in pos:
        common = Z[p] & Z[neg]
        counts = common.sum(axis=1)
        cand = np.nonzero(counts >= min_common)[0]
        if cand.size == 0:
            continue
        c = common[cand]
        # contained[k, r]: common set of candidate k is inside Z[r]
        contained = ~np.any(c[:, None, :] & notZ[None, :, :], axis=2)
        contained[:, p] = False
        contained[np.arange(cand.size), neg[cand]] = False
        ok = ~contained.any(axis=1)
        for k in np.nonzero(ok)[0]:
            out_p.append(p)
            out_q.append(neg[cand[k]])
    return np.asarray(out_p, dtype=np.intp), np.asarray(out_q, dtype=np.intp)


def fm_combine(A, b, col, tol):
    """One Fourier-Motzkin elimination of column ``col`` from ``A x <= b``.

    Returns the new ``(A, b)`` with the column removed. Rows whose
    coefficient is within ``tol`` of zero pass through unchanged.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = A[:, col]
    P = np.nonzero(c > tol)[0]
    N = np.nonzero(c < -tol)[0]
    Zr = np.nonzero(np.abs(c) <= tol)[0]
    rows = [A[Zr]]
    rhs = [b[Zr]]
    if P.size and N.size:
        cp = c[P][:, None, None]
        cn = -c[N][None, :, None]
        newA = cn * A[P][:, None, :] + cp * A[N][None, :, :]
        newb = cn[..., 0] * b[P][:, None] + cp[..., 0] * b[N][None, :]
        rows.append(newA.reshape(-1, A.shape[1]))
        rhs.append(newb.reshape(-1))
    A2 = np.vstack(rows)
    b2 = np.concatenate(rhs)
    A2 = np.delete(A2, col, axis=1)
    return A2, b2


def locate_pieces(X, normals, ptr, tol):
    """Index of the first piece containing each row of ``X`` (-1 if none).

    Piece ``i`` is ``{x : normals[k] @ x <= tol * |x|, ptr[i] <= k < ptr[i+1]}``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    normals = np.asarray(normals, dtype=float).reshape(-1, X.shape[1])
    ptr = np.asarray(ptr, dtype=np.intp)
    m = ptr.size - 1
    out = np.full(X.shape[0], -1, dtype=np.intp)
    if normals.shape[0]:
        vals = X @ normals.T
    else:
        vals = np.zeros((X.shape[0], 0))
    slack = tol * np.linalg.norm(X, axis=1)
    for i in range(m):
        seg = vals[:, ptr[i]:ptr[i + 1]]
        inside = np.all(seg <= slack[:, None], axis=1) & (out < 0)
        out[inside] = i
    return out


def simplex_second_moments(S):
    """Sum over simplices of the second-moment matrix ``int x x^T dx``.

    ``S`` has shape (count, n+1, n): the vertices of each simplex.
    """
    S = np.asarray(S, dtype=float)
    if S.shape[0] == 0:
        n = S.shape[2] if S.ndim == 3 else 0
        return np.zeros((n, n))
    n = S.shape[2]
    edges = S[:, 1:, :] - S[:, :1, :]
    vol = np.abs(np.linalg.det(edges)) / _factorial(n)
    tot = S.sum(axis=1)
    outer = np.einsum("kvi,kvj->kij", S, S) + np.einsum("ki,kj->kij", tot, tot)
    coef = vol / ((n + 1) * (n + 2))
    return np.einsum("k,kij->ij", coef, outer)


def _factorial(n):
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out
