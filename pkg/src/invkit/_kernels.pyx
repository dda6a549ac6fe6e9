# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the inner loops in ``_kernels_py``.

Signatures and output ordering match the pure-Python module exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def dd_adjacent_pairs(Z, pos, neg, Py_ssize_t min_common):
    cdef const cnp.uint8_t[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.uint8)
    cdef const cnp.intp_t[::1] P = np.ascontiguousarray(pos, dtype=np.intp)
    cdef const cnp.intp_t[::1] N = np.ascontiguousarray(neg, dtype=np.intp)
    cdef Py_ssize_t R = Zv.shape[0], K = Zv.shape[1]
    cdef Py_ssize_t a, bb, r, k, p, q, cnt
    cdef bint found, inside
    cdef cnp.uint8_t[::1] common = np.zeros(K, dtype=np.uint8)
    out_p = []
    out_q = []
    for a in range(P.shape[0]):
        p = P[a]
        for bb in range(N.shape[0]):
            q = N[bb]
            cnt = 0
            for k in range(K):
                common[k] = Zv[p, k] & Zv[q, k]
                cnt += common[k]
            if cnt < min_common:
                continue
            found = False
            for r in range(R):
                if r == p or r == q:
                    continue
                inside = True
                for k in range(K):
                    if common[k] and not Zv[r, k]:
                        inside = False
                        break
                if inside:
                    found = True
                    break
            if not found:
                out_p.append(p)
                out_q.append(q)
    return np.asarray(out_p, dtype=np.intp), np.asarray(out_q, dtype=np.intp)


def fm_combine(A, b, Py_ssize_t col, double tol):
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=float)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=float)
    cdef Py_ssize_t m = Av.shape[0], n = Av.shape[1]
    cdef Py_ssize_t i, j, k, t, row, npos = 0, nneg = 0, nzero = 0
    cdef double cp, cn
    for i in range(m):
        if Av[i, col] > tol:
            npos += 1
        elif Av[i, col] < -tol:
            nneg += 1
        else:
            nzero += 1
    out = np.empty((nzero + npos * nneg, n - 1), dtype=float)
    outb = np.empty(nzero + npos * nneg, dtype=float)
    cdef double[:, ::1] O = out
    cdef double[::1] Ob = outb
    row = 0
    for i in range(m):
        if fabs(Av[i, col]) <= tol:
            t = 0
            for k in range(n):
                if k != col:
                    O[row, t] = Av[i, k]
                    t += 1
            Ob[row] = bv[i]
            row += 1
    for i in range(m):
        cp = Av[i, col]
        if cp <= tol:
            continue
        for j in range(m):
            cn = -Av[j, col]
            if cn <= tol:
                continue
            t = 0
            for k in range(n):
                if k != col:
                    O[row, t] = cn * Av[i, k] + cp * Av[j, k]
                    t += 1
            Ob[row] = cn * bv[i] + cp * bv[j]
            row += 1
    return out, outb


def locate_pieces(X, normals, ptr, double tol):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    cdef Py_ssize_t N = Xv.shape[0], n = Xv.shape[1]
    cdef const double[:, ::1] Nv = np.ascontiguousarray(np.asarray(normals, dtype=float).reshape(-1, n))
    cdef const cnp.intp_t[::1] Pv = np.ascontiguousarray(ptr, dtype=np.intp)
    cdef Py_ssize_t m = Pv.shape[0] - 1
    out = np.full(N, -1, dtype=np.intp)
    cdef cnp.intp_t[::1] O = out
    cdef Py_ssize_t s, i, k, d
    cdef double nrm, v, slack
    cdef bint ok
    for s in range(N):
        nrm = 0.0
        for d in range(n):
            nrm += Xv[s, d] * Xv[s, d]
        slack = tol * sqrt(nrm)
        for i in range(m):
            ok = True
            for k in range(Pv[i], Pv[i + 1]):
                v = 0.0
                for d in range(n):
                    v += Nv[k, d] * Xv[s, d]
                if v > slack:
                    ok = False
                    break
            if ok:
                O[s] = i
                break
    return out


cdef double _det(double[:, ::1] M, Py_ssize_t n):
    cdef Py_ssize_t i, j, k, piv
    cdef double det = 1.0, best, f, tmp
    for k in range(n):
        piv = k
        best = fabs(M[k, k])
        for i in range(k + 1, n):
            if fabs(M[i, k]) > best:
                best = fabs(M[i, k])
                piv = i
        if best == 0.0:
            return 0.0
        if piv != k:
            for j in range(n):
                tmp = M[k, j]
                M[k, j] = M[piv, j]
                M[piv, j] = tmp
            det = -det
        det *= M[k, k]
        for i in range(k + 1, n):
            f = M[i, k] / M[k, k]
            for j in range(k, n):
                M[i, j] -= f * M[k, j]
    return det


def simplex_second_moments(S):
    S_arr = np.asarray(S, dtype=float)
    if S_arr.shape[0] == 0:
        nn = S_arr.shape[2] if S_arr.ndim == 3 else 0
        return np.zeros((nn, nn))
    cdef const double[:, :, ::1] Sv = np.ascontiguousarray(S_arr)
    cdef Py_ssize_t cnt = Sv.shape[0], n = Sv.shape[2]
    out = np.zeros((n, n), dtype=float)
    cdef double[:, ::1] O = out
    cdef double[:, ::1] E = np.empty((n, n), dtype=float)
    cdef double[::1] tot = np.empty(n, dtype=float)
    cdef Py_ssize_t s, v, i, j
    cdef double fact = 1.0, vol, coef, acc
    for i in range(2, n + 1):
        fact *= i
    for s in range(cnt):
        for i in range(n):
            for j in range(n):
                E[i, j] = Sv[s, i + 1, j] - Sv[s, 0, j]
        vol = fabs(_det(E, n)) / fact
        coef = vol / ((n + 1) * (n + 2))
        for j in range(n):
            acc = 0.0
            for v in range(n + 1):
                acc += Sv[s, v, j]
            tot[j] = acc
        for i in range(n):
            for j in range(n):
                acc = tot[i] * tot[j]
                for v in range(n + 1):
                    acc += Sv[s, v, i] * Sv[s, v, j]
                O[i, j] += coef * acc
    return out
