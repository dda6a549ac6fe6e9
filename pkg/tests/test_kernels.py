"""The compiled and pure-Python kernels must agree exactly in output order."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invkit import _kernels_py, kernels

IMPLS = kernels.implementations()
PAIRS = [(a, b) for a in IMPLS for b in IMPLS if a < b]


def test_backend_selection():
    assert kernels.BACKEND in IMPLS
    assert "python" in IMPLS


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_fm_combine_hand_example(name):
    K = IMPLS[name]
    # x + u <= 1, -x + u <= 1, -u <= 0 eliminating u
    A = np.array([[1.0, 1.0], [-1.0, 1.0], [0.0, -1.0]])
    b = np.array([1.0, 1.0, 0.0])
    A2, b2 = K.fm_combine(A, b, 1, 1e-12)
    assert A2.tolist() == [[1.0], [-1.0]]
    assert b2.tolist() == [1.0, 1.0]


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_locate_quadrants(name):
    K = IMPLS[name]
    normals = np.array([[-1, 0], [0, -1], [1, 0], [0, -1], [1, 0], [0, 1], [-1, 0], [0, 1]], float)
    ptr = np.array([0, 2, 4, 6, 8])
    X = np.array([[1, 1], [-1, 2], [-1, -1], [2, -3], [0, 0], [1, 0]], float)
    assert K.locate_pieces(X, normals, ptr, 1e-10).tolist() == [0, 1, 2, 3, 0, 0]
    assert K.locate_pieces(X, normals[:4], ptr[:3], 1e-10).tolist() == [0, 1, -1, -1, 0, 0]


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_simplex_moments_unit_square(name):
    K = IMPLS[name]
    S = np.array([[[0, 0], [1, 0], [1, 1]], [[0, 0], [1, 1], [0, 1]]], float)
    M = K.simplex_second_moments(S)
    # int x^2 = 1/3, int xy = 1/4 over the unit square
    assert np.allclose(M, [[1 / 3, 1 / 4], [1 / 4, 1 / 3]], atol=1e-14)
    assert K.simplex_second_moments(np.zeros((0, 3, 2))).shape == (2, 2)


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_dd_adjacency_square(name):
    K = IMPLS[name]
    # four rays of a square cone, zero sets with respect to 4 constraints
    Z = np.array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [1, 0, 0, 1]], dtype=np.uint8)
    p, q = K.dd_adjacent_pairs(Z, np.array([0, 2]), np.array([1, 3]), 1)
    assert list(zip(p.tolist(), q.tolist())) == [(0, 1), (0, 3), (2, 1), (2, 3)]


@pytest.mark.skipif(len(IMPLS) < 2, reason="compiled kernels not built")
@settings(max_examples=80, deadline=None)
@given(st.integers(1, 12), st.integers(2, 6), st.integers(0, 2**31))
def test_fm_backends_agree(m, n, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(0, 4, size=m).astype(float)
    col = int(rng.integers(0, n))
    out = [IMPLS[k].fm_combine(A, b, col, 1e-12) for k in sorted(IMPLS)]
    assert np.array_equal(out[0][0], out[1][0])
    assert np.array_equal(out[0][1], out[1][1])


@pytest.mark.skipif(len(IMPLS) < 2, reason="compiled kernels not built")
@settings(max_examples=80, deadline=None)
@given(st.integers(1, 30), st.integers(1, 10), st.integers(0, 2**31))
def test_dd_backends_agree(R, K, seed):
    rng = np.random.default_rng(seed)
    Z = (rng.random((R, K)) < 0.5).astype(np.uint8)
    idx = rng.permutation(R)
    pos, neg = np.sort(idx[: R // 2]), np.sort(idx[R // 2:])
    mc = int(rng.integers(0, 3))
    out = [IMPLS[k].dd_adjacent_pairs(Z, pos, neg, mc) for k in sorted(IMPLS)]
    assert np.array_equal(out[0][0], out[1][0]) and np.array_equal(out[0][1], out[1][1])


@pytest.mark.skipif(len(IMPLS) < 2, reason="compiled kernels not built")
@settings(max_examples=80, deadline=None)
@given(st.integers(1, 50), st.integers(1, 5), st.integers(1, 4), st.integers(0, 2**31))
def test_locate_and_moments_agree(N, m, n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, n))
    counts = rng.integers(0, 4, size=m)
    ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.intp)
    normals = rng.standard_normal((int(ptr[-1]), n))
    out = [IMPLS[k].locate_pieces(X, normals, ptr, 1e-10) for k in sorted(IMPLS)]
    assert np.array_equal(out[0], out[1])
    S = rng.standard_normal((N, n + 1, n))
    M = [IMPLS[k].simplex_second_moments(S) for k in sorted(IMPLS)]
    assert np.allclose(M[0], M[1], rtol=1e-11, atol=1e-12)


def test_moment_formula_matches_monte_carlo_triangle():
    rng = np.random.default_rng(3)
    T = np.array([[0.0, 0.0], [2.0, 0.5], [0.3, 1.7]])
    w = rng.dirichlet(np.ones(3), size=400_000)
    P = w @ T
    area = abs(np.linalg.det(T[1:] - T[0])) / 2
    mc = area * (P.T @ P) / P.shape[0]
    exact = _kernels_py.simplex_second_moments(T[None])
    assert np.allclose(exact, mc, rtol=1e-2)
    assert math.isclose(area, 0.5 * abs(2 * 1.7 - 0.5 * 0.3))
