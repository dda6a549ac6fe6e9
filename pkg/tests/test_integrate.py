import numpy as np
from scipy.spatial import ConvexHull

from invkit.integrate import integral, integrate_quadratic, second_moment, triangulate
from invkit.partition import orthant_partition, single_piece
from invkit.polyhedra import HPolyhedron


def hull_hrep(V):
    eq = ConvexHull(V).equations
    return HPolyhedron(eq[:, :-1], -eq[:, -1])


def monte_carlo(P, Q, count, rng):
    V = P.vertices()
    lo, hi = V.min(axis=0), V.max(axis=0)
    Z = rng.uniform(lo, hi, (count, P.n))
    inside = P.contains_many(Z, tol=0.0)
    vals = np.einsum("ij,jk,ik->i", Z, Q, Z) * inside
    return np.prod(hi - lo) * vals.mean()


def test_hand_integrals():
    square = HPolyhedron.box([0, 0], [1, 1])
    assert np.isclose(integral([np.eye(2)], square, single_piece(2)), 2 / 3, atol=1e-12)
    big = HPolyhedron.box([-1, -1], [1, 1])
    assert np.isclose(integral([np.eye(2)], big, single_piece(2)), 8 / 3, atol=1e-12)
    # x1 x2 integrates to zero by symmetry
    assert np.isclose(integral([[[0, 1], [1, 0]]], big, single_piece(2)), 0, atol=1e-12)


def test_zero_volume():
    flat = HPolyhedron([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 0, 0])
    assert np.allclose(second_moment(flat), 0)
    assert triangulate(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])).shape[0] == 0


def test_pieces_add_up():
    rng = np.random.default_rng(0)
    P = hull_hrep(rng.standard_normal((12, 2)))
    Cs = integrate_quadratic(P, orthant_partition(2))
    assert len(Cs) == 4
    assert np.allclose(sum(Cs), second_moment(P), atol=1e-12)
    # quadrant pieces of the square each carry a quarter
    Cs = integrate_quadratic(HPolyhedron.box([-1, -1], [1, 1]), orthant_partition(2))
    for C in Cs:
        assert np.allclose(np.diag(C), [1 / 3, 1 / 3]) and abs(abs(C[0, 1]) - 0.25) < 1e-12


def test_three_dimensional_cube():
    cube = HPolyhedron.box([0, 0, 0], [1, 1, 1])
    # int x_i^2 = 1/3, int x_i x_j = 1/4
    assert np.allclose(second_moment(cube), np.full((3, 3), 0.25) + np.eye(3) / 12)


def test_matches_monte_carlo():
    rng = np.random.default_rng(1)
    for _ in range(5):
        n = int(rng.integers(2, 4))
        P = hull_hrep(rng.standard_normal((10, n)))
        M = rng.standard_normal((n, n))
        Q = M @ M.T
        exact = float(np.sum(second_moment(P) * Q))
        approx = monte_carlo(P, Q, 200_000, rng)
        assert abs(exact - approx) < 0.03 * abs(exact)
