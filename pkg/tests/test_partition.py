import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invkit.errors import NotCovering, OriginNotContained, OverlappingPieces
from invkit.partition import build_partition, facet_cones, orthant_partition, single_piece
from invkit.polyhedra import HPolyhedron, dim, polar_polytope

from randgen import random_angles


def cone(*rows):
    return HPolyhedron.from_cone_rows(np.array(rows, float))


EXAMPLE1 = [cone([0, 1], [1, -1]), cone([1, 0], [-1, 1]), cone([-1, 0], [0, 1]),
            cone([-1, 0], [0, -1]), cone([1, 0], [0, -1])]


def test_quadrants():
    part = orthant_partition(2)
    assert len(part.neighbors) == 4
    # pieces are ordered (+,+), (+,-), (-,+), (-,-)
    assert (0, 1) in part.neighbors
    assert np.allclose(part.normals[(0, 1)], [0, 1])
    assert np.allclose(part.normals[(1, 0)], [0, -1])
    assert len(orthant_partition(3).neighbors) == 12


def test_single_piece():
    part = single_piece(2)
    assert part.m == 1 and part.neighbors == []
    assert part.locate([3.0, -1.0]) == 0


def test_example1_partition():
    part = build_partition(EXAMPLE1)
    assert part.m == 5
    assert len(part.neighbors) == 5
    for (i, j) in part.neighbors:
        nij = part.normals[(i, j)]
        assert np.isclose(np.linalg.norm(nij), 1)
        # oriented towards P_i
        assert np.all(part.generators(i) @ nij >= -1e-12)
        assert np.all(part.generators(j) @ nij <= 1e-12)


def test_overlap_and_cover_errors():
    with pytest.raises(OverlappingPieces):
        build_partition([cone([1, 0]), cone([0, 1]), cone([-1, 0])])
    with pytest.raises(NotCovering):
        build_partition([cone([1, 0], [0, 1]), cone([-1, 0], [0, 1])])
    part = build_partition([cone([1, 0], [0, 1]), cone([-1, 0], [0, 1])], require_cover=False)
    assert part.locate([0.0, -1.0]) == -1
    with pytest.raises(ValueError):
        build_partition([HPolyhedron([[1, 0], [-1, 0]])])


def test_facet_cones_examples():
    cross = polar_polytope(HPolyhedron.box([-1, -1], [1, 1]))
    part = facet_cones(cross)
    quads = orthant_partition(2)
    assert part.m == 4
    for P in part.pieces:
        assert any(np.allclose(np.sort(P.cone_generators(), axis=0), np.sort(Q.cone_generators(), axis=0))
                   for Q in quads.pieces)
    sq = facet_cones(HPolyhedron.box([-1, -1], [1, 1]))
    for P in sq.pieces:
        G = P.cone_generators()
        assert np.allclose(np.abs(G[:, 0]), np.abs(G[:, 1]))
    t = np.arange(6) * np.pi / 3
    hexagon = HPolyhedron(np.column_stack([np.cos(t), np.sin(t)]), np.ones(6))
    assert facet_cones(hexagon).m == 6
    with pytest.raises(OriginNotContained):
        facet_cones(HPolyhedron.box([0, -1], [1, 1]))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 3))
def test_facet_cones_always_partition(seed, n):
    rng = np.random.default_rng(seed)
    A = np.vstack([rng.standard_normal((int(rng.integers(1, 6)), n)), np.eye(n), -np.eye(n)])
    P = HPolyhedron(A, rng.uniform(0.5, 2, A.shape[0]))
    part = facet_cones(P)
    assert part.m == P.facet_rows().nrows
    for Q in part.pieces:
        assert dim(Q) == n


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(3, 8))
def test_fans_in_the_plane(seed, m):
    rng = np.random.default_rng(seed)
    t = random_angles(rng, m)
    R = np.column_stack([np.cos(t), np.sin(t)])
    from invkit.polyhedra import VPolyhedron, to_hrep
    cones = [to_hrep(VPolyhedron(2, np.zeros((1, 2)), R[[k, (k + 1) % m]])) for k in range(m)]
    part = build_partition(cones)
    assert len(part.neighbors) == m
    X = rng.standard_normal((200, 2))
    idx = part.locate_many(X)
    assert np.all(idx >= 0)
    # the located piece contains the point
    for x, i in zip(X, idx):
        assert part.pieces[i].contains(x)
    with pytest.raises(NotCovering):
        build_partition(cones[:-1])


def test_pair_faces_and_serialization():
    part = orthant_partition(2)
    assert part.pair_face(0, 3) is None
    G = part.pair_face(0, 1)
    assert np.allclose(np.abs(G), [[1, 0]])
    again = build_partition([HPolyhedron.from_dict(d) for d in part.to_dict()])
    assert again.neighbors == part.neighbors
