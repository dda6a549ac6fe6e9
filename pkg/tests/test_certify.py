import numpy as np
import pytest

from invkit.certify import certify_copositive, encode_copositivity, verify_copositivity_pointwise
from invkit.conic import Affine, ConicProgram, default_backend
from invkit.polyhedra import HPolyhedron, VPolyhedron, to_hrep

ORTHANT = HPolyhedron.from_cone_rows(np.eye(2))
Q5 = np.array([[1.0, -0.5], [-0.5, 1.0]])


def test_copositive_not_psd_on_orthant():
    cert = certify_copositive([[0, 1], [1, 0]], ORTHANT)
    assert cert is not None
    assert abs(cert.lam[(0, 1)] - 1.0) < 1e-6
    assert np.allclose(cert.psd_witness, 0, atol=1e-6)
    assert cert.check([[0, 1], [1, 0]])


def test_rows_in_either_orientation():
    flipped = HPolyhedron(np.eye(2))  # the nonpositive orthant, same products
    assert certify_copositive([[0, 1], [1, 0]], flipped) is not None


def test_whole_space_and_halfspace_reduce_to_psd():
    prog = ConicProgram()
    Q = prog.symmetric(2, "Q")
    block = encode_copositivity(Q, HPolyhedron.whole_space(2), prog)
    assert block.lam == {} and len(prog.psd_blocks) == 1
    prog = ConicProgram()
    Q = prog.symmetric(2, "Q")
    block = encode_copositivity(Q, HPolyhedron([[1.0, 0.0]]), prog)
    assert block.lam == {}
    assert certify_copositive(np.eye(2), HPolyhedron.whole_space(2)) is not None
    assert certify_copositive([[0, 1], [1, 0]], HPolyhedron([[1.0, 0.0]])) is None


def test_levels_above_one_rejected():
    prog = ConicProgram()
    with pytest.raises(ValueError):
        encode_copositivity(Affine(np.eye(2)), ORTHANT, prog, level=2)


def test_pointwise_examples():
    assert abs(verify_copositivity_pointwise([[0, -1], [-1, 0]], ORTHANT) + 1.0) < 1e-3
    assert verify_copositivity_pointwise(Q5, ORTHANT) >= 0
    assert verify_copositivity_pointwise(np.eye(2), HPolyhedron.whole_space(2)) >= 0.999


def test_not_copositive_is_rejected():
    assert certify_copositive([[0, -1], [-1, 0]], ORTHANT) is None


def random_cone(rng, n):
    k = int(rng.integers(n, n + 4))
    G = rng.standard_normal((k, n)) + 2.0 * rng.standard_normal(n)
    return to_hrep(VPolyhedron(n, np.zeros((1, n)), G))


def test_soundness_random():
    rng = np.random.default_rng(0)
    backend = default_backend()
    done = 0
    for _ in range(100):
        n = int(rng.integers(2, 4))
        K = random_cone(rng, n)
        prog = ConicProgram()
        Q = prog.symmetric(n, "Q")
        M = rng.standard_normal((n, n))
        target = (M + M.T) / 2
        block = encode_copositivity(Q, K, prog)
        # closest certifiable matrix along the identity direction
        t = prog.scalar("t")
        prog.add_eq((Q - target - t * np.eye(n))[np.triu_indices(n)])
        prog.maximize(-t)
        sol = backend.solve(prog)
        cert = block.certificate(sol)
        Qv = sol[Q]
        assert all(v >= -1e-8 for v in cert.lam.values())
        assert verify_copositivity_pointwise(Qv, K, 10_000) >= -1e-7
        done += 1
    assert done == 100
