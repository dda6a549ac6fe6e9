import numpy as np
import pytest
from scipy.linalg import solve_discrete_lyapunov

from invkit.errors import DimensionMismatch, EmptyPolyhedron, OriginNotContained, UnboundedNonCone
from invkit.polyhedra import HPolyhedron, contains_polyhedron, preimage, same_set
from invkit.pwse import PiecewiseSemiEllipsoid, from_ellipsoid, from_polytope
from invkit.systems import (AlgebraicSystem, LinearControlSystem, SwitchedControlSystem,
                            autonomous_invariance_gaps, check_control_invariance,
                            is_invariant_autonomous_ellipsoid, reduce_to_algebraic,
                            system_from_dict, viability_kernel, viability_step)

from helpers import load_set

BOX = HPolyhedron.box([-1, -1], [1, 1])
DI = LinearControlSystem(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([[0.0], [1.0]]), BOX)
# hand-derived fixed point: |x1| <= 1, |x2| <= 1, |x1 + x2| <= 1
KERNEL = HPolyhedron([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1]], np.ones(6))


def rot(t):
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


def autonomous(A, X=BOX):
    A = np.asarray(A, dtype=float)
    return LinearControlSystem(A, np.zeros((A.shape[0], 1)), X)


# -- models -------------------------------------------------------------------

def test_state_set_must_be_bounded_with_interior_origin():
    with pytest.raises(UnboundedNonCone):
        LinearControlSystem(np.eye(2), np.zeros((2, 1)), HPolyhedron([[1.0, 0.0]], [1.0]))
    with pytest.raises(OriginNotContained):
        LinearControlSystem(np.eye(2), np.zeros((2, 1)), HPolyhedron.box([0, -1], [1, 1]))
    with pytest.raises(DimensionMismatch):
        LinearControlSystem(np.eye(3), np.zeros((2, 1)), BOX)


def test_system_dict_roundtrip():
    again = system_from_dict(DI.to_dict())
    assert np.array_equal(again.A, DI.A) and np.array_equal(again.B, DI.B)
    sw = SwitchedControlSystem([(rot(0.5), np.zeros((2, 1))), (0.5 * np.eye(2), np.zeros((2, 1)))], BOX)
    again = system_from_dict(sw.to_dict())
    assert isinstance(again, SwitchedControlSystem) and len(again.systems) == 2


# -- reduction ----------------------------------------------------------------

def test_reduction_double_integrator():
    alg = reduce_to_algebraic(DI)
    assert isinstance(alg, AlgebraicSystem) and alg.r == 1
    assert np.allclose(alg.E, [[1, 0]]) and np.allclose(alg.C, [[1, 1]])


def test_reduction_trivial_cases():
    alg = reduce_to_algebraic(autonomous([[1, 2], [3, 4]]))
    assert np.allclose(alg.E, np.eye(2)) and np.allclose(alg.C, [[1, 2], [3, 4]])
    assert reduce_to_algebraic(LinearControlSystem(np.eye(2), np.eye(2), BOX)).r == 0


def test_compressed_matches_projector_form():
    rng = np.random.default_rng(3)
    X = HPolyhedron.box(-np.ones(4), np.ones(4))
    for m in range(0, 4):
        A = rng.standard_normal((4, 4))
        B = rng.standard_normal((4, m)) if m else np.zeros((4, 1))
        sys = LinearControlSystem(A, B, X)
        c = reduce_to_algebraic(sys)
        u = reduce_to_algebraic(sys, compress=False)
        assert c.r == 4 - m
        assert np.allclose(c.E @ c.E.T, np.eye(c.r), atol=1e-12)
        assert np.allclose(c.E @ B, 0, atol=1e-12)
        assert np.allclose(u.E, c.E.T @ c.E, atol=1e-12)
        assert np.allclose(u.C, c.E.T @ c.C, atol=1e-12)


# -- ellipsoid LMI ------------------------------------------------------------

def test_ellipsoid_invariance_lmi():
    assert is_invariant_autonomous_ellipsoid(0.5 * np.eye(2), np.eye(2))
    assert is_invariant_autonomous_ellipsoid(rot(np.pi / 2), np.eye(2))
    assert not is_invariant_autonomous_ellipsoid(2 * np.eye(2), np.eye(2))


# -- viability ----------------------------------------------------------------

def test_step_double_integrator():
    P1 = viability_step(DI, BOX)
    assert same_set(P1, KERNEL)
    assert same_set(viability_step(DI, P1), KERNEL)


def test_step_into_origin():
    origin = HPolyhedron(np.vstack([np.eye(2), -np.eye(2)]), np.zeros(4))
    P = viability_step(DI, origin)
    line = HPolyhedron(np.vstack([[1, 1], [-1, -1], np.eye(2), -np.eye(2)]), [0, 0, 1, 1, 1, 1])
    assert same_set(P, line)


def test_step_fully_actuated_keeps_state_set():
    fa = LinearControlSystem(np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(2), BOX)
    assert same_set(viability_step(fa, BOX), BOX)


def test_step_empty():
    far = HPolyhedron.box([5, 5], [6, 6])
    with pytest.raises(EmptyPolyhedron):
        viability_step(autonomous(np.eye(2)), far)


def test_kernel_cases():
    res = viability_kernel(DI)
    assert res.converged and len(res.iterates) == 2 and same_set(res.kernel, KERNEL)
    res = viability_kernel(LinearControlSystem(np.eye(2), np.eye(2), BOX))
    assert res.converged and len(res.iterates) == 1 and same_set(res.kernel, BOX)
    res = viability_kernel(autonomous(2 * np.eye(2)), max_iter=5)
    assert not res.converged
    for k, P in enumerate(res.iterates):
        assert same_set(P, HPolyhedron.box([-2.0 ** -k] * 2, [2.0 ** -k] * 2))


def random_subpolytope(rng, X, k):
    A = rng.standard_normal((k, X.n))
    b = rng.uniform(0.2, 1.0, k)
    return X.intersect(HPolyhedron(A, b))


def test_step_is_monotone():
    rng = np.random.default_rng(11)
    for _ in range(20):
        A = rng.standard_normal((2, 2))
        B = rng.standard_normal((2, 1))
        sys = LinearControlSystem(A, B, BOX)
        big = random_subpolytope(rng, BOX, 2)
        small = random_subpolytope(rng, big, 2)
        assert contains_polyhedron(viability_step(sys, big), viability_step(sys, small), tol=1e-8)


# -- image / preimage ---------------------------------------------------------

def test_image_preimage_adjunction():
    rng = np.random.default_rng(5)
    seen = set()
    for _ in range(60):
        S = random_subpolytope(rng, HPolyhedron.box([-1, -1], [1, 1]), 3).scaled(rng.uniform(0.3, 2.0))
        T = random_subpolytope(rng, HPolyhedron.box([-1, -1], [1, 1]), 3)
        M = rng.standard_normal((2, 2))
        V = S.vertices()
        image_inside = bool(np.all(T.contains_many(V @ M.T, tol=1e-9)))
        # membership sampling of S against the preimage
        W = rng.dirichlet(np.ones(len(V)), 400) @ V
        pre_inside = bool(np.all(preimage(T, M).contains_many(np.vstack([V, W]), tol=1e-9)))
        assert image_inside == pre_inside
        seen.add(image_inside)
    assert seen == {True, False}


def test_preimage_of_image_can_be_larger():
    A = np.array([[1.0, 0.0]])
    S = HPolyhedron([[1.0], [-1.0]], [1.0, 1.0])
    T = HPolyhedron.box([-1, -1], [1, 1])
    # S is the image of T
    assert np.all(S.contains_many(T.vertices() @ A.T))
    pre = preimage(S, A)
    assert pre.contains([0.0, 5.0]) and not T.contains([0.0, 5.0])
    assert not contains_polyhedron(T, HPolyhedron.box([-1, -5], [1, 5]).intersect(pre))


# -- invariance checks ----------------------------------------------------------

def test_check_rotated_disk():
    rep = check_control_invariance(autonomous(rot(np.pi / 2)), from_ellipsoid(np.eye(2)))
    assert rep.passed and rep.primal < 1e-12 and rep.dual < 1e-12


def test_check_expansion_fails():
    rep = check_control_invariance(autonomous(2 * np.eye(2)), from_polytope(BOX))
    assert not rep.passed
    assert abs(rep.primal - 1.0) < 1e-9
    assert rep.dual > 0.5


def test_check_kernel_as_set():
    rep = check_control_invariance(DI, from_polytope(KERNEL))
    assert rep.passed
    rep = check_control_invariance(DI, from_polytope(BOX))
    assert not rep.primal_ok and not rep.dual_ok


def test_check_detects_set_outside_state_set():
    rep = check_control_invariance(autonomous(0.5 * np.eye(2)), from_ellipsoid(0.25 * np.eye(2)))
    assert rep.primal_ok and rep.dual_ok and not rep.contained


def test_check_switched_reports_worst_mode():
    sw = SwitchedControlSystem([(rot(0.3), np.zeros((2, 1))), (1.5 * np.eye(2), np.zeros((2, 1)))], BOX)
    rep = check_control_invariance(sw, from_ellipsoid(np.eye(2)))
    assert abs(rep.primal - 0.5) < 1e-9


# -- equivalent autonomous conditions -----------------------------------------

def random_lyapunov_pair(rng, n):
    A = rng.standard_normal((n, n))
    A *= rng.uniform(0.3, 0.99) / max(abs(np.linalg.eigvals(A)))
    Q = solve_discrete_lyapunov(A.T, np.eye(n))  # Q - A' Q A = I
    return A, Q / np.linalg.eigvalsh(Q)[-1]


def test_four_conditions_on_lyapunov_ellipsoids():
    rng = np.random.default_rng(8)
    for _ in range(10):
        A, Q = random_lyapunov_pair(rng, 2)
        S = from_ellipsoid(Q)
        gaps = autonomous_invariance_gaps(A, S)
        assert max(gaps.values()) <= 1e-8
        # closed form: the support of {x' Q x <= 1} is sqrt(y' Q^-1 y)
        Y = rng.standard_normal((200, 2))
        Qi = np.linalg.inv(Q)
        h = lambda Z: np.sqrt(np.einsum("ij,jk,ik->i", Z, Qi, Z))
        assert np.all(h(Y @ A) <= h(Y) + 1e-8)


def test_four_conditions_fail_together():
    S = from_polytope(BOX)
    gaps = autonomous_invariance_gaps(rot(np.pi / 4), S)
    assert all(v > 0.1 for v in gaps.values())


def test_four_conditions_on_piecewise_sets():
    ex1 = load_set("example1.json")
    for A, S in [(rot(np.pi / 2), from_polytope(BOX)), (0.7 * np.eye(2), ex1),
                 (np.array([[0.0, 1.0], [-0.5, 0.0]]), from_polytope(BOX))]:
        gaps = autonomous_invariance_gaps(A, S)
        assert max(gaps.values()) <= 1e-8


def test_polar_system_invariance():
    rng = np.random.default_rng(2)
    big = HPolyhedron.box([-10, -10], [10, 10])
    cases = [random_lyapunov_pair(rng, 2) for _ in range(5)]
    cases = [(A, from_ellipsoid(Q)) for A, Q in cases]
    cases += [(rot(np.pi / 2), from_polytope(BOX)), (rot(np.pi / 4), from_polytope(BOX)),
              (0.7 * np.eye(2), load_set("example1.json")), (1.2 * np.eye(2), load_set("example1.json"))]
    outcomes = set()
    for A, S in cases:
        primal = check_control_invariance(autonomous(A, big), S)
        dual = check_control_invariance(autonomous(A.T, big), S.polar())
        assert primal.primal_ok == dual.primal_ok
        assert primal.dual_ok == dual.dual_ok == primal.primal_ok
        outcomes.add(primal.primal_ok)
    assert outcomes == {True, False}


def test_primal_check_with_several_inputs():
    # inputs steer x1 and x2 freely, x3 doubles: worst sample is the top face
    X3 = HPolyhedron.box(-np.ones(3), np.ones(3))
    B = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    S = from_polytope(X3)
    rep = check_control_invariance(LinearControlSystem(2 * np.eye(3), B, X3), S, n_samples=400)
    assert abs(rep.primal - 1.0) < 1e-6
    ok = LinearControlSystem(np.diag([2.0, 2.0, 0.5]), B, X3)
    assert check_control_invariance(ok, S, n_samples=400).passed
    assert check_control_invariance(LinearControlSystem(3 * np.eye(3), np.eye(3), X3), S).primal == 0.0
