import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from egdg.basis import build_basis, gauss_rule
from egdg.operators import ElementOps, face_lift, map_nodes, stiffness, weighted_mass


@pytest.fixture
def basis1d():
    return build_basis(3, gauss_rule(16), 1)


def test_stiffness_reference_q1():
    b = build_basis(1, gauss_rule(8), 1)
    S = stiffness(b, [-1.0], [1.0])
    assert S == pytest.approx(np.array([[0.0, 0.0], [0.0, 3.0]]), abs=1e-13)


def test_stiffness_constant_column_zero(basis1d):
    S = stiffness(basis1d, [0.0], [0.25])
    assert S[:, 0] == pytest.approx(np.zeros(4), abs=1e-14)
    assert S[0, :] == pytest.approx(np.zeros(4), abs=1e-14)


def test_stiffness_1d_scaling(basis1d):
    S1 = stiffness(basis1d, [0.0], [1.0])
    S2 = stiffness(basis1d, [0.0], [2.0])
    assert S2 == pytest.approx(S1 / 2.0, abs=1e-13)


def test_stiffness_2d_tensor_matches_direct_quadrature():
    q = 3
    b = build_basis(q, gauss_rule(16), 2)
    lo, hi = np.array([0.0, 0.0]), np.array([0.4, 0.25])
    S = stiffness(b, lo, hi)
    h = hi - lo
    jac = np.prod(h / 2)
    direct = np.zeros_like(S)
    for d in range(2):
        dB = b.D[d] * (2.0 / h[d])
        direct += dB.T @ ((jac * b.weights)[:, None] * dB)
    assert S == pytest.approx(direct, abs=1e-12)


def test_stiffness_2d_nullspace_is_constant():
    b = build_basis(2, gauss_rule(8), 2)
    S = stiffness(b, [0, 0], [0.5, 0.5])
    vals = np.linalg.eigvalsh(S)
    assert vals[0] == pytest.approx(0.0, abs=1e-12)
    assert vals[1] > 1e-8


def test_weighted_mass_unit_weight(basis1d):
    M = weighted_mass(basis1d, [0.0], [0.5], np.ones(16))
    assert M == pytest.approx(0.25 * np.eye(4), abs=1e-13)


def test_weighted_mass_zero_weight(basis1d):
    M = weighted_mass(basis1d, [0.0], [0.5], np.zeros(16))
    assert M == pytest.approx(np.zeros((4, 4)))


def test_weighted_mass_matches_bruteforce():
    rng = np.random.default_rng(3)
    b = build_basis(3, gauss_rule(16), 1)
    lo, hi = [0.2], [0.9]
    w = rng.standard_normal(16)
    M = weighted_mass(b, lo, hi, w)
    jac = (hi[0] - lo[0]) / 2
    brute = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for k in range(16):
                acc += jac * b.weights[k] * w[k] * b.V[k, i] * b.V[k, j]
            brute[i, j] = acc
    assert M == pytest.approx(brute, abs=1e-13)
    assert M == pytest.approx(M.T, abs=1e-14)


def test_weighted_mass_rejects_bad_length(basis1d):
    with pytest.raises(ValueError):
        weighted_mass(basis1d, [0.0], [1.0], np.ones(5))


def test_negative_weight_gives_positive_definite_system():
    # c^2 S - M_w is positive definite when the weight is negative
    rng = np.random.default_rng(4)
    b = build_basis(4, gauss_rule(16), 1)
    w = -0.5 - rng.random(16)
    A = stiffness(b, [0.0], [0.3]) - weighted_mass(b, [0.0], [0.3], w)
    np.linalg.cholesky(A)  # raises if not positive definite


def test_face_lift_1d_point_evaluation(basis1d):
    lift = face_lift(basis1d, [0.0], [0.5], 1)
    assert lift.trace[0] == pytest.approx(basis1d.face_values[1][0])
    assert lift.points.ravel() == pytest.approx([0.5])
    assert lift.weights == pytest.approx([1.0])


def test_face_lift_rejects_bad_face(basis1d):
    with pytest.raises(ValueError):
        face_lift(basis1d, [0.0], [1.0], 2)


def test_face_lift_2d_constant_integrand():
    b = build_basis(2, gauss_rule(8), 2)
    lift = face_lift(b, [0.0, 0.0], [0.2, 0.2], 1)  # x+ face, length 0.2
    phi0 = 0.5  # tensor constant mode 1/sqrt(2) * 1/sqrt(2)
    integral = lift.trace[:, 0] @ lift.weights
    assert integral == pytest.approx(0.2 * phi0, abs=1e-14)


def test_face_lift_2d_matches_highorder_oracle():
    rng = np.random.default_rng(5)
    q = 3
    b = build_basis(q, gauss_rule(16), 2)
    lo, hi = np.array([0.1, -0.2]), np.array([0.6, 0.3])
    lift = face_lift(b, lo, hi, 3)  # y+ face, running coordinate x
    coef = rng.standard_normal(q + 1)  # random polynomial g(x) of degree <= q
    g_nodes = npleg.legval(2 * (lift.points[:, 0] - lo[0]) / (hi[0] - lo[0]) - 1, coef)
    got = lift.trace.T @ (lift.weights * g_nodes)
    # oracle: 40-point quadrature along the face with direct basis evaluation
    xo, wo = npleg.leggauss(40)
    pts = np.column_stack([lo[0] + 0.5 * (hi[0] - lo[0]) * (xo + 1), np.full(40, hi[1])])
    ref = 2 * (pts - lo) / (hi - lo) - 1
    V = b.eval_at(ref)
    go = npleg.legval(ref[:, 0], coef)
    want = V.T @ (wo * (hi[0] - lo[0]) / 2 * go)
    assert got == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("ndim", [1, 2])
def test_greens_identity(ndim):
    # a^T S b = -int a Lap(b) + sum_faces int a (grad b . n)
    rng = np.random.default_rng(6)
    q = 3
    b = build_basis(q, gauss_rule(16), ndim)
    lo = np.zeros(ndim)
    hi = np.full(ndim, 0.5)
    ops = ElementOps.build(b, lo, hi)
    ca = rng.standard_normal(b.dim)
    cb = rng.standard_normal(b.dim)
    lhs = ca @ ops.S @ cb
    # volume term via second differentiation of the modal series
    h = hi - lo
    lap = np.zeros(len(b.weights))
    for d in range(ndim):
        # differentiate twice in direction d using the 1D factor tables
        D1 = ops.Dphys[d]
        # second derivative values: project first derivative back to modes
        d1_modal = (ops.wq * (D1 @ cb)) @ b.V / ops.jac
        lap += D1 @ d1_modal
    a_nodes = b.V @ ca
    vol = -np.sum(ops.wq * a_nodes * lap)
    faces = 0.0
    for lift in ops.lifts:
        faces += (lift.trace @ ca) @ (lift.weights * (lift.dnormal @ cb))
    assert lhs == pytest.approx(vol + faces, abs=1e-11 * max(1.0, abs(lhs)))


def test_map_nodes_covers_cell():
    b = build_basis(2, gauss_rule(8), 2)
    pts = map_nodes(b, [0.0, 1.0], [0.5, 1.5])
    assert pts.shape == (64, 2)
    assert np.all(pts[:, 0] > 0.0) and np.all(pts[:, 0] < 0.5)
    assert np.all(pts[:, 1] > 1.0) and np.all(pts[:, 1] < 1.5)
