import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from egdg.basis import Basis, QuadRule, build_basis, gauss_rule, legendre_eval, tensor_submodes


def jacobi_eigen_nodes(n):
    """Independent Gauss-node oracle: eigenvalues of the Jacobi matrix."""
    k = np.arange(1, n)
    b = k / np.sqrt(4.0 * k * k - 1.0)
    J = np.diag(b, 1) + np.diag(b, -1)
    return np.sort(np.linalg.eigvalsh(J))


def test_gauss_rule_n1():
    rule = gauss_rule(1)
    assert rule.nodes == pytest.approx([0.0])
    assert rule.weights == pytest.approx([2.0])


def test_gauss_rule_n2_matches_jacobi_oracle():
    rule = gauss_rule(2)
    assert rule.nodes == pytest.approx([-0.5773502691896258, 0.5773502691896258], abs=1e-15)
    assert rule.weights == pytest.approx([1.0, 1.0], abs=1e-14)
    assert rule.nodes == pytest.approx(jacobi_eigen_nodes(2), abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16, 31])
def test_gauss_rule_invariants(n):
    rule = gauss_rule(n)
    assert np.sum(rule.weights) == pytest.approx(2.0, abs=1e-14)
    assert np.all(np.diff(rule.nodes) > 0)
    assert rule.nodes == pytest.approx(-rule.nodes[::-1], abs=1e-15)
    assert np.all(rule.weights > 0)
    assert rule.nodes == pytest.approx(jacobi_eigen_nodes(n), abs=1e-13)


@pytest.mark.parametrize("n", [1, 2, 4, 16])
def test_gauss_rule_monomial_exactness(n):
    rule = gauss_rule(n)
    for k in range(2 * n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        got = float(np.sum(rule.weights * rule.nodes**k))
        assert got == pytest.approx(exact, abs=1e-13 * max(1.0, abs(exact)))


def test_gauss_rule_rejects_zero():
    with pytest.raises(ValueError):
        gauss_rule(0)


def test_legendre_eval_closed_forms():
    v, d = legendre_eval(0, 0.3)
    assert (v, d) == (1.0, 0.0)
    v, _ = legendre_eval(2, 0.5)
    assert v == pytest.approx((3 * 0.25 - 1) / 2)
    v, _ = legendre_eval(3, 0.5)
    assert v == pytest.approx((5 * 0.125 - 3 * 0.5) / 2)


def test_legendre_eval_matches_numpy():
    x = np.linspace(-1, 1, 23)
    for k in range(9):
        v, d = legendre_eval(k, x)
        c = np.zeros(k + 1)
        c[k] = 1.0
        assert v == pytest.approx(npleg.legval(x, c), abs=1e-14)
        assert d == pytest.approx(npleg.legval(x, npleg.legder(c)), abs=1e-12)


def test_build_basis_q0_constant_mode():
    b = build_basis(0, gauss_rule(4), 1)
    assert b.dim == 1
    assert b.V == pytest.approx(np.full((4, 1), 1 / np.sqrt(2)))


def test_build_basis_2d_dim():
    b = build_basis(4, gauss_rule(16), 2)
    assert b.dim == 25


@pytest.mark.parametrize("q", range(9))
@pytest.mark.parametrize("ndim", [1, 2])
def test_gram_identity(q, ndim):
    # oracle quadrature: independent high-order rule from numpy
    x, w = npleg.leggauss(max(2 * q + 2, 4))
    oracle = QuadRule(len(x), x, w)
    b = build_basis(q, oracle, ndim)
    gram = b.V.T @ (b.weights[:, None] * b.V)
    assert gram == pytest.approx(np.eye(b.dim), abs=1e-12)


def test_build_basis_rejects_coarse_quadrature():
    with pytest.raises(ValueError):
        build_basis(4, gauss_rule(3), 1)


def test_differentiation_consistency():
    rng = np.random.default_rng(7)
    q = 5
    b = build_basis(q, gauss_rule(16), 1)
    coef = rng.standard_normal(q + 1)
    # independent derivative through the plain Legendre series
    scale = np.sqrt((2 * np.arange(q + 1) + 1) / 2.0)
    cleg = coef * scale
    dvals = npleg.legval(b.nodes, npleg.legder(cleg))
    assert b.D[0] @ coef == pytest.approx(dvals, abs=1e-12)


def test_face_traces_match_polynomial_evaluation():
    rng = np.random.default_rng(8)
    q = 6
    b = build_basis(q, gauss_rule(16), 1)
    coef = rng.standard_normal(q + 1)
    scale = np.sqrt((2 * np.arange(q + 1) + 1) / 2.0)
    pcoef = npleg.leg2poly(coef * scale)  # power basis, evaluated by Horner
    for face, xf in ((0, -1.0), (1, 1.0)):
        horner = 0.0
        for c in pcoef[::-1]:
            horner = horner * xf + c
        assert b.face_values[face][0] @ coef == pytest.approx(horner, abs=1e-13)


def test_face_normal_derivative_orientation():
    b = build_basis(3, gauss_rule(8), 1)
    coef = np.array([0.0, 1.0, 0.0, 0.0])  # phi_1 = sqrt(3/2) x, slope > 0
    slope = np.sqrt(3.0 / 2.0)
    assert b.face_dnormal[1][0] @ coef == pytest.approx(slope)  # outward at x=+1
    assert b.face_dnormal[0][0] @ coef == pytest.approx(-slope)  # outward at x=-1


def test_tensor_submodes_are_hierarchical():
    q, s = 4, 2
    quad = gauss_rule(16)
    bq = build_basis(q, quad, 2)
    bs = build_basis(s, quad, 2)
    sel = tensor_submodes(q, s, 2)
    assert bq.V[:, sel] == pytest.approx(bs.V, abs=1e-14)
    assert bq.face_values[:, :, sel] == pytest.approx(bs.face_values, abs=1e-14)
