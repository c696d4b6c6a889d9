"""Reference-element bases: Gauss-Legendre quadrature and orthonormal
modal Legendre tables.

All tables live on the reference element [-1, 1] (or [-1, 1]^2 for tensor
elements).  The modes are the orthonormalized Legendre polynomials

    phi_k(x) = sqrt((2k + 1) / 2) * P_k(x),

so the reference mass matrix is exactly the identity.  In 2D the modes are
tensor products ordered lexicographically by (kx, ky), i.e. mode index
kx*(q+1) + ky, and the quadrature nodes follow the same slow-x/fast-y
ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadRule", "Basis", "gauss_rule", "legendre_eval", "build_basis"]


@dataclass(frozen=True)
class QuadRule:
    """Gauss-Legendre rule on [-1, 1]: exact for degree <= 2n - 1."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray


def legendre_eval(k: int, x):
    """Evaluate the Legendre polynomial P_k and its derivative at x.

    Uses the three-term recurrence; x may be a scalar or an array in
    [-1, 1].  Returns the plain (non-normalized) values; the orthonormal
    mode is sqrt((2k+1)/2) * P_k.
    """
    x = np.asarray(x, dtype=float)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    dp_prev = np.zeros_like(x)
    dp = np.zeros_like(x)
    for i in range(1, k + 1):
        # P_i = ((2i-1) x P_{i-1} - (i-1) P_{i-2}) / i, same recurrence for P'
        p_next = ((2 * i - 1) * x * p - (i - 1) * p_prev) / i
        dp_next = ((2 * i - 1) * (p + x * dp) - (i - 1) * dp_prev) / i
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
    if x.ndim == 0:
        return float(p), float(dp)
    return p, dp


def gauss_rule(n: int) -> QuadRule:
    """Gauss-Legendre nodes and weights on [-1, 1].

    Nodes are the roots of P_n, found by Newton iteration from the
    Chebyshev-type initial guesses cos(pi (i + 3/4) / (n + 1/2)); weights
    are 2 / ((1 - x^2) P_n'(x)^2).  The rule is symmetrized exactly about
    zero.
    """
    if n < 1:
        raise ValueError(f"quadrature count must be >= 1, got {n}")
    if n == 1:
        return QuadRule(1, np.array([0.0]), np.array([2.0]))
    i = np.arange(n)
    x = np.cos(np.pi * (i + 0.75) / (n + 0.5))
    for _ in range(100):
        p, dp = legendre_eval(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    # enforce exact antisymmetry of the node set
    x = 0.5 * (x - x[::-1])
    _, dp = legendre_eval(n, x)
    w = 2.0 / ((1.0 - x**2) * dp**2)
    w = 0.5 * (w + w[::-1])
    order = np.argsort(x)
    return QuadRule(n, x[order], w[order])


def _mode_tables(q: int, x: np.ndarray):
    """Orthonormal mode values and derivatives at points x.

    Returns (V, D) of shape (len(x), q+1) with V[m, k] = phi_k(x[m]).
    """
    V = np.empty((len(x), q + 1))
    D = np.empty((len(x), q + 1))
    for k in range(q + 1):
        scale = np.sqrt((2 * k + 1) / 2.0)
        p, dp = legendre_eval(k, x)
        V[:, k] = scale * p
        D[:, k] = scale * dp
    return V, D


@dataclass(frozen=True)
class Basis:
    """Precomputed modal tables on the reference element.

    Attributes
    ----------
    q : polynomial degree per direction
    dim : number of modes, (q+1) in 1D and (q+1)^2 in 2D
    quad : the 1D quadrature rule the tables are built on
    nodes : reference coordinates of the volume quadrature nodes,
        shape (n_quad,) in 1D or (n_quad, 2) in 2D
    weights : reference quadrature weights, shape (n_quad,)
    V : mode values at the volume nodes, (n_quad, dim)
    D : mode derivatives at the volume nodes; (1, n_quad, dim) in 1D,
        (2, n_quad, dim) in 2D (d/dxi then d/deta)
    face_values : mode values at the reference faces, (n_faces, nfq, dim);
        faces are ordered [-1, +1] in 1D and [x-, x+, y-, y+] in 2D
    face_dnormal : outward-normal mode derivatives at the faces, same shape
    face_weights : reference face quadrature weights, (nfq,)
    """

    q: int
    dim: int
    ndim: int
    quad: QuadRule
    nodes: np.ndarray
    weights: np.ndarray
    V: np.ndarray
    D: np.ndarray
    face_values: np.ndarray
    face_dnormal: np.ndarray
    face_weights: np.ndarray

    def eval_at(self, x: np.ndarray) -> np.ndarray:
        """Mode values at arbitrary reference points (1D: (m,), 2D: (m, 2))."""
        if self.ndim == 1:
            V, _ = _mode_tables(self.q, np.atleast_1d(x))
            return V
        pts = np.atleast_2d(x)
        Vx, _ = _mode_tables(self.q, pts[:, 0])
        Vy, _ = _mode_tables(self.q, pts[:, 1])
        return (Vx[:, :, None] * Vy[:, None, :]).reshape(len(pts), self.dim)


def build_basis(q: int, quad: QuadRule, ndim: int = 1) -> Basis:
    """Assemble the modal tables of degree q over the given quadrature.

    Requires quad.n >= q + 1; the numerically computed Gram matrix is
    checked against the identity and a failure raises ValueError.
    """
    if q < 0:
        raise ValueError(f"degree must be >= 0, got {q}")
    if ndim not in (1, 2):
        raise ValueError(f"ndim must be 1 or 2, got {ndim}")
    if quad.n < q + 1:
        raise ValueError(f"quadrature with {quad.n} points is too coarse for degree {q}")

    V1, D1 = _mode_tables(q, quad.nodes)
    ends = np.array([-1.0, 1.0])
    T1, Td1 = _mode_tables(q, ends)  # values/derivatives at the endpoints

    if ndim == 1:
        dim = q + 1
        nodes = quad.nodes
        weights = quad.weights
        V = V1
        D = D1[None, :, :]
        face_values = T1[:, None, :]  # (2 faces, 1 node, dim)
        # outward normal at the left face is -x
        face_dnormal = np.stack([-Td1[0][None, :], Td1[1][None, :]])
        face_weights = np.array([1.0])
    else:
        dim = (q + 1) ** 2
        nodes = np.column_stack(
            [np.repeat(quad.nodes, quad.n), np.tile(quad.nodes, quad.n)]
        )
        weights = np.kron(quad.weights, quad.weights)
        V = np.kron(V1, V1)
        D = np.stack([np.kron(D1, V1), np.kron(V1, D1)])
        # faces x-, x+, y-, y+; the running coordinate uses the 1D rule
        fv, fd = [], []
        for side in (0, 1):  # x = -1, x = +1
            fv.append(np.kron(T1[side][None, :], V1))
            fd.append((-1 if side == 0 else 1) * np.kron(Td1[side][None, :], V1))
        for side in (0, 1):  # y = -1, y = +1
            fv.append(np.kron(V1, T1[side][None, :]))
            fd.append((-1 if side == 0 else 1) * np.kron(V1, Td1[side][None, :]))
        face_values = np.stack(fv)
        face_dnormal = np.stack(fd)
        face_weights = quad.weights.copy()

    basis = Basis(
        q=q,
        dim=dim,
        ndim=ndim,
        quad=quad,
        nodes=nodes,
        weights=weights,
        V=V,
        D=D,
        face_values=face_values,
        face_dnormal=face_dnormal,
        face_weights=face_weights,
    )
    gram = V.T @ (weights[:, None] * V)
    if not np.allclose(gram, np.eye(dim), atol=1e-12):
        raise ValueError(
            f"basis of degree {q} is not orthonormal under the given "
            f"{quad.n}-point rule (max Gram defect "
            f"{np.max(np.abs(gram - np.eye(dim))):.2e})"
        )
    return basis


def tensor_submodes(q: int, s: int, ndim: int) -> np.ndarray:
    """Indices of the degree-s modes inside the degree-q mode ordering.

    The modal family is hierarchical, so the degree-s space is spanned by
    a subset of the degree-q modes (prefix in 1D, the kx,ky <= s block in
    2D).  Requires s <= q.
    """
    if s > q:
        raise ValueError(f"s={s} exceeds q={q}")
    if ndim == 1:
        return np.arange(s + 1)
    kx = np.repeat(np.arange(s + 1), s + 1)
    ky = np.tile(np.arange(s + 1), s + 1)
    return kx * (q + 1) + ky
