"""Per-element discrete operators on axis-aligned cells.

All matrices are assembled with the element's own quadrature rule (no
analytic shortcut path).  Jacobian conventions for a cell of size h per
direction: each derivative contributes a factor 2/h and the measure
contributes prod(h/2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Basis


def _ref_1d_factors(basis: Basis):
    """Reference 1D mass and stiffness factors from the quadrature tables."""
    q = basis.q
    quad = basis.quad
    from .basis import _mode_tables

    V1, D1 = _mode_tables(q, quad.nodes)
    w = quad.weights
    M = V1.T @ (w[:, None] * V1)
    S = D1.T @ (w[:, None] * D1)
    return M, S


def stiffness(basis: Basis, cell_lo, cell_hi) -> np.ndarray:
    """Physical stiffness matrix S_ij = int_cell grad(phi_i).grad(phi_j).

    In 2D the matrix is built as the tensor sum (hy/hx) Sx x My +
    (hx/hy) Mx x Sy of quadrature-assembled 1D factors.
    """
    h = np.asarray(cell_hi, dtype=float) - np.asarray(cell_lo, dtype=float)
    M1, S1 = _ref_1d_factors(basis)
    if basis.ndim == 1:
        return (2.0 / h[0]) * S1
    hx, hy = h
    return (hy / hx) * np.kron(S1, M1) + (hx / hy) * np.kron(M1, S1)


def weighted_mass(basis: Basis, cell_lo, cell_hi, w_nodes) -> np.ndarray:
    """Quadrature-weighted mass M[i,j] = sum_k w_phys_k w_k phi_i(x_k) phi_j(x_k)."""
    w_nodes = np.asarray(w_nodes, dtype=float)
    if w_nodes.shape != basis.weights.shape:
        raise ValueError(
            f"node weight vector has shape {w_nodes.shape}, expected {basis.weights.shape}"
        )
    h = np.asarray(cell_hi, dtype=float) - np.asarray(cell_lo, dtype=float)
    jac = float(np.prod(h / 2.0))
    ww = jac * basis.weights * w_nodes
    return basis.V.T @ (ww[:, None] * basis.V)


@dataclass(frozen=True)
class FaceLift:
    """Face-integral tables for one local face of a cell.

    trace[m, i] = phi_i at face quadrature node m; dnormal[m, i] is the
    physical outward-normal derivative there.  points are the physical
    node coordinates and weights the physical face quadrature weights, so
    `trace.T @ (weights * g)` is the lifted integral of g against phi_i.
    """

    trace: np.ndarray
    dnormal: np.ndarray
    points: np.ndarray
    weights: np.ndarray


def face_lift(basis: Basis, cell_lo, cell_hi, face: int) -> FaceLift:
    """Trace tables for the given local face (1D: 0=x-, 1=x+; 2D adds 2=y-, 3=y+)."""
    n_faces = 2 * basis.ndim
    if not 0 <= face < n_faces:
        raise ValueError(f"face id {face} out of range for {basis.ndim}D cell")
    lo = np.asarray(cell_lo, dtype=float)
    hi = np.asarray(cell_hi, dtype=float)
    h = hi - lo
    axis = face // 2
    trace = basis.face_values[face]
    # reference normal derivative scaled to physical coordinates
    dnormal = basis.face_dnormal[face] * (2.0 / h[axis])
    if basis.ndim == 1:
        x = lo[0] if face == 0 else hi[0]
        points = np.array([[x]])
        weights = np.array([1.0])
    else:
        tang = 1 - axis
        t = lo[tang] + 0.5 * h[tang] * (basis.quad.nodes + 1.0)
        fixed = lo[axis] if face % 2 == 0 else hi[axis]
        points = np.empty((len(t), 2))
        points[:, axis] = fixed
        points[:, tang] = t
        weights = basis.face_weights * (h[tang] / 2.0)
    return FaceLift(trace=trace, dnormal=dnormal, points=points, weights=weights)


@dataclass(frozen=True)
class ElementOps:
    """Bundle of the per-element operators for one cell geometry.

    Q maps modal coefficients to quadrature-node values (basis.V); wq are
    the physical volume quadrature weights; Dphys[d] gives node values of
    the d-th physical derivative.
    """

    S: np.ndarray
    Q: np.ndarray
    wq: np.ndarray
    Dphys: np.ndarray
    lifts: tuple
    jac: float

    @classmethod
    def build(cls, basis: Basis, cell_lo, cell_hi) -> "ElementOps":
        lo = np.asarray(cell_lo, dtype=float)
        hi = np.asarray(cell_hi, dtype=float)
        h = hi - lo
        jac = float(np.prod(h / 2.0))
        Dphys = np.stack(
            [basis.D[d] * (2.0 / h[d]) for d in range(basis.ndim)]
        )
        lifts = tuple(
            face_lift(basis, lo, hi, f) for f in range(2 * basis.ndim)
        )
        return cls(
            S=stiffness(basis, lo, hi),
            Q=basis.V,
            wq=jac * basis.weights,
            Dphys=Dphys,
            lifts=lifts,
            jac=jac,
        )


def map_nodes(basis: Basis, cell_lo, cell_hi) -> np.ndarray:
    """Physical coordinates of the volume quadrature nodes of one cell."""
    lo = np.asarray(cell_lo, dtype=float)
    hi = np.asarray(cell_hi, dtype=float)
    ref = basis.nodes if basis.ndim == 2 else basis.nodes[:, None]
    return lo + 0.5 * (hi - lo) * (ref + 1.0)
