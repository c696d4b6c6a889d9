"""Semidiscrete right-hand side of the energy-based DG scheme.

Per element the u-equation is the linear system

    (c^2 S - M_g) du/dt = (c^2 S - M_g) v
                          + boundary lift of c^2 dphi/dn (v* - v^h),

where S is the stiffness matrix, M_g the quadrature-weighted mass built
from the nodal weights g(u^h) = f(u^h)/u^h, and v is embedded exactly into
the degree-q space (the modal family is hierarchical).  Writing
du/dt = v + w reduces the solve to (c^2 S - M_g) w = face lift.  The
mean-value condition int(du/dt - v) = 0 replaces the constant-mode
equation whenever the weight vanishes on the whole element (the matrix
then loses exactly the constant mode), or on every element when the
problem selects the constrained mean update (see problems.Problem).

The v-equation is explicit:

    M dv/dt = -c^2 S^T u - theta M v
              + sum_k w_k phi_v(x_k) (f(u^h(x_k)) + forcing(x_k, t))
              + boundary lift of c^2 phi_v (grad u)* . n,

with M the (diagonal) v-mass.  Elements couple only through the face
traces (v*, (grad u)* . n), so everything is assembled in batched
element-parallel form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import build_basis, gauss_rule, tensor_submodes
from .errors import NumericalBreakdownError
from .flux import BoundaryParams, FluxParams
from .mesh import Mesh
from .operators import ElementOps
from .problems import Problem

G_TOL = 1e-10  # scaled by the nonlinearity's g_scale


@dataclass
class State:
    """Per-element modal coefficients of u^h (degree q) and v^h (degree s)."""

    u: np.ndarray  # (n_elements, dim_q)
    v: np.ndarray  # (n_elements, dim_s)
    t: float = 0.0

    def copy(self) -> "State":
        return State(self.u.copy(), self.v.copy(), self.t)


class Discretization:
    """Precomputed operator tables and face connectivity for one run.

    rhs() is a pure function of (state, t) and writes disjoint per-element
    blocks, so element-level work is expressed as batched numpy
    operations.  The only mutable piece is a time-keyed cache of the last
    forcing evaluation (RK4 stages repeat times pairwise).
    """

    def __init__(
        self,
        problem: Problem,
        mesh: Mesh,
        q: int,
        s: int = None,
        flux: FluxParams = None,
        boundary=None,
        boundary_flux: FluxParams = None,
        quad_n: int = 16,
        g_tol: float = G_TOL,
        mean_update: str = None,
    ):
        s = q if s is None else s
        if not 0 <= s <= q:
            raise ValueError(f"need 0 <= s <= q, got (q, s) = ({q}, {s})")
        if mesh.ndim != problem.ndim:
            raise ValueError(f"mesh is {mesh.ndim}D but problem is {problem.ndim}D")
        self.problem = problem
        self.mesh = mesh
        self.q = q
        self.s = s
        self.flux = FluxParams.sommerfeld() if flux is None else flux
        # exterior-data boundary faces default to the characteristic trace
        # (splitting parameter = wave speed) independent of the interior
        # flux; conservative traces let boundary-data jumps accumulate and
        # cost observed order at s < q
        if boundary_flux is None:
            boundary_flux = FluxParams.sommerfeld(xi=problem.c)
        self.boundary_flux = boundary_flux
        self.boundary = problem.boundary if boundary is None else boundary
        self.mean_update = problem.mean_update if mean_update is None else mean_update
        if self.mean_update not in ("weighted", "constrained"):
            raise ValueError(f"unknown mean_update mode {self.mean_update!r}")
        if self.boundary == "periodic" and not all(mesh.periodic):
            raise ValueError("periodic boundary treatment needs a periodic mesh")
        self.quad_n = quad_n
        self.g_tol = g_tol * problem.nonlin.g_scale
        self.c = problem.c
        self.theta = problem.theta

        quad = gauss_rule(quad_n)
        self.basis = build_basis(q, quad, mesh.ndim)
        self.sel_s = tensor_submodes(q, s, mesh.ndim)
        self.dim_q = self.basis.dim
        self.dim_s = len(self.sel_s)

        # uniform mesh: one operator set serves every element
        lo, hi = mesh.cell_lo[0], mesh.cell_hi[0]
        if not np.allclose(mesh.cell_hi - mesh.cell_lo, hi - lo, atol=1e-14):
            raise ValueError("element-batched assembly expects a uniform mesh")
        self.ops = ElementOps.build(self.basis, lo, hi)
        self.jac = self.ops.jac
        self.S = self.ops.S
        self.S_sq = self.S[self.sel_s, :]
        self.wq = self.ops.wq
        self.Vq = self.basis.V
        self.Vs = self.Vq[:, self.sel_s]
        # row enforcing the element-mean constraint: integral of each mode
        self.mean_row_q = self.wq @ self.Vq
        # node-wise mode outer products, flattened so the weighted mass of
        # every element is one GEMM: M_g = (w*g) @ phi_outer
        self.phi_outer = (self.Vq[:, :, None] * self.Vq[:, None, :]).reshape(
            len(self.wq), -1
        )

        # physical volume nodes, shape (E, nq) in 1D / (E, nq, 2) in 2D
        E = mesh.n_elements
        ref = self.basis.nodes if mesh.ndim == 2 else self.basis.nodes[:, None]
        nodes = mesh.cell_lo[:, None, :] + 0.5 * (
            mesh.cell_hi - mesh.cell_lo
        )[:, None, :] * (ref[None, :, :] + 1.0)
        self.x_nodes = nodes[:, :, 0] if mesh.ndim == 1 else nodes

        self.fg_at, self.source_at = problem.volume_kernels(self.x_nodes)
        # RK4 stages repeat times pairwise (k2/k3 share the midpoint, k4
        # matches the next step's k1), so one cached source halves the
        # forcing evaluations
        self._src_t = None
        self._src_val = None
        if problem.is_shifted:
            self.u0_nodes = problem.shift.u0(self.x_nodes)
            self.grad_u0_nodes = problem.shift.grad(self.x_nodes)
        else:
            self.u0_nodes = None
            self.grad_u0_nodes = None

        self._build_face_groups()

    # -- connectivity -------------------------------------------------------

    def _build_face_groups(self):
        mesh = self.mesh
        lifts = self.ops.lifts
        self.interior_groups = []
        boundary_by_face: dict[int, list[int]] = {}
        for f in mesh.faces:
            if f.is_boundary:
                boundary_by_face.setdefault(f.local1, []).append(f.elem1)
        for axis in range(mesh.ndim):
            pos_face, neg_face = 2 * axis + 1, 2 * axis
            group = [f for f in mesh.faces if not f.is_boundary and f.axis == axis]
            if not group:
                continue
            # the builders orient every interior face with side 1 on its
            # positive-axis face; the batched trace tables rely on that
            assert all(f.local1 == pos_face and f.local2 == neg_face for f in group)
            e1 = [f.elem1 for f in group]
            e2 = [f.elem2 for f in group]
            lift1, lift2 = lifts[pos_face], lifts[neg_face]
            self.interior_groups.append(
                {
                    "e1": np.asarray(e1),
                    "e2": np.asarray(e2),
                    "Dn1": lift1.dnormal,
                    "Dn2": lift2.dnormal,
                    "Ts1": lift1.trace[:, self.sel_s],
                    "Ts2": lift2.trace[:, self.sel_s],
                    "wf": lift1.weights,
                }
            )

        self.boundary_groups = []
        for local_face, elems in sorted(boundary_by_face.items()):
            elems = np.asarray(sorted(elems))
            lift = lifts[local_face]
            axis, side = local_face // 2, local_face % 2
            normal = np.zeros(mesh.ndim)
            normal[axis] = -1.0 if side == 0 else 1.0
            # face nodes of element e are element 0's nodes translated by the
            # cell offset (uniform mesh)
            offsets = mesh.cell_lo[elems] - mesh.cell_lo[0]
            points = lift.points[None, :, :] + offsets[:, None, :]
            if mesh.ndim == 1:
                points = points[:, :, 0]
            self.boundary_groups.append(
                {
                    "elems": elems,
                    "Dn": lift.dnormal,
                    "Ts": lift.trace[:, self.sel_s],
                    "wf": lift.weights,
                    "normal": normal,
                    "points": points,
                }
            )

    # -- initial data -------------------------------------------------------

    def project_initial(self) -> State:
        """Elementwise L^2 projection of the initial fields onto (q, s)."""
        g1 = self.problem.initial_u(self.x_nodes)
        g2 = self.problem.initial_v(self.x_nodes)
        u = ((self.wq * g1) @ self.Vq) / self.jac
        v = ((self.wq * g2) @ self.Vs) / self.jac
        return State(u=u, v=v, t=0.0)

    def project_field(self, values_at_nodes: np.ndarray, space: str = "u") -> np.ndarray:
        V = self.Vq if space == "u" else self.Vs
        return ((self.wq * values_at_nodes) @ V) / self.jac

    # -- nodal evaluation helpers (used by diagnostics) ----------------------

    def u_at_nodes(self, state: State) -> np.ndarray:
        return state.u @ self.Vq.T

    def v_at_nodes(self, state: State) -> np.ndarray:
        return state.v @ self.Vs.T

    def grad_u_at_nodes(self, state: State) -> np.ndarray:
        """Gradient node values, shape (E, nq) in 1D, (E, nq, 2) in 2D."""
        comps = [state.u @ self.ops.Dphys[d].T for d in range(self.mesh.ndim)]
        if self.mesh.ndim == 1:
            return comps[0]
        return np.stack(comps, axis=-1)

    def pad_v(self, v: np.ndarray) -> np.ndarray:
        """Exact embedding of degree-s coefficients into the degree-q space."""
        out = np.zeros((v.shape[0], self.dim_q))
        out[:, self.sel_s] = v
        return out

    # -- the right-hand side --------------------------------------------------

    def source(self, t: float):
        if self.source_at is None:
            return None
        if t != self._src_t:
            self._src_val = self.source_at(t)
            self._src_t = t
        return self._src_val

    def rhs(self, u: np.ndarray, v: np.ndarray, t: float):
        """du/dt and dv/dt for coefficient blocks (u, v) at time t."""
        c2 = self.c * self.c
        E = u.shape[0]
        u_nodes = u @ self.Vq.T
        f_nodes, g_nodes = self.fg_at(u_nodes)

        face_u = np.zeros((E, self.dim_q))
        face_v = np.zeros((E, self.dim_s))
        self._accumulate_faces(u, v, t, face_u, face_v, c2)

        # u equation: (c^2 S - M_g) w = face_u, du/dt = v + w
        wg = self.wq * g_nodes
        A = c2 * self.S[None, :, :] - (wg @ self.phi_outer).reshape(E, self.dim_q, self.dim_q)
        if self.mean_update == "constrained":
            A[:, 0, :] = self.mean_row_q
            face_u[:, 0] = 0.0
        else:
            active = np.max(np.abs(g_nodes), axis=1) < self.g_tol
            if np.any(active):
                A[active, 0, :] = self.mean_row_q
                face_u[active, 0] = 0.0
        try:
            w = np.linalg.solve(A, face_u[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            bad = self._first_singular(A)
            raise NumericalBreakdownError(
                f"singular element system at t={t:.6g} (element {bad})",
                element=bad,
                t=t,
            )
        if not np.all(np.isfinite(w)):
            bad = int(np.argwhere(~np.isfinite(w).all(axis=1))[0, 0])
            raise NumericalBreakdownError(
                f"non-finite update at t={t:.6g} (element {bad})", element=bad, t=t
            )
        dudt = self.pad_v(v) + w

        # v equation (diagonal mass)
        forced = self.source(t)
        src = f_nodes if forced is None else f_nodes + forced
        rhs_v = (self.wq * src) @ self.Vs
        rhs_v -= c2 * (u @ self.S_sq.T)
        rhs_v -= (self.theta * self.jac) * v
        rhs_v += face_v
        dvdt = rhs_v / self.jac
        return dudt, dvdt

    def rhs_state(self, state: State):
        return self.rhs(state.u, state.v, state.t)

    def _first_singular(self, A: np.ndarray) -> int:
        for e in range(A.shape[0]):
            if abs(np.linalg.det(A[e])) < 1e-300 or not np.all(np.isfinite(A[e])):
                return e
        return -1

    # -- face assembly --------------------------------------------------------

    def _face_trace_values(self, u, v, t):
        """Per-face trace data: yields interior and boundary group tuples.

        Interior: (group, v1, v2, a1, a2) with a_i = grad(u_i) . n_i (own
        outward normal).  Boundary with exterior data joins the interior
        path; (gamma, eta, a) faces are handled separately in
        _accumulate_faces.
        """
        for grp in self.interior_groups:
            v1 = v[grp["e1"]] @ grp["Ts1"].T
            v2 = v[grp["e2"]] @ grp["Ts2"].T
            a1 = u[grp["e1"]] @ grp["Dn1"].T
            a2 = u[grp["e2"]] @ grp["Dn2"].T
            yield grp, v1, v2, a1, a2

    def _boundary_exterior(self, grp, t):
        """Exterior traces (v2, a2) from the exact solution at a ghost face."""
        v2, grad2 = self.problem.boundary_data(grp["points"], t)
        n = grp["normal"]
        if self.mesh.ndim == 1:
            gradn_out = grad2 * n[0]
        else:
            gradn_out = grad2 @ n
        return v2, -gradn_out  # a2 is against the exterior normal -n

    def _accumulate_faces(self, u, v, t, face_u, face_v, c2):
        p = self.flux
        for grp, v1, v2, a1, a2 in self._face_trace_values(u, v, t):
            wf = grp["wf"]
            jump_gn = a1 + a2
            jump_vn = v1 - v2
            vstar = p.alpha * v1 + (1.0 - p.alpha) * v2 - p.tau * jump_gn
            gstar_n1 = (1.0 - p.alpha) * a1 - p.alpha * a2 - p.beta * jump_vn
            face_u[grp["e1"]] += c2 * ((wf * (vstar - v1)) @ grp["Dn1"])
            face_u[grp["e2"]] += c2 * ((wf * (vstar - v2)) @ grp["Dn2"])
            face_v[grp["e1"]] += c2 * ((wf * gstar_n1) @ grp["Ts1"])
            face_v[grp["e2"]] -= c2 * ((wf * gstar_n1) @ grp["Ts2"])

        for grp in self.boundary_groups:
            elems = grp["elems"]
            wf = grp["wf"]
            vh = v[elems] @ grp["Ts"].T
            an = u[elems] @ grp["Dn"].T
            if self.boundary == "exact":
                pb = self.boundary_flux
                v2, a2 = self._boundary_exterior(grp, t)
                jump_gn = an + a2
                jump_vn = vh - v2
                vstar = pb.alpha * vh + (1.0 - pb.alpha) * v2 - pb.tau * jump_gn
                gstar_n = (1.0 - pb.alpha) * an - pb.alpha * a2 - pb.beta * jump_vn
            else:
                bp: BoundaryParams = self.boundary
                rho = bp.gamma * vh + bp.eta * an
                vstar = vh - (bp.gamma - bp.a * bp.eta) * rho
                gstar_n = an - (bp.eta + bp.a * bp.gamma) * rho
            face_u[elems] += c2 * ((wf * (vstar - vh)) @ grp["Dn"])
            face_v[elems] += c2 * ((wf * gstar_n) @ grp["Ts"])


def compute_rhs(state: State, disc: Discretization):
    """Module-level wrapper: State in, (du/dt, dv/dt) out."""
    return disc.rhs(state.u, state.v, state.t)


def project_initial(disc: Discretization) -> State:
    return disc.project_initial()


def apply_mean_constraint(A: np.ndarray, rhs: np.ndarray, disc: Discretization, v_block: np.ndarray):
    """Replace the constant-mode row with int(du/dt - v) dx = 0 on one element.

    Exposed for direct testing; rhs() applies the same replacement in
    batched form (in the w = du/dt - v variable the right side is zero
    because the modal embedding of v is exact).
    """
    A = A.copy()
    rhs = rhs.copy()
    A[0, :] = disc.mean_row_q
    rhs[0] = disc.mean_row_q[disc.sel_s] @ v_block
    return A, rhs


# ---------------------------------------------------------------------------
# semidiscrete energy identity
# ---------------------------------------------------------------------------

def energy_rate_chain(disc: Discretization, state: State) -> float:
    """dE/dt through the chain rule, using the computed (du/dt, dv/dt).

    E is the discrete energy of the solved variable (shifted runs measure
    the shifted field); the potential term differentiates to
    -sum_k w_k f(u^h) du^h/dt.
    """
    du, dv = disc.rhs(state.u, state.v, state.t)
    c2 = disc.c * disc.c
    rate = disc.jac * float(np.sum(state.v * dv))
    rate += c2 * float(np.sum((state.u @ disc.S) * du))
    u_nodes = disc.u_at_nodes(state)
    du_nodes = du @ disc.Vq.T
    f_nodes, _ = disc.fg_at(u_nodes)
    rate -= float(np.sum(disc.wq * f_nodes * du_nodes))
    return rate


def energy_rate_closed(disc: Discretization, state: State) -> float:
    """dE/dt in closed form: volume dissipation, forcing power, face terms.

    Interior faces contribute -c^2 (beta |[[v]]|^2 + tau [[grad u]]^2);
    (gamma, eta, a) boundaries contribute
    -c^2 (gamma eta ((v*)^2 + ((grad u)*.n)^2) + b rho^2); boundaries fed
    by exterior data contribute the one-sided face functional directly.
    """
    u, v, t = state.u, state.v, state.t
    p = disc.flux
    c2 = disc.c * disc.c
    v_nodes = disc.v_at_nodes(state)
    rate = -disc.theta * float(np.sum(disc.wq * v_nodes * v_nodes))
    forced = disc.source(t)
    if forced is not None:
        rate += float(np.sum(disc.wq * forced * v_nodes))

    for grp, v1, v2, a1, a2 in disc._face_trace_values(u, v, t):
        wf = grp["wf"]
        jump_gn = a1 + a2
        jump_vn = v1 - v2
        rate -= c2 * float(np.sum(wf * (p.beta * jump_vn**2 + p.tau * jump_gn**2)))

    for grp in disc.boundary_groups:
        elems = grp["elems"]
        wf = grp["wf"]
        vh = v[elems] @ grp["Ts"].T
        an = u[elems] @ grp["Dn"].T
        if disc.boundary == "exact":
            pb = disc.boundary_flux
            v2, a2 = disc._boundary_exterior(grp, t)
            jump_gn = an + a2
            jump_vn = vh - v2
            vstar = pb.alpha * vh + (1.0 - pb.alpha) * v2 - pb.tau * jump_gn
            gstar_n = (1.0 - pb.alpha) * an - pb.alpha * a2 - pb.beta * jump_vn
            rate += c2 * float(np.sum(wf * (an * (vstar - vh) + vh * gstar_n)))
        else:
            bp: BoundaryParams = disc.boundary
            rho = bp.gamma * vh + bp.eta * an
            vstar = vh - (bp.gamma - bp.a * bp.eta) * rho
            gstar_n = an - (bp.eta + bp.a * bp.gamma) * rho
            rate -= c2 * float(
                np.sum(wf * (bp.gamma * bp.eta * (vstar**2 + gstar_n**2) + bp.b * rho**2))
            )
    return rate
