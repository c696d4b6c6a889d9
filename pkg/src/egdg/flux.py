"""Numerical traces (v*, grad(u)*) on interior faces and physical boundaries.

Interior faces use the one-parameter-family trace

    v*       = alpha v1 + (1 - alpha) v2 - tau [[grad u]]
    grad(u)* = (1 - alpha) grad(u1) + alpha grad(u2) - beta [[v]]

with jump conventions [[v]] = v1 n1 + v2 n2 (a vector) and
[[grad u]] = grad(u1).n1 + grad(u2).n2 (a scalar); n2 = -n1.  Side 1 is
the element on the negative side of the face axis.  alpha in [0,1] and
tau, beta >= 0 give a non-positive interface energy rate
-(beta |[[v]]|^2 + tau [[grad u]]^2) per unit face area.

Physical boundaries realize gamma u_t + eta grad(u).n = 0 through

    rho      = gamma v + eta grad(u).n
    v*       = v - (gamma - a eta) rho
    grad(u)* = grad(u) - (eta + a gamma) rho n

which satisfies gamma v* + eta grad(u)*.n = 0 identically and dissipates
whenever b = (1 - a^2) gamma eta + a (gamma - eta) >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRESET_NAMES = ("central", "alternating", "sommerfeld", "alt-sommerfeld")


@dataclass(frozen=True)
class FluxParams:
    """Interface trace parameters (alpha, tau, beta) plus a preset label."""

    alpha: float
    tau: float
    beta: float
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.tau < 0.0 or self.beta < 0.0:
            raise ValueError(f"tau and beta must be >= 0, got ({self.tau}, {self.beta})")

    @classmethod
    def central(cls) -> "FluxParams":
        return cls(0.5, 0.0, 0.0, "central")

    @classmethod
    def alternating(cls, alpha: float = 0.0) -> "FluxParams":
        if alpha not in (0.0, 1.0):
            raise ValueError("alternating preset needs alpha in {0, 1}")
        return cls(alpha, 0.0, 0.0, "alternating")

    @classmethod
    def sommerfeld(cls, xi: float = 1.0) -> "FluxParams":
        if xi <= 0:
            raise ValueError(f"splitting parameter must be > 0, got {xi}")
        return cls(0.5, xi / 2.0, 1.0 / (2.0 * xi), "sommerfeld")

    @classmethod
    def alt_sommerfeld(cls, xi: float = 1.0) -> "FluxParams":
        if xi <= 0:
            raise ValueError(f"splitting parameter must be > 0, got {xi}")
        return cls(0.0, xi / 2.0, 1.0 / (2.0 * xi), "alt-sommerfeld")

    @classmethod
    def preset(cls, name: str, xi: float = 1.0) -> "FluxParams":
        table = {
            "central": cls.central,
            "alternating": cls.alternating,
            "sommerfeld": lambda: cls.sommerfeld(xi),
            "alt-sommerfeld": lambda: cls.alt_sommerfeld(xi),
        }
        if name not in table:
            raise ValueError(f"unknown flux preset {name!r}; expected one of {PRESET_NAMES}")
        return table[name]()


@dataclass(frozen=True)
class BoundaryParams:
    """Boundary condition weights (gamma, eta) with gamma^2 + eta^2 = 1, plus a."""

    gamma: float
    eta: float
    a: float = 0.0

    def __post_init__(self):
        if self.gamma < 0 or self.eta < 0:
            raise ValueError("gamma and eta must be >= 0")
        norm = np.hypot(self.gamma, self.eta)
        if norm == 0:
            raise ValueError("gamma and eta cannot both vanish")
        object.__setattr__(self, "gamma", float(self.gamma / norm))
        object.__setattr__(self, "eta", float(self.eta / norm))
        if self.b < 0:
            raise ValueError(
                f"boundary parameters give negative dissipation weight b={self.b:.3e}"
            )

    @property
    def b(self) -> float:
        g, e, a = self.gamma, self.eta, self.a
        return (1.0 - a * a) * g * e + a * (g - e)

    @classmethod
    def dirichlet(cls) -> "BoundaryParams":
        return cls(1.0, 0.0, 0.0)

    @classmethod
    def neumann(cls) -> "BoundaryParams":
        return cls(0.0, 1.0, 0.0)


@dataclass(frozen=True)
class FaceTrace:
    """Two-sided data on a face point.

    v_minus/grad_minus belong to side 1 (normal n1); v_plus/grad_plus to
    side 2.  gradn_* are the gradients dotted with each side's own outward
    normal.  In 1D the gradients are single-component arrays.
    """

    v_minus: float
    v_plus: float
    grad_minus: np.ndarray
    grad_plus: np.ndarray
    n1: np.ndarray

    @property
    def gradn_minus(self) -> float:
        return float(np.dot(self.grad_minus, self.n1))

    @property
    def gradn_plus(self) -> float:
        return float(-np.dot(self.grad_plus, self.n1))

    @property
    def jump_v(self) -> np.ndarray:
        """[[v]] = v1 n1 + v2 n2 (a vector)."""
        return (self.v_minus - self.v_plus) * self.n1

    @property
    def jump_gradn(self) -> float:
        """[[grad u]] = grad(u1).n1 + grad(u2).n2 (a scalar)."""
        return self.gradn_minus + self.gradn_plus


def interior_flux(trace: FaceTrace, p: FluxParams, n1=None):
    """Evaluate (v*, grad(u)*) on an interior face.

    Returns the scalar v* and the full grad(u)* vector.  Consistent: when
    both sides agree the shared trace is returned for every parameter
    choice.
    """
    if n1 is None:
        n1 = trace.n1
    jv = trace.jump_v
    jg = trace.jump_gradn
    v_star = p.alpha * trace.v_minus + (1.0 - p.alpha) * trace.v_plus - p.tau * jg
    grad_star = (
        (1.0 - p.alpha) * np.asarray(trace.grad_minus, dtype=float)
        + p.alpha * np.asarray(trace.grad_plus, dtype=float)
        - p.beta * jv
    )
    return v_star, grad_star


def boundary_flux(v: float, grad: np.ndarray, bp: BoundaryParams, n: np.ndarray):
    """Evaluate (v*, grad(u)*) on a physical boundary face from one-sided data.

    The pair satisfies gamma v* + eta grad(u)*.n = 0 exactly.
    """
    n = np.asarray(n, dtype=float)
    grad = np.asarray(grad, dtype=float)
    gradn = float(np.dot(grad, n))
    rho = bp.gamma * v + bp.eta * gradn
    v_star = v - (bp.gamma - bp.a * bp.eta) * rho
    grad_star = grad - (bp.eta + bp.a * bp.gamma) * rho * n
    return v_star, grad_star


def interface_energy_rate(trace: FaceTrace, p: FluxParams, c: float = 1.0) -> float:
    """Interface contribution to dE/dt per unit face area.

    Equals the directly assembled two-element boundary functional and is
    -c^2 (beta |[[v]]|^2 + tau [[grad u]]^2) <= 0 for admissible parameters.
    """
    jv = trace.jump_v
    jg = trace.jump_gradn
    return -(c * c) * (p.beta * float(np.dot(jv, jv)) + p.tau * jg * jg)


def two_element_energy_functional(trace: FaceTrace, p: FluxParams, c: float = 1.0) -> float:
    """Brute-force evaluation of the two-element face energy functional.

    Sums c^2 grad(u_i).n_i (v* - v_i) + c^2 v_i grad(u)*.n_i over both
    sides term by term; used as the independent check of
    interface_energy_rate.
    """
    v_star, grad_star = interior_flux(trace, p)
    n1 = trace.n1
    c2 = c * c
    j = c2 * trace.gradn_minus * (v_star - trace.v_minus)
    j += c2 * trace.v_minus * float(np.dot(grad_star, n1))
    j += c2 * trace.gradn_plus * (v_star - trace.v_plus)
    j += c2 * trace.v_plus * float(np.dot(grad_star, -n1))
    return j
