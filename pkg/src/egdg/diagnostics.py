"""Discrete energy, L^2 errors against exact solutions, and convergence rates.

The discrete energy per element is
1/2 int (v^h)^2 + 1/2 c^2 int |grad u^h|^2 + sum_k w_k F(u^h(x_k)),
all evaluated with the element quadrature rule.  Shifted runs report the
physical field u = u0 + w (the solved variable plus the static shift), so
energies are comparable between shifted and direct formulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .semidisc import Discretization, State


@dataclass(frozen=True)
class EnergySample:
    t: float
    E: float
    kinetic: float
    strain: float
    potential: float


@dataclass
class ErrorRecord:
    N: int
    h: float
    q: int
    s: int
    flux: str
    l2_error_u: float
    rate: Optional[float] = None


def discrete_energy(disc: Discretization, state: State) -> EnergySample:
    """Total discrete energy and its parts at the state's time."""
    problem = disc.problem
    v_nodes = disc.v_at_nodes(state)
    u_nodes = disc.u_at_nodes(state)
    grad = disc.grad_u_at_nodes(state)
    if problem.is_shifted:
        # reconstruct the physical field; nonlin already holds the base triple
        u_nodes = u_nodes + disc.u0_nodes
        grad = grad + disc.grad_u0_nodes
    F = problem.nonlin.F
    kinetic = 0.5 * float(np.sum(disc.wq * v_nodes**2))
    if disc.mesh.ndim == 1:
        grad_sq = grad**2
    else:
        grad_sq = np.sum(grad**2, axis=-1)
    strain = 0.5 * disc.c**2 * float(np.sum(disc.wq * grad_sq))
    potential = float(np.sum(disc.wq * F(u_nodes)))
    return EnergySample(
        t=state.t,
        E=kinetic + strain + potential,
        kinetic=kinetic,
        strain=strain,
        potential=potential,
    )


def l2_error(disc: Discretization, state: State, t: float = None) -> float:
    """L^2 norm of u^h - u_exact via the element quadrature rule.

    For shifted problems the solved variable is compared against the
    shifted exact solution, which equals the physical-field error exactly.
    """
    problem = disc.problem
    if problem.exact is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    t = state.t if t is None else t
    u_nodes = disc.u_at_nodes(state)
    u_ex = problem.exact.u(disc.x_nodes, t)
    return math.sqrt(float(np.sum(disc.wq * (u_nodes - u_ex) ** 2)))


def pairwise_rate(e1: float, e2: float, N1: int, N2: int) -> float:
    """Observed order log(e1/e2) / log(N2/N1) between two resolutions."""
    if e1 <= 0 or e2 <= 0 or N1 <= 0 or N2 <= 0:
        raise ValueError("errors and resolutions must be positive")
    if N1 == N2:
        raise ValueError("resolutions must differ")
    return math.log(e1 / e2) / math.log(N2 / N1)


def regression_rate(records: list, count: int = None) -> float:
    """Least-squares slope of log(error) vs log(h) over the finest grids.

    records may be ErrorRecord instances or (h, error) pairs; count limits
    the fit to the `count` smallest h (all records when None).
    """
    data = []
    for r in records:
        if isinstance(r, ErrorRecord):
            data.append((r.h, r.l2_error_u))
        else:
            data.append((float(r[0]), float(r[1])))
    data.sort(key=lambda he: he[0])
    if count is not None:
        data = data[:count]
    if len(data) < 2:
        raise ValueError("regression rate needs at least two records")
    h = np.array([d[0] for d in data])
    e = np.array([d[1] for d in data])
    if np.any(h <= 0) or np.any(e <= 0):
        raise ValueError("mesh sizes and errors must be positive")
    slope = np.polyfit(np.log(h), np.log(e), 1)[0]
    return float(slope)


def attach_rates(records: list) -> list:
    """Fill the pairwise rate column of an N-ordered record list in place."""
    ordered = sorted(records, key=lambda r: r.N)
    for prev, cur in zip(ordered, ordered[1:]):
        cur.rate = pairwise_rate(prev.l2_error_u, cur.l2_error_u, prev.N, cur.N)
    return ordered
