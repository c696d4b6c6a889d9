"""Semilinear wave problem catalog.

A Problem bundles the PDE data for u_tt + theta u_t = c^2 Lap(u) + f(u) + forcing:
coefficients, the nonlinearity triple (f, g = f/u, F with F' = -f), initial
fields, optional exact solution, boundary treatment, and an optional static
shift field u0 used to transform to zero initial displacement.

Coordinate conventions: 1D coordinates are plain float arrays; 2D
coordinates have shape (..., 2).  Gradients follow the same convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from .flux import BoundaryParams

SQ34 = math.sqrt(0.75)

PROBLEM_NAMES = (
    "sine-gordon",
    "cubic-defocusing",
    "cubic-focusing",
    "breather-forced",
    "manufactured-1d",
    "manufactured-2d",
    "kink",
    "antikink",
    "kink-kink",
    "kink-antikink",
    "focusing-2d",
)

# boundary treatments: explicit (gamma, eta, a) weights, periodic wrap, or
# weak imposition of the exact solution's traces as exterior data
BoundarySpec = Union[BoundaryParams, str]  # "periodic" | "exact"


@dataclass(frozen=True)
class Nonlinearity:
    """The triple (f, g, F) plus the derivatives the shift transform needs.

    g(u) = f(u)/u must be finite at u = 0; F' = -f with F(0) = 0.
    dg_bound bounds |dg/du| on the working range and also serves as the
    Lipschitz constant in the shifted-weight continuity check; g_scale
    scales the near-zero threshold that activates the mean-value
    constraint.
    """

    name: str
    f: Callable
    g: Callable
    F: Callable
    df: Callable = None
    d2f: Callable = None
    d3f: Callable = None
    dg_bound: float = 1.0
    g_scale: float = 1.0
    fg: Callable = None  # optional fused u -> (f(u), g(u)), one pass over u

    def eval_fg(self, u):
        if self.fg is not None:
            return self.fg(u)
        return self.f(u), self.g(u)


def sine_gordon_nonlinearity() -> Nonlinearity:
    def fused(u):
        u = np.asarray(u, dtype=float)
        s = np.sin(u)
        # sin(u)/u is well conditioned away from u = 0; only u == 0 needs
        # the limit value
        zero = u == 0.0
        g = -s / np.where(zero, 1.0, u)
        return -s, np.where(zero, -1.0, g)

    return Nonlinearity(
        name="sine-gordon",
        f=lambda u: -np.sin(u),
        # sinc evaluates sin(u)/u with the exact limit 1 at u = 0
        g=lambda u: -np.sinc(np.asarray(u) / np.pi),
        F=lambda u: 1.0 - np.cos(u),
        df=lambda u: -np.cos(u),
        d2f=np.sin,
        d3f=np.cos,
        dg_bound=0.5,
        g_scale=1.0,
        fg=fused,
    )


def cubic_nonlinearity(coef: float) -> Nonlinearity:
    """f(u) = coef u^3; coef = -4 is defocusing (F = u^4), +4 focusing."""
    def fused(u):
        u = np.asarray(u)
        g = coef * (u * u)
        return g * u, g

    return Nonlinearity(
        name="cubic-defocusing" if coef < 0 else "cubic-focusing",
        f=lambda u: coef * np.asarray(u) ** 3,
        g=lambda u: coef * np.asarray(u) ** 2,
        F=lambda u: -(coef / 4.0) * np.asarray(u) ** 4,
        df=lambda u: 3.0 * coef * np.asarray(u) ** 2,
        d2f=lambda u: 6.0 * coef * np.asarray(u),
        d3f=lambda u: np.full_like(np.asarray(u, dtype=float), 6.0 * coef),
        dg_bound=30.0 * abs(coef),
        g_scale=abs(coef),
        fg=fused,
    )


def linear_nonlinearity() -> Nonlinearity:
    """f = 0: the linear wave equation (mean constraint always active)."""
    zero = lambda u: np.zeros_like(np.asarray(u, dtype=float))
    return Nonlinearity("linear", f=zero, g=zero, F=zero, df=zero, d2f=zero, d3f=zero)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution with the derivatives needed for forcing/shift."""

    u: Callable  # (x, t) -> u
    u_t: Callable  # (x, t) -> du/dt
    grad: Callable  # (x, t) -> spatial gradient
    u_tt: Callable = None
    lap: Callable = None

    def __call__(self, x, t):
        return self.u(x, t), self.u_t(x, t)


@dataclass(frozen=True)
class ShiftField:
    """Static field u0(x) with its analytic gradient and Laplacian."""

    u0: Callable
    grad: Callable
    lap: Callable


@dataclass(frozen=True)
class Problem:
    name: str
    ndim: int
    c: float
    theta: float
    nonlin: Nonlinearity
    domain: tuple
    initial_u: Callable
    initial_v: Callable
    forcing: Optional[Callable] = None
    # optional fused forcing: factory(x_nodes) -> (t -> values), letting a
    # problem precompute the static spatial parts of its forcing once
    forcing_factory: Optional[Callable] = None
    exact: Optional[ExactSolution] = None
    boundary: BoundarySpec = field(default_factory=BoundaryParams.neumann)
    shift: Optional[ShiftField] = None
    # weight of the u-update on shifted runs: "reconstructed" evaluates
    # f(u)/u at the physical field u0 + w (the direct scheme rewritten in
    # the shifted variable); "rebased" uses (f(u0+w) - f(u0))/w, whose
    # zero crossings make the element systems intermittently singular
    shift_weight: str = "reconstructed"
    # element-mean determination of du/dt: "weighted" keeps the f(u)/u
    # weighted constant-mode equation (exact energy identity); "constrained"
    # always replaces it with the mean-value condition int(du/dt - v) = 0.
    # Nonlinearities whose weight is sign-definite but touches zero on the
    # solution's zero set (the defocusing cubic) lose half an order of
    # convergence under "weighted", so those problems default to
    # "constrained".
    mean_update: str = "weighted"

    @property
    def is_shifted(self) -> bool:
        return self.shift is not None

    def volume_kernels(self, x_nodes: np.ndarray):
        """Vectorized evaluators bound to fixed node coordinates.

        Returns (fg_at, source_at): fg_at maps node values of the solved
        variable to (f, g) node values; source_at(t) returns the full
        v-equation source at time t (None when the problem is unforced).
        """
        nl = self.nonlin
        if not self.is_shifted:
            return nl.eval_fg, self._source_kernel(x_nodes, None)

        # shifted variable w = u - u0: f_tilde(w) = f(u0 + w) - f(u0), and the
        # static source c^2 Lap(u0) + f(u0) moves into the v equation
        u0n = self.shift.u0(x_nodes)
        f0 = nl.f(u0n)
        static_src = self.c**2 * self.shift.lap(x_nodes) + f0

        if self.shift_weight == "reconstructed":

            def fg_at(w):
                f_full, g = nl.eval_fg(u0n + w)
                return f_full - f0, g

        elif self.shift_weight == "rebased":
            df0 = nl.df(u0n)
            d2f0 = nl.d2f(u0n)
            d3f0 = nl.d3f(u0n)

            def fg_at(w):
                w = np.asarray(w, dtype=float)
                ft = nl.f(u0n + w) - f0
                # cancellation guard: third-order Taylor of (f(u0+w)-f(u0))/w
                small = np.abs(w) < 1e-5
                taylor = df0 + w * (0.5 * d2f0 + w * (d3f0 / 6.0))
                g = np.where(small, taylor, ft / np.where(small, 1.0, w))
                return ft, g

        else:
            raise ValueError(f"unknown shift weight mode {self.shift_weight!r}")

        return fg_at, self._source_kernel(x_nodes, static_src)

    def _source_kernel(self, x_nodes, static_src):
        if self.forcing is None:
            if static_src is None:
                return None
            return lambda t: static_src
        if self.forcing_factory is not None:
            base = self.forcing_factory(x_nodes)
        else:
            base = lambda t: self.forcing(x_nodes, t)
        if static_src is None:
            return base
        return lambda t: static_src + base(t)

    def boundary_data(self, points: np.ndarray, t: float):
        """Exterior (v, grad u) traces of the exact solution at boundary points."""
        if self.exact is None or self.exact.grad is None:
            raise ValueError(f"problem {self.name!r} has no exact traces for its boundary")
        return self.exact.u_t(points, t), self.exact.grad(points, t)


def shifted(problem: Problem, shift_field: ShiftField = None, weight: str = "reconstructed") -> Problem:
    """Transform to zero initial displacement via u = u0(x) + w.

    u0 defaults to the problem's initial displacement (required to match
    it).  The returned problem solves for w: zero initial displacement,
    unchanged initial velocity, effective nonlinearity f(u0 + w) - f(u0),
    and the static source c^2 Lap(u0) + f(u0) folded into the forcing.
    The exact solution (when present) is carried through as u - u0.
    Diagnostics reconstruct the physical field as u0 + w.

    `weight` picks the nonlinear weight of the u-update (see Problem);
    the default keeps the update identical to the unshifted scheme.
    """
    if problem.is_shifted:
        raise ValueError("problem is already shifted")
    if shift_field is None:
        if problem.exact is None or problem.exact.lap is None:
            raise ValueError("default shift needs an exact solution with a Laplacian")
        ex = problem.exact
        shift_field = ShiftField(
            u0=lambda x: ex.u(x, 0.0),
            grad=lambda x: ex.grad(x, 0.0),
            lap=lambda x: ex.lap(x, 0.0),
        )
    if problem.nonlin.df is None or problem.nonlin.d2f is None:
        raise ValueError("shift transform needs f', f'' of the nonlinearity")

    ex = problem.exact
    if ex is not None:
        sf = shift_field
        shifted_exact = ExactSolution(
            u=lambda x, t: ex.u(x, t) - sf.u0(x),
            u_t=ex.u_t,
            grad=(None if ex.grad is None else (lambda x, t: ex.grad(x, t) - sf.grad(x))),
            u_tt=ex.u_tt,
            lap=(None if ex.lap is None else (lambda x, t: ex.lap(x, t) - sf.lap(x))),
        )
    else:
        shifted_exact = None

    if problem.ndim == 1:
        zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    else:
        zero = lambda x: np.zeros(np.asarray(x).shape[:-1])
    return replace(
        problem,
        initial_u=zero,
        initial_v=problem.initial_v,
        exact=shifted_exact,
        shift=shift_field,
        shift_weight=weight,
    )


def manufactured(problem: Problem, exact: ExactSolution, forcing_factory=None) -> Problem:
    """Attach the forcing that makes `exact` solve the problem's equation.

    exact must provide u_tt and lap; the forcing is
    u_tt + theta u_t - c^2 Lap(u) - f(u), and initial data are taken from
    the exact solution at t = 0.  forcing_factory may supply an
    algebraically equivalent fused form for the solver hot path (the
    plain forcing stays as the reference definition).
    """
    if exact.u_tt is None or exact.lap is None:
        raise ValueError("manufactured solutions need analytic u_tt and Lap(u)")
    c2 = problem.c**2
    theta = problem.theta
    f = problem.nonlin.f

    def forcing(x, t):
        return (
            exact.u_tt(x, t)
            + theta * exact.u_t(x, t)
            - c2 * exact.lap(x, t)
            - f(exact.u(x, t))
        )

    return replace(
        problem,
        forcing=forcing,
        forcing_factory=forcing_factory,
        exact=exact,
        initial_u=lambda x: exact.u(x, 0.0),
        initial_v=lambda x: exact.u_t(x, 0.0),
    )


# ---------------------------------------------------------------------------
# exact solutions of the sine-Gordon equation
# ---------------------------------------------------------------------------

def _breather_parts(x, t):
    G = SQ34 * np.cos(0.5 * t)
    Gp = -0.5 * SQ34 * np.sin(0.5 * t)
    H = 0.5 * np.cosh(SQ34 * np.asarray(x))
    Hp = 0.5 * SQ34 * np.sinh(SQ34 * np.asarray(x))
    R = H * H + G * G
    return G, Gp, H, Hp, R


def exact_breather(x, t):
    """Standing breather u = 4 atan(sqrt(3/4) cos(t/2) / (cosh(sqrt(3/4) x)/2))."""
    G, Gp, H, _, R = _breather_parts(x, t)
    return 4.0 * np.arctan2(G, H), 4.0 * Gp * H / R


def breather_solution() -> ExactSolution:
    def u(x, t):
        G, _, H, _, _ = _breather_parts(x, t)
        return 4.0 * np.arctan2(G, H)

    def u_t(x, t):
        G, Gp, H, _, R = _breather_parts(x, t)
        return 4.0 * Gp * H / R

    def grad(x, t):
        G, _, H, Hp, R = _breather_parts(x, t)
        return -4.0 * G * Hp / R

    def u_tt(x, t):
        G, Gp, H, _, R = _breather_parts(x, t)
        Gpp = -0.25 * G
        return 4.0 * H * (Gpp * R - 2.0 * G * Gp * Gp) / (R * R)

    def lap(x, t):
        G, _, H, Hp, R = _breather_parts(x, t)
        Hpp = 0.75 * H  # H'' = (sqrt(3/4))^2 H
        return -4.0 * G * (Hpp * R - 2.0 * H * Hp * Hp) / (R * R)

    return ExactSolution(u=u, u_t=u_t, grad=grad, u_tt=u_tt, lap=lap)


def exact_kink(x, t, mu: float, anti: bool = False):
    """Kink (or antikink) u = 4 atan(exp(+-(x - mu t)/sqrt(1 - mu^2)))."""
    sol = kink_solution(mu, anti)
    return sol.u(x, t), sol.u_t(x, t)


def kink_solution(mu: float, anti: bool = False, x0: float = 0.0) -> ExactSolution:
    if not abs(mu) < 1.0:
        raise ValueError(f"kink speed must satisfy |mu| < 1, got {mu}")
    L = math.sqrt(1.0 - mu * mu)
    sigma = -1.0 if anti else 1.0

    def z(x, t):
        return sigma * (np.asarray(x) - x0 - mu * t) / L

    def u(x, t):
        return 4.0 * np.arctan(np.exp(z(x, t)))

    def u_t(x, t):
        return -2.0 * sigma * mu / L / np.cosh(z(x, t))

    def grad(x, t):
        return 2.0 * sigma / L / np.cosh(z(x, t))

    def u_tt(x, t):
        zz = z(x, t)
        return -2.0 * (mu / L) ** 2 * np.tanh(zz) / np.cosh(zz)

    def lap(x, t):
        zz = z(x, t)
        return -2.0 / (L * L) * np.tanh(zz) / np.cosh(zz)

    return ExactSolution(u=u, u_t=u_t, grad=grad, u_tt=u_tt, lap=lap)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def sine_gordon(theta: float = 0.0) -> Problem:
    """Sine-Gordon on (-20, 20) with standing-breather initial data.

    With theta = 0 the breather is the exact solution; walls are no-flux.
    """
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    sol = breather_solution()
    return Problem(
        name="sine-gordon",
        ndim=1,
        c=1.0,
        theta=theta,
        nonlin=sine_gordon_nonlinearity(),
        domain=(-20.0, 20.0),
        initial_u=lambda x: sol.u(x, 0.0),
        initial_v=lambda x: sol.u_t(x, 0.0),
        exact=sol if theta == 0.0 else None,
        boundary=BoundaryParams.neumann(),
    )


def breather_forced(theta: float = 1.0) -> Problem:
    """Damped sine-Gordon forced so the standing breather stays exact.

    The breather solves the undamped equation, so the forcing reduces to
    theta u_t; the fused factory precomputes the static cosh profile.
    """
    def factory(x):
        H = 0.5 * np.cosh(SQ34 * np.asarray(x))
        H2 = H * H

        def at(t):
            G = SQ34 * math.cos(0.5 * t)
            Gp = -0.5 * SQ34 * math.sin(0.5 * t)
            return theta * 4.0 * Gp * H / (H2 + G * G)

        return at

    base = Problem(
        name="breather-forced",
        ndim=1,
        c=1.0,
        theta=theta,
        nonlin=sine_gordon_nonlinearity(),
        domain=(-20.0, 20.0),
        initial_u=None,
        initial_v=None,
        boundary="exact",
    )
    return manufactured(base, breather_solution(), forcing_factory=factory)


def manufactured_1d(theta: float = 1.0) -> Problem:
    """Damped sine-Gordon with the traveling manufactured solution e^{sin(x - t)}."""

    def parts(x, t):
        w = np.asarray(x) - t
        return w, np.exp(np.sin(w))

    sol = ExactSolution(
        u=lambda x, t: parts(x, t)[1],
        u_t=lambda x, t: -np.cos(parts(x, t)[0]) * parts(x, t)[1],
        grad=lambda x, t: np.cos(parts(x, t)[0]) * parts(x, t)[1],
        u_tt=lambda x, t: (np.cos(parts(x, t)[0]) ** 2 - np.sin(parts(x, t)[0]))
        * parts(x, t)[1],
        lap=lambda x, t: (np.cos(parts(x, t)[0]) ** 2 - np.sin(parts(x, t)[0]))
        * parts(x, t)[1],
    )
    def factory(x):
        x = np.asarray(x)

        # traveling wave with c = 1: u_tt = u_xx, so the forcing collapses
        # to theta u_t + sin(u)
        def at(t):
            w = x - t
            E = np.exp(np.sin(w))
            return -theta * np.cos(w) * E + np.sin(E)

        return at

    base = Problem(
        name="manufactured-1d",
        ndim=1,
        c=1.0,
        theta=theta,
        nonlin=sine_gordon_nonlinearity(),
        domain=(-20.0, 20.0),
        initial_u=None,
        initial_v=None,
        boundary="exact",
    )
    return manufactured(base, sol, forcing_factory=factory)


def manufactured_2d() -> Problem:
    """Defocusing cubic on the unit square with u = cos(2pi x)cos(2pi y)sin(2pi t).

    Boundary data are the exact traces, imposed weakly through the
    interface flux (the solution also satisfies homogeneous Neumann
    conditions, but a non-dissipative wall degrades the upwind fluxes'
    observed order).
    """
    tp = 2.0 * math.pi

    def cc(x):
        x = np.asarray(x)
        return np.cos(tp * x[..., 0]) * np.cos(tp * x[..., 1])

    def grad(x, t):
        x = np.asarray(x)
        s = np.sin(tp * t)
        gx = -tp * np.sin(tp * x[..., 0]) * np.cos(tp * x[..., 1]) * s
        gy = -tp * np.cos(tp * x[..., 0]) * np.sin(tp * x[..., 1]) * s
        return np.stack([gx, gy], axis=-1)

    sol = ExactSolution(
        u=lambda x, t: cc(x) * np.sin(tp * t),
        u_t=lambda x, t: tp * cc(x) * np.cos(tp * t),
        grad=grad,
        u_tt=lambda x, t: -(tp**2) * cc(x) * np.sin(tp * t),
        lap=lambda x, t: -2.0 * tp**2 * cc(x) * np.sin(tp * t),
    )
    def factory(x):
        C = cc(x)
        four_pi2 = 4.0 * math.pi**2

        # u_tt - lap(u) = 4 pi^2 u for this separable solution, so the
        # forcing is 4 pi^2 u + 4 u^3
        def at(t):
            u = C * math.sin(tp * t)
            return u * (four_pi2 + 4.0 * (u * u))

        return at

    base = Problem(
        name="manufactured-2d",
        ndim=2,
        c=1.0,
        theta=0.0,
        nonlin=cubic_nonlinearity(-4.0),
        domain=(0.0, 1.0, 0.0, 1.0),
        initial_u=None,
        initial_v=None,
        boundary="exact",
        mean_update="constrained",
    )
    return manufactured(base, sol, forcing_factory=factory)


def kink_problem(mu: float = 0.2, anti: bool = False) -> Problem:
    sol = kink_solution(mu, anti)
    return Problem(
        name="antikink" if anti else "kink",
        ndim=1,
        c=1.0,
        theta=0.0,
        nonlin=sine_gordon_nonlinearity(),
        domain=(-20.0, 20.0),
        initial_u=lambda x: sol.u(x, 0.0),
        initial_v=lambda x: sol.u_t(x, 0.0),
        exact=sol,
        boundary=BoundaryParams.neumann(),
    )


def kink_collision(mu: float = 0.2, anti: bool = False) -> Problem:
    """Superposed kink pair: kink at -10 moving right, (anti)kink at +10 moving left.

    The superposition is initial data only, not an exact solution.
    """
    right = kink_solution(mu, anti=False, x0=-10.0)
    left = kink_solution(-mu, anti=anti, x0=10.0)
    return Problem(
        name="kink-antikink" if anti else "kink-kink",
        ndim=1,
        c=1.0,
        theta=0.0,
        nonlin=sine_gordon_nonlinearity(),
        domain=(-20.0, 20.0),
        initial_u=lambda x: right.u(x, 0.0) + left.u(x, 0.0),
        initial_v=lambda x: right.u_t(x, 0.0) + left.u_t(x, 0.0),
        boundary=BoundaryParams.neumann(),
    )


def cubic_2d(sign: str, theta: float = 0.0, periodic: bool = False) -> Problem:
    """Cubic problem on the unit square with cos(2pi x)cos(2pi y) initial data."""
    coef = -4.0 if sign == "defocusing" else 4.0
    tp = 2.0 * math.pi

    def cc(x):
        x = np.asarray(x)
        return np.cos(tp * x[..., 0]) * np.cos(tp * x[..., 1])

    if sign == "defocusing":
        name = "cubic-defocusing"
    else:
        name = "focusing-2d" if periodic else "cubic-focusing"
    return Problem(
        name=name,
        ndim=2,
        c=1.0,
        theta=theta,
        nonlin=cubic_nonlinearity(coef),
        domain=(0.0, 1.0, 0.0, 1.0),
        initial_u=lambda x: -cc(x),
        initial_v=lambda x: cc(x),
        boundary="periodic" if periodic else BoundaryParams.neumann(),
        mean_update="constrained",
    )


def cubic(sign: str) -> Problem:
    """Catalog entry for the cubic problems by sign keyword."""
    if sign not in ("defocusing", "focusing"):
        raise ValueError(f"sign must be 'defocusing' or 'focusing', got {sign!r}")
    return cubic_2d(sign)


def linear_wave() -> Problem:
    """f = 0 on (-20, 20); exercises the always-active mean constraint."""
    return Problem(
        name="linear",
        ndim=1,
        c=1.0,
        theta=0.0,
        nonlin=linear_nonlinearity(),
        domain=(-20.0, 20.0),
        initial_u=lambda x: np.exp(-np.asarray(x) ** 2),
        initial_v=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        boundary=BoundaryParams.neumann(),
    )


def by_name(name: str, theta: float = None, mu: float = 0.2) -> Problem:
    """Catalog lookup by CLI name; theta defaults per scenario."""
    th = lambda default: default if theta is None else theta
    table = {
        "sine-gordon": lambda: sine_gordon(th(0.0)),
        "breather-forced": lambda: breather_forced(th(1.0)),
        "manufactured-1d": lambda: manufactured_1d(th(1.0)),
        "manufactured-2d": manufactured_2d,
        "kink": lambda: kink_problem(mu, anti=False),
        "antikink": lambda: kink_problem(mu, anti=True),
        "kink-kink": lambda: kink_collision(mu, anti=False),
        "kink-antikink": lambda: kink_collision(mu, anti=True),
        "cubic-defocusing": lambda: cubic_2d("defocusing", th(0.0)),
        "cubic-focusing": lambda: cubic_2d("focusing", th(0.0)),
        "focusing-2d": lambda: cubic_2d("focusing", th(0.0), periodic=True),
    }
    if name not in table:
        raise ValueError(f"unknown problem {name!r}; expected one of {PROBLEM_NAMES}")
    return table[name]()
