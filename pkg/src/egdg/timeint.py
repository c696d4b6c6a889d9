"""Classical four-stage Runge-Kutta time integration with fixed steps.

The step size is either given directly or derived from the mesh as
dt = kappa * h / (2 pi) with h the smallest cell size.  The march always
lands exactly on the final time by shortening the last step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NumericalBreakdownError
from .semidisc import State


@dataclass(frozen=True)
class StepRule:
    """Fixed step (dt) or mesh-proportional step dt = kappa h / (2 pi)."""

    kind: str  # "fixed" | "proportional"
    value: float

    def __post_init__(self):
        if self.kind not in ("fixed", "proportional"):
            raise ValueError(f"unknown step rule {self.kind!r}")
        if self.value <= 0:
            raise ValueError(f"step parameter must be > 0, got {self.value}")

    @classmethod
    def fixed(cls, dt: float) -> "StepRule":
        return cls("fixed", dt)

    @classmethod
    def proportional(cls, kappa: float) -> "StepRule":
        return cls("proportional", kappa)

    def dt(self, h: float = None) -> float:
        if self.kind == "fixed":
            return self.value
        if h is None:
            raise ValueError("proportional step rule needs the mesh size h")
        return self.value * h / (2.0 * math.pi)


def _axpy(y, a, x):
    """y + a*x over floats, arrays, or tuples of arrays."""
    if isinstance(y, tuple):
        return tuple(yi + a * xi for yi, xi in zip(y, x))
    return y + a * x


def rk4_step(y, t: float, dt: float, f):
    """One classical RK4 step for y' = f(y, t).

    y may be a float, an ndarray, or a tuple of ndarrays; f must return
    the matching derivative structure.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    k1 = f(y, t)
    k2 = f(_axpy(y, 0.5 * dt, k1), t + 0.5 * dt)
    k3 = f(_axpy(y, 0.5 * dt, k2), t + 0.5 * dt)
    k4 = f(_axpy(y, dt, k3), t + dt)
    out = _axpy(y, dt / 6.0, k1)
    out = _axpy(out, dt / 3.0, k2)
    out = _axpy(out, dt / 3.0, k3)
    return _axpy(out, dt / 6.0, k4)


def n_steps_for(T: float, dt: float) -> int:
    """Number of steps to reach T: ceil(T/dt) with a roundoff guard."""
    return max(1, int(math.ceil(T / dt - 1e-9)))


def integrate(
    state0: State,
    T: float,
    rule: StepRule,
    rhs,
    h: float = None,
    observer=None,
    stride: int = 1,
):
    """March state0 to time T; returns (final_state, observation_log).

    rhs(u, v, t) -> (du, dv).  The observer, when given, is called with
    (step, t, State) at step 0, every `stride`-th step, and at the final
    step; non-None return values are collected into the log.  A numerical
    breakdown aborts the march and re-raises with the partial log attached.
    """
    duration = T - state0.t
    if duration <= 0:
        raise ValueError(f"final time {T} is not ahead of t0={state0.t}")
    dt = rule.dt(h)
    n = n_steps_for(duration, dt)
    y = (state0.u.copy(), state0.v.copy())
    t = state0.t
    log = []

    def observe(step, t, y):
        if observer is None:
            return
        out = observer(step, t, State(y[0], y[1], t))
        if out is not None:
            log.append(out)

    f = lambda y, t: rhs(y[0], y[1], t)
    observe(0, t, y)
    try:
        for step in range(1, n + 1):
            dt_k = dt if step < n else T - t
            y = rk4_step(y, t, dt_k, f)
            t = t + dt_k
            if step % stride == 0 or step == n:
                observe(step, t, y)
    except NumericalBreakdownError as err:
        err.log = log
        raise
    return State(y[0], y[1], t), log
