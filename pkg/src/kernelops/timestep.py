"""Explicit SSP Runge-Kutta marching for the kernel-operator right-hand sides.

Schemes are the optimal SSP methods in Shu-Osher convex-combination form
(forward Euler, Heun, and the three-stage third-order method).  Stage
right-hand sides are evaluated at the standard stage times; optional
``pin`` callbacks re-impose boundary data on stage states at those times,
which 2D meshes need for nodes that belong to a single line family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RKScheme:
    """SSP scheme of the given order in Shu-Osher form.

    Each row of ``combos`` is (weight on u^n, weight on previous stage,
    Euler-step weight); weights are nonnegative and the first two sum to 1.
    """

    order: int

    def __post_init__(self):
        if self.order not in (1, 2, 3):
            raise ValueError("SSP order must be 1, 2 or 3")

    @property
    def stage_times(self) -> tuple[float, ...]:
        return {1: (0.0,), 2: (0.0, 1.0), 3: (0.0, 1.0, 0.5)}[self.order]


def ssp_step(scheme: RKScheme, rhs, state, t: float, dt: float, pin=None):
    """One SSP step of ``state`` from t to t + dt.

    ``rhs(state, time)`` must be total on the interval; ``pin(state, time)``
    (optional) overwrites boundary-data entries in place and is applied to
    every freshly combined stage at the time its rhs will see.
    """

    def pinned(y, time):
        if pin is not None:
            pin(y, time)
        return y

    if scheme.order == 1:
        return pinned(state + dt * rhs(state, t), t + dt)
    if scheme.order == 2:
        u1 = pinned(state + dt * rhs(state, t), t + dt)
        return pinned(0.5 * state + 0.5 * (u1 + dt * rhs(u1, t + dt)), t + dt)
    u1 = pinned(state + dt * rhs(state, t), t + dt)
    u2 = pinned(0.75 * state + 0.25 * (u1 + dt * rhs(u1, t + dt)), t + 0.5 * dt)
    return pinned(
        state / 3.0 + (2.0 / 3.0) * (u2 + dt * rhs(u2, t + 0.5 * dt)), t + dt
    )


@dataclass(frozen=True)
class TimeLoopConfig:
    """Fixed-step loop landing exactly on the final time.

    dt = cfl * dx / |c| for advection-dominated problems and cfl * dx
    otherwise, with dx the uniform interior spacing.  The last step is
    clamped onto T; operator contexts are rebuilt for it since the kernel
    rate is tied to the step size.
    """

    cfl: float
    t_final: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0.0 or self.t_final <= 0.0:
            raise ValueError("dt and t_final must be positive")

    @property
    def n_steps(self) -> int:
        ratio = self.t_final / self.dt
        return max(1, math.ceil(ratio * (1.0 - 1e-12)))

    def step_sizes(self):
        """Yield (t, dt) pairs covering [0, T] exactly."""
        n = self.n_steps
        t = 0.0
        for i in range(n):
            dt = self.dt if i < n - 1 else self.t_final - t
            yield t, dt
            t += dt


def march(config: TimeLoopConfig, scheme: RKScheme, rhs_for_dt, state, pin=None):
    """Run the loop; ``rhs_for_dt(dt)`` returns the rhs closure for a step
    size (caching contexts is the caller's business)."""
    for t, dt in config.step_sizes():
        state = ssp_step(scheme, rhs_for_dt(dt), state, t, dt, pin=pin)
        if not np.all(np.isfinite(state)):
            raise FloatingPointError(f"solution lost finiteness at t={t + dt:.6g}")
    return state
