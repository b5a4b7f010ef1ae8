"""The test problems: exact solutions, boundary jets, solvers, convergence.

Each problem carries closed-form x-derivative closures of its exact
solution; boundary jets and Dirichlet/Neumann targets are those closures
evaluated at the endpoints.  For the heat problems this coincides with the
inverse Lax-Wendroff values obtained from the boundary data through the
PDE, which is what a data-only implementation would use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bessel import besselj0, besselj0_zero, radial_j0_x_derivative
from .grid import (
    LineFamily,
    build_circle_line_mesh,
    build_rect_line_mesh,
    build_uniform_grid,
    family_from_grid,
)
from .operators import DirichletBC, LineOperator, NeumannBC, PeriodicBC
from .timestep import RKScheme, TimeLoopConfig, march

# Largest kernel-rate multipliers keeping the SSP scheme of order k stable
# (second derivative: real spectrum in (-beta^2 k, 0]; first derivative:
# k = 3 has no strictly stable choice, 0.8 keeps the worst amplification
# within 0.7% per step, damped in practice by quadrature dissipation).
BETA_FIRST = {1: 2.0, 2: 1.0, 3: 0.8}
BETA_SECOND = {1: math.sqrt(2.0), 2: 1.0, 3: 0.915}


def _sin_deriv(omega, m, x, shift=0.0):
    return omega**m * np.sin(omega * np.asarray(x, dtype=float) + shift + m * np.pi / 2)


def _cos_deriv(omega, m, x, shift=0.0):
    return omega**m * np.cos(omega * np.asarray(x, dtype=float) + shift + m * np.pi / 2)


def _exp_sin_deriv(sigma, omega, m, x):
    z = (sigma + 1j * omega) ** m * np.exp((sigma + 1j * omega) * np.asarray(x, dtype=float))
    return z.imag


def _x_exp_deriv(sigma, m, x):
    x = np.asarray(x, dtype=float)
    if m == 0:
        return x * np.exp(sigma * x)
    return np.exp(sigma * x) * (sigma**m * x + m * sigma ** (m - 1))


@dataclass(frozen=True)
class Problem1D:
    name: str
    kind: str              # diffusion | wave | convdiff
    a: float
    b: float
    t_final: float
    bc: str                # periodic | dirichlet | neumann
    deriv: Callable        # deriv(m, x, t) = d^m u / dx^m, exact
    q: float = 1.0
    c: float = 0.0
    velocity: Callable | None = None   # u_t(x, t), wave problems

    def exact(self, x, t):
        return self.deriv(0, x, t)


@dataclass(frozen=True)
class Problem2D:
    name: str
    kind: str              # convection | diffusion | wave
    domain: str            # rect | rect-halfcell | circle
    t_final: float
    deriv_x: Callable      # deriv_x(m, x, y, t)
    deriv_y: Callable
    q: float = 1.0
    c: float = 0.0         # advection speed along each axis (convection)
    bounds: tuple = (0.0, 1.0)
    radius: float = 1.0
    velocity: Callable | None = None

    def exact(self, x, y, t):
        return self.deriv_x(0, x, y, t)


def _diffusion_periodic() -> Problem1D:
    # f(x) = sin(x) on [-pi, pi]; the decaying mode of the heat equation.
    def deriv(m, x, t):
        return np.exp(-t) * _sin_deriv(1.0, m, x)

    return Problem1D("diffusion-periodic", "diffusion", -np.pi, np.pi, 2.0,
                     "periodic", deriv)


def _diffusion_dirichlet() -> Problem1D:
    def deriv(m, x, t):
        base = _sin_deriv(np.pi, m, x) * np.exp(-np.pi**2 * t)
        if m == 0:
            return base + np.asarray(x, dtype=float)
        if m == 1:
            return base + 1.0
        return base

    return Problem1D("diffusion-dirichlet", "diffusion", 0.0, 1.0, 2.0,
                     "dirichlet", deriv)


def _diffusion_inflow() -> Problem1D:
    # Time-dependent Dirichlet data carried by u_t + u_x = u_xx.
    def deriv(m, x, t):
        e1 = np.exp(-(0.25 + np.pi**2) * t)
        e2 = np.exp(-0.25 * t)
        return e1 * _exp_sin_deriv(0.5, np.pi, m, x) + e2 * _x_exp_deriv(0.5, m, x)

    return Problem1D("diffusion-inflow", "convdiff", -1.0, 1.0, 0.5,
                     "dirichlet", deriv, q=1.0, c=1.0)


def _diffusion_neumann() -> Problem1D:
    def deriv(m, x, t):
        return _sin_deriv(np.pi, m, x) * np.exp(-np.pi**2 * t) + np.exp(np.asarray(x, dtype=float) + t)

    return Problem1D("diffusion-neumann", "diffusion", 0.0, 1.0, 0.5,
                     "neumann", deriv)


def _wave_dirichlet() -> Problem1D:
    def deriv(m, x, t):
        trav = 0.5 * (_cos_deriv(np.pi, m, x, np.pi * t) - _cos_deriv(np.pi, m, x, -np.pi * t))
        if m == 0:
            return trav + np.asarray(x, dtype=float)
        if m == 1:
            return trav + 1.0
        return trav

    def velocity(x, t):
        x = np.asarray(x, dtype=float)
        return -0.5 * np.pi * (np.sin(np.pi * (x + t)) + np.sin(np.pi * (x - t)))

    return Problem1D("wave-dirichlet", "wave", 0.5, 1.5, 1.0,
                     "dirichlet", deriv, velocity=velocity)


def _wave_periodic() -> Problem1D:
    def deriv(m, x, t):
        return _cos_deriv(np.pi, m, x, np.pi * t)

    def velocity(x, t):
        return -np.pi * np.sin(np.pi * (np.asarray(x, dtype=float) + t))

    return Problem1D("wave-periodic", "wave", 0.0, 2.0, 1.0,
                     "periodic", deriv, velocity=velocity)


def _convection_diffusion() -> Problem1D:
    def deriv(m, x, t):
        return np.exp(-(0.25 + np.pi**2) * t) * _exp_sin_deriv(0.5, np.pi, m, x)

    return Problem1D("convection-diffusion", "convdiff", -0.5, 0.5, 0.5,
                     "dirichlet", deriv, q=1.0, c=1.0)


def _convection_2d() -> Problem2D:
    def deriv(m, x, y, t):
        th = np.pi * ((np.asarray(x, dtype=float) + np.asarray(y, dtype=float)) / 2 - t)
        return -((np.pi / 2) ** m) * np.cos(th + m * np.pi / 2)

    return Problem2D("convection-2d", "convection", "rect", 2.0,
                     deriv, lambda m, x, y, t: deriv(m, y, x, t),
                     c=1.0, bounds=(-2.0, 2.0))


def _diffusion_2d_halfcell() -> Problem2D:
    def deriv_x(m, x, y, t):
        y = np.asarray(y, dtype=float)
        return (_sin_deriv(np.pi, m, x) * np.sin(np.pi * y) * np.exp(-np.pi**2 * t)
                + np.exp(np.asarray(x, dtype=float) + y + t))

    return Problem2D("diffusion-2d-halfcell", "diffusion", "rect-halfcell", 0.5,
                     deriv_x, lambda m, x, y, t: deriv_x(m, y, x, t),
                     q=0.5, bounds=(0.0, 1.0))


def _drumhead(mode: int) -> Problem2D:
    kn = besselj0_zero(mode)

    def deriv_x(m, x, y, t):
        return radial_j0_x_derivative(m, kn, x, y) * np.cos(kn * t)

    def deriv_y(m, x, y, t):
        return radial_j0_x_derivative(m, kn, y, x) * np.cos(kn * t)

    def velocity(x, y, t):
        r = np.hypot(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return -kn * besselj0(kn * r) * np.sin(kn * t)

    return Problem2D(f"drumhead-mode{mode}", "wave", "circle", 1.0,
                     deriv_x, deriv_y, radius=1.0, velocity=velocity)


EXAMPLES: dict[str, Problem1D | Problem2D] = {
    "1.1": _diffusion_periodic(),
    "1.2": _diffusion_dirichlet(),
    "1.3": _diffusion_inflow(),
    "1.4": _diffusion_neumann(),
    "2.1": _wave_dirichlet(),
    "2.2": _wave_periodic(),
    "3": _convection_diffusion(),
    "4": _convection_2d(),
    "5": _diffusion_2d_halfcell(),
    "6.1": _drumhead(1),
    "6.2": _drumhead(2),
}


# -- 1D simulations -----------------------------------------------------------


class Simulation1D:
    def __init__(self, problem: Problem1D, n: int, k: int, cfl: float,
                 quad_mode: str = "linear", beta_first: float | None = None,
                 beta_second: float | None = None):
        self.problem = problem
        self.k = k
        self.cfl = cfl
        self.quad_mode = quad_mode
        self.beta_first = BETA_FIRST[k] if beta_first is None else beta_first
        self.beta_second = BETA_SECOND[k] if beta_second is None else beta_second
        self.grid = build_uniform_grid(problem.a, problem.b, n)
        self.family = family_from_grid(self.grid)
        h = (problem.b - problem.a) / n  # exact, free of linspace rounding
        denom = abs(problem.c) if problem.kind == "convdiff" else 1.0
        self.config = TimeLoopConfig(cfl, problem.t_final, cfl * h / denom)
        self.scheme = RKScheme(k)
        self._contexts: dict[float, Callable] = {}

    # boundary-data helpers ---------------------------------------------------

    def _second_bc(self, t: float):
        p, k = self.problem, self.k
        if p.bc == "periodic":
            return PeriodicBC()
        if p.bc == "dirichlet":
            evens_a = {2 * m: np.atleast_1d(p.deriv(2 * m, p.a, t)) for m in range(1, k + 1)}
            evens_b = {2 * m: np.atleast_1d(p.deriv(2 * m, p.b, t)) for m in range(1, k + 1)}
            return DirichletBC(np.atleast_1d(p.deriv(0, p.a, t)),
                               np.atleast_1d(p.deriv(0, p.b, t)), evens_a, evens_b)
        odds_a = {2 * m + 1: np.atleast_1d(p.deriv(2 * m + 1, p.a, t)) for m in range(1, k + 1)}
        odds_b = {2 * m + 1: np.atleast_1d(p.deriv(2 * m + 1, p.b, t)) for m in range(1, k + 1)}
        return NeumannBC(np.atleast_1d(p.deriv(1, p.a, t)),
                         np.atleast_1d(p.deriv(1, p.b, t)), odds_a, odds_b)

    def _first_jets(self, t: float):
        p, k = self.problem, self.k
        pt = p.a if p.c > 0 else p.b
        return {m: np.atleast_1d(p.deriv(m, pt, t)) for m in range(1, k + 1)}

    # stepping ------------------------------------------------------------------

    def _rhs_for(self, dt: float):
        if dt in self._contexts:
            return self._contexts[dt]
        p, k = self.problem, self.k
        op0 = op1 = None
        if p.kind in ("diffusion", "wave", "convdiff"):
            alpha2 = self.beta_second / math.sqrt(p.q * dt)
            op0 = LineOperator(self.family, alpha2, k, self.quad_mode)
        if p.kind == "convdiff":
            alpha1 = self.beta_first / (abs(p.c) * dt)
            op1 = LineOperator(self.family, alpha1, k, self.quad_mode)
        side = "R" if p.c > 0 else "L"

        if p.kind == "wave":
            def rhs(state, t):
                u, v = state
                acc = p.q * op0.second_deriv(u[None, :], self._second_bc(t))[0]
                return np.stack([v, acc])
        elif p.kind == "diffusion":
            def rhs(state, t):
                return p.q * op0.second_deriv(state[None, :], self._second_bc(t))[0]
        else:
            def rhs(state, t):
                diff = p.q * op0.second_deriv(state[None, :], self._second_bc(t))[0]
                adv = op1.first_deriv(state[None, :], side, self._first_jets(t))[0]
                return diff - p.c * adv

        self._contexts[dt] = rhs
        return rhs

    def initial_state(self):
        x = self.grid.nodes
        u0 = self.problem.exact(x, 0.0)
        if self.problem.kind == "wave":
            return np.stack([u0, self.problem.velocity(x, 0.0)])
        return u0

    def run(self):
        return march(self.config, self.scheme, self._rhs_for, self.initial_state())

    def solution_values(self, state):
        return state[0] if self.problem.kind == "wave" else state

    def linf_error(self, state) -> float:
        u = self.solution_values(state)
        ref = self.problem.exact(self.grid.nodes, self.problem.t_final)
        return float(np.abs(u - ref).max())


# -- 2D simulations -----------------------------------------------------------


class Simulation2D:
    def __init__(self, problem: Problem2D, n: int, k: int, cfl: float,
                 quad_mode: str = "linear", beta_first: float | None = None,
                 beta_second: float | None = None):
        self.problem = problem
        self.k = k
        self.cfl = cfl
        self.quad_mode = quad_mode
        self.beta_first = BETA_FIRST[k] if beta_first is None else beta_first
        self.beta_second = BETA_SECOND[k] if beta_second is None else beta_second

        p = problem
        if p.domain == "circle":
            self.mesh = build_circle_line_mesh(p.radius, n)
        elif p.domain == "rect-halfcell":
            lo, hi = p.bounds
            self.mesh = build_rect_line_mesh(lo, hi, lo, hi, n, half_cell=True)
        else:
            lo, hi = p.bounds
            if p.kind == "convection":
                self.mesh = build_rect_line_mesh(lo, hi, lo, hi, n,
                                                 pin_boundary=False, edge_lines=True)
                inflow = (np.abs(self.mesh.coords[:, 0] - lo) < 1e-12) | (
                    np.abs(self.mesh.coords[:, 1] - lo) < 1e-12)
                self.mesh.repin(inflow)
            else:
                self.mesh = build_rect_line_mesh(lo, hi, lo, hi, n)

        self.xfam = self.mesh.x_family()
        self.yfam = self.mesh.y_family()
        self.n_ids = self.mesh.n_ids
        self.xids = self.mesh.x_id_matrix(self.n_ids)
        self.yids = self.mesh.y_id_matrix(self.n_ids)
        self.x_of_lines = np.array([c for c, _ in self.mesh.y_lines])
        self.y_of_lines = np.array([c for c, _ in self.mesh.x_lines])

        denom = abs(p.c) if p.kind == "convection" else 1.0
        self.config = TimeLoopConfig(cfl, p.t_final, cfl * self.mesh.h / denom)
        self.scheme = RKScheme(k)
        self._contexts: dict[float, tuple] = {}

    # boundary data -------------------------------------------------------------

    def _line_bc(self, fam: LineFamily, along_x: bool, t: float):
        p, k = self.problem, self.k
        dfun = p.deriv_x if along_x else p.deriv_y
        ca = fam.a_coords
        cb = fam.b_coords
        other = self.y_of_lines if along_x else self.x_of_lines

        def dv(m, coord):
            if along_x:
                return np.asarray(dfun(m, coord, other, t))
            return np.asarray(dfun(m, other, coord, t))

        evens_a = {2 * m: dv(2 * m, ca) for m in range(1, k + 1)}
        evens_b = {2 * m: dv(2 * m, cb) for m in range(1, k + 1)}
        return DirichletBC(dv(0, ca), dv(0, cb), evens_a, evens_b)

    def _line_jets(self, fam: LineFamily, along_x: bool, t: float):
        p, k = self.problem, self.k
        dfun = p.deriv_x if along_x else p.deriv_y
        coord = fam.a_coords  # positive speeds: inflow at the low end
        other = self.y_of_lines if along_x else self.x_of_lines
        if along_x:
            return {m: np.asarray(dfun(m, coord, other, t)) for m in range(1, k + 1)}
        return {m: np.asarray(dfun(m, other, coord, t)) for m in range(1, k + 1)}

    # assembly -------------------------------------------------------------------

    def _scatter(self, fam_values_x: np.ndarray, fam_values_y: np.ndarray):
        out = np.zeros(self.n_ids + 1)
        out[self.xids.ravel()] = fam_values_x.ravel()
        tmp = np.zeros(self.n_ids + 1)
        tmp[self.yids.ravel()] = fam_values_y.ravel()
        return out[: self.n_ids] + tmp[: self.n_ids]

    def _gather(self, u: np.ndarray):
        ext = np.concatenate([u, [0.0]])
        return ext[self.xids], ext[self.yids]

    def _ops_for(self, dt: float):
        if dt not in self._contexts:
            p = self.problem
            if p.kind == "convection":
                alpha = self.beta_first / (abs(p.c) * dt)
                ops = (LineOperator(self.xfam, alpha, self.k, self.quad_mode),
                       LineOperator(self.yfam, alpha, self.k, self.quad_mode))
            else:
                alpha = self.beta_second / math.sqrt(p.q * dt)
                ops = (LineOperator(self.xfam, alpha, self.k, self.quad_mode),
                       LineOperator(self.yfam, alpha, self.k, self.quad_mode))
            self._contexts[dt] = ops
        return self._contexts[dt]

    def _rhs_for(self, dt: float):
        p = self.problem
        opx, opy = self._ops_for(dt)
        pinned = self.mesh.pinned

        def laplacian(u, t):
            vx, vy = self._gather(u)
            px = opx.second_deriv(vx, self._line_bc(self.xfam, True, t))
            py = opy.second_deriv(vy, self._line_bc(self.yfam, False, t))
            return self._scatter(px, py)

        if p.kind == "wave":
            def rhs(state, t):
                u, v = state
                acc = p.q * laplacian(u, t)
                acc[pinned] = 0.0
                ut = v.copy()
                ut[pinned] = 0.0
                return np.stack([ut, acc])
        elif p.kind == "diffusion":
            def rhs(state, t):
                out = p.q * laplacian(state, t)
                out[pinned] = 0.0
                return out
        else:
            def rhs(state, t):
                vx, vy = self._gather(state)
                px = opx.first_deriv(vx, "R", self._line_jets(self.xfam, True, t))
                py = opy.first_deriv(vy, "R", self._line_jets(self.yfam, False, t))
                out = -p.c * self._scatter(px, py)
                out[pinned] = 0.0
                return out

        return rhs

    def _pin(self, state, t):
        p = self.problem
        ids = np.nonzero(self.mesh.pinned)[0]
        if ids.size == 0:
            return
        x = self.mesh.coords[ids, 0]
        y = self.mesh.coords[ids, 1]
        if p.kind == "wave":
            state[0][ids] = p.exact(x, y, t)
            state[1][ids] = p.velocity(x, y, t)
        else:
            state[ids] = p.exact(x, y, t)

    def initial_state(self):
        x = self.mesh.coords[:, 0]
        y = self.mesh.coords[:, 1]
        u0 = self.problem.exact(x, y, 0.0)
        if self.problem.kind == "wave":
            return np.stack([u0, self.problem.velocity(x, y, 0.0)])
        return u0

    def run(self):
        return march(self.config, self.scheme, self._rhs_for,
                     self.initial_state(), pin=self._pin)

    def solution_values(self, state):
        return state[0] if self.problem.kind == "wave" else state

    def linf_error(self, state) -> float:
        u = self.solution_values(state)
        x = self.mesh.coords[:, 0]
        y = self.mesh.coords[:, 1]
        ref = self.problem.exact(x, y, self.problem.t_final)
        return float(np.abs(u - ref).max())


def make_simulation(problem, n, k, cfl, **kw):
    if isinstance(problem, Problem1D):
        return Simulation1D(problem, n, k, cfl, **kw)
    return Simulation2D(problem, n, k, cfl, **kw)


# -- convergence study --------------------------------------------------------


@dataclass
class ConvergenceReport:
    example: str
    k: int
    cfl: float
    ns: list[int]
    errors: list[float]
    orders: list[float] = field(init=False)

    def __post_init__(self):
        self.orders = [float("nan")]
        for i in range(1, len(self.ns)):
            ratio = self.ns[i] / self.ns[i - 1]
            self.orders.append(
                math.log(self.errors[i - 1] / self.errors[i]) / math.log(ratio)
            )


def run_convergence(example: str, k: int, cfl: float, ns, **kw) -> ConvergenceReport:
    problem = EXAMPLES[example]
    errors = []
    for n in ns:
        sim = make_simulation(problem, n, k, cfl, **kw)
        errors.append(sim.linf_error(sim.run()))
    return ConvergenceReport(example, k, cfl, list(ns), errors)
