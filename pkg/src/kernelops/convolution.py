"""Global convolution integrals assembled from per-cell integrals in O(N).

    I_L(x_i) = alpha * int_{x_i}^{b} exp(-alpha (s - x_i)) v(s) ds
    I_R(x_i) = alpha * int_{a}^{x_i} exp(-alpha (x_i - s)) v(s) ds

built by the recursions

    I_L(x_i) = J_L(i) + exp(-alpha dx_i)     * I_L(x_{i+1}),  I_L(x_N) = 0
    I_R(x_i) = J_R(i-1) + exp(-alpha dx_{i-1}) * I_R(x_{i-1}),  I_R(x_0) = 0

where the decay factor is the width of the cell being crossed.  Padded
cells in a batched family carry zero decay, so sweeps never cross line
ends.  Accumulation order is fixed (right-to-left resp. left-to-right) for
bitwise-deterministic results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an install dependency
    njit = None


def _sweep_left_py(jl, decay, out):
    ncols = jl.shape[1]
    out[:, ncols] = 0.0
    for i in range(ncols - 1, -1, -1):
        out[:, i] = jl[:, i] + decay[:, i] * out[:, i + 1]


def _sweep_right_py(jr, decay, out):
    ncols = jr.shape[1]
    out[:, 0] = 0.0
    for i in range(1, ncols + 1):
        out[:, i] = jr[:, i - 1] + decay[:, i - 1] * out[:, i - 1]


if njit is not None:
    _sweep_left = njit(cache=True)(_sweep_left_py)
    _sweep_right = njit(cache=True)(_sweep_right_py)
else:  # pragma: no cover
    _sweep_left, _sweep_right = _sweep_left_py, _sweep_right_py


@dataclass
class ConvolutionSweep:
    """Node values of I_L and I_R for a batch of lines."""

    il: np.ndarray
    ir: np.ndarray
    alpha: float


def sweep_from_cells(jl: np.ndarray, jr: np.ndarray, decay: np.ndarray,
                     alpha: float) -> ConvolutionSweep:
    """Assemble I_L, I_R from (L, M-1) cell integrals and decays."""
    nlines, ncells = jl.shape
    il = np.empty((nlines, ncells + 1))
    ir = np.empty((nlines, ncells + 1))
    _sweep_left(jl, decay, il)
    _sweep_right(jr, decay, ir)
    return ConvolutionSweep(il, ir, alpha)


def compose_i0(sweep: ConvolutionSweep) -> np.ndarray:
    """I_0 = (I_L + I_R) / 2, the split of the absolute-value kernel."""
    return 0.5 * (sweep.il + sweep.ir)


def sweep(field, alpha: float, quadrature_mode: str = "linear") -> ConvolutionSweep:
    """Single-line convenience wrapper: sweep a Field's values.

    Solvers use :class:`LineConvolver`, which reuses the quadrature plan.
    """
    conv = LineConvolver.for_field(field, alpha, quadrature_mode)
    return conv.sweep(np.asarray(field.values, dtype=float)[None, :])


class LineConvolver:
    """Quadrature plan plus decay factors, bound to one family and alpha."""

    def __init__(self, quad):
        self.quad = quad
        self.alpha = quad.alpha
        widths = quad.family.cell_widths()
        # exp(-alpha * 0) on padded cells would be 1; zero kills leakage
        self.decay = np.where(widths > 0.0, np.exp(-quad.alpha * widths), 0.0)

    @classmethod
    def for_field(cls, field, alpha: float, mode: str = "linear"):
        from .grid import family_from_grid
        from .quadrature import LineQuadrature

        fam = family_from_grid(field.grid)
        return cls(LineQuadrature(fam, alpha, mode=mode))

    def sweep(self, values: np.ndarray) -> ConvolutionSweep:
        jl, jr = self.quad.jl_jr(values)
        return sweep_from_cells(jl, jr, self.decay, self.alpha)
