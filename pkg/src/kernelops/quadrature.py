"""Per-cell integrals of fields against the exponential kernel.

For a cell [x_i, x_{i+1}] of width d and rate alpha the two one-sided
integrals are

    JL_i = alpha * int_cell exp(-alpha (s - x_i))     v(s) ds
    JR_i = alpha * int_cell exp(-alpha (x_{i+1} - s)) v(s) ds

Both reduce to moments mu_m(nu) = nu * int_0^1 exp(-nu t) t^m dt with
nu = alpha * d once v is replaced by a polynomial interpolant.  Uniform
lines use a six-point (degree-5) stencil, optionally split into the three
classic cubic substencils with nonlinear weights; lines with fractional end
cells use four-point stencils near the boundary, extended by ghost nodes
from degree-4 extrapolation.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .grid import LineFamily

# Below this nu the moment recurrence cancels catastrophically; the
# alternating series converges to machine accuracy in <= 30 terms.
_SERIES_NU = 2.5
_SERIES_TERMS = 30

WENO_EPS = 1e-6
WENO_POWER = 2

_D_RESID_TOL = 1e-11


@dataclass(frozen=True)
class ExpMoments:
    """Moments mu_m = nu * int_0^1 exp(-nu t) t^m dt, m = 0..m_max."""

    nu: float
    mu: np.ndarray


def _moments_array(nu, m_max: int) -> np.ndarray:
    """Moments for scalar or array nu; shape nu.shape + (m_max + 1,)."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0.0):
        raise ValueError("nu must be positive")
    out = np.empty(nu.shape + (m_max + 1,))
    small = nu < _SERIES_NU
    if np.any(small):
        ns = nu[small]
        for m in range(m_max + 1):
            acc = np.zeros_like(ns)
            term = ns.copy()  # j = 0 term: nu / (m + 1) before dividing
            for j in range(_SERIES_TERMS):
                acc = acc + term / (m + j + 1)
                term = term * (-ns) / (j + 1)
            out[small, m] = acc
    big = ~small
    if np.any(big):
        nb = nu[big]
        e = np.exp(-nb)
        mu = 1.0 - e
        out[big, 0] = mu
        for m in range(1, m_max + 1):
            mu = -e + (m / nb) * mu
            out[big, m] = mu
    return out


def exp_moments(nu: float, m_max: int) -> ExpMoments:
    """Kernel moments, exact to ~1e-13 relative for m_max <= 8."""
    if m_max > 8:
        raise ValueError("m_max above 8 is not supported")
    if nu <= 0.0:
        raise ValueError("nu must be positive")
    return ExpMoments(float(nu), _moments_array(float(nu), m_max))


def _weights_from_offsets(offsets, width, alpha: float, side: str) -> np.ndarray:
    """Quadrature weights for nodes at ``offsets`` from the cell's left edge.

    offsets may be (..., n) with matching width (...,); returns (..., n).
    Exact for polynomials of degree n-1.
    """
    offsets = np.asarray(offsets, dtype=float)
    width = np.asarray(width, dtype=float)
    n = offsets.shape[-1]
    tau = offsets / width[..., None]
    if side == "R":
        tau = 1.0 - tau
    elif side != "L":
        raise ValueError("side must be 'L' or 'R'")
    mu = _moments_array(alpha * width, n - 1)
    # Solve V^T w = mu with one refinement pass (wide stencils are
    # mildly ill-conditioned in the monomial basis).
    powers = np.arange(n)
    vt = tau[..., None, :] ** powers[:, None]
    if np.any(~np.isfinite(vt)):
        raise ValueError("invalid stencil offsets")
    try:
        w = np.linalg.solve(vt, mu[..., None])[..., 0]
        r = mu - (vt @ w[..., None])[..., 0]
        w = w + np.linalg.solve(vt, r[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise ValueError("coincident stencil nodes") from exc
    return w


def poly_quad_weights(
    local_spacings, target_cell: int, alpha: float, degree: int, side: str
) -> np.ndarray:
    """Weights reproducing the kernel integral of the degree-``degree``
    interpolant over the target cell.

    ``local_spacings`` are the widths of the degree+1 stencil cells... more
    precisely the gaps between consecutive stencil nodes (degree entries);
    ``target_cell`` indexes which gap is integrated over.
    """
    spac = np.asarray(local_spacings, dtype=float)
    if spac.size != degree:
        raise ValueError("need degree spacings for degree+1 nodes")
    if not 0 <= target_cell < degree:
        raise ValueError("target cell outside stencil")
    nodes = np.concatenate([[0.0], np.cumsum(spac)])
    offsets = nodes - nodes[target_cell]
    width = spac[target_cell]
    return _weights_from_offsets(offsets, width, alpha, side)


@functools.lru_cache(maxsize=512)
def _uniform_weights(nu: float, shift: int, npts: int, side: str) -> np.ndarray:
    """Weights on a uniform stencil whose node j sits at (j + shift) * h
    from the target cell's left edge, with nu = alpha * h."""
    offsets = (np.arange(npts) + shift).astype(float)
    return _weights_from_offsets(offsets, np.asarray(1.0), nu, side)


@functools.lru_cache(maxsize=256)
def weno_linear_weights(nu: float, side: str = "L") -> tuple[float, float, float]:
    """Linear weights d_r combining the three cubic substencil integrals
    into the six-point degree-5 integral, for the given kernel scale."""
    if nu <= 0.0:
        raise ValueError("nu must be positive")
    big = _uniform_weights(nu, -2, 6, side)
    cols = np.zeros((6, 3))
    for r in range(3):
        cols[r : r + 4, r] = _uniform_weights(nu, r - 2, 4, side)
    d, *_ = np.linalg.lstsq(cols, big, rcond=None)
    resid = np.max(np.abs(cols @ d - big))
    if resid > _D_RESID_TOL:
        raise RuntimeError(f"substencil matching residual {resid:.2e}; quadrature bug")
    return tuple(float(v) for v in d)


@functools.lru_cache(maxsize=1)
def _beta_forms() -> np.ndarray:
    """Quadratic forms B[r] with beta_r = v_r^T B[r] v_r (Jiang-Shu).

    Substencil r holds samples at t = r-2 .. r+1 in cell units; beta sums
    h^(2l-1) * int_cell (p^(l))^2 over the target cell [0, 1], which is
    h-free once written in cell units.
    """
    forms = np.empty((3, 4, 4))
    for r in range(3):
        tau = np.arange(r - 2, r + 2, dtype=float)
        v = np.vander(tau, 4, increasing=True)
        coef = np.linalg.inv(v)  # coef[m, j]: t^m coefficient of ell_j
        b = np.zeros((4, 4))
        for ell in range(1, 4):
            dcoef = coef.copy()
            for _ in range(ell):
                dcoef = dcoef[1:] * np.arange(1, dcoef.shape[0])[:, None]
            # int_0^1 (sum_m dcoef[m, j] t^m)^2 dt as a quadratic form
            m = dcoef.shape[0]
            ipow = 1.0 / (np.arange(m)[:, None] + np.arange(m)[None, :] + 1.0)
            b += dcoef.T @ ipow @ dcoef
        forms[r] = b
    return forms


def smoothness_indicators(values, h: float = 1.0):
    """Jiang-Shu smoothness of the three cubic substencils of a six-point
    stencil; depends only on the sample values (h cancels)."""
    v = np.asarray(values, dtype=float)
    if v.shape[-1] != 6:
        raise ValueError("need 6 stencil samples")
    forms = _beta_forms()
    betas = []
    for r in range(3):
        vr = v[..., r : r + 4]
        betas.append(np.maximum(np.einsum("...i,ij,...j->...", vr, forms[r], vr), 0.0))
    return tuple(betas)


def nonlinear_weights(betas, d, eps: float = WENO_EPS, power: int = WENO_POWER):
    """WENO weights from smoothness indicators and linear weights."""
    alphas = [dr / (eps + br) ** power for br, dr in zip(betas, d)]
    total = alphas[0] + alphas[1] + alphas[2]
    return tuple(a / total for a in alphas)


def eno_extrapolate(values, lam: float):
    """Ghost values at a-h and a-2h from five boundary-adjacent samples.

    ``values`` = (v0..v4) at nodes a, a+lam*h, a+(1+lam)h, a+(2+lam)h,
    a+(3+lam)h.  Degree-4 Lagrange extrapolation; exact on quartics.
    """
    if lam <= 0.0:
        raise ValueError("end-cell fraction must be positive")
    rows = eno_extrapolation_rows(lam)
    v = np.asarray(values, dtype=float)
    return float(rows[0] @ v), float(rows[1] @ v)


def eno_extrapolation_rows(lam) -> np.ndarray:
    """(2, 5) coefficient rows for ghosts at t = -1 and t = -2 (cell units);
    lam may be an array, giving (..., 2, 5)."""
    lam = np.asarray(lam, dtype=float)
    nodes = np.stack(
        [np.zeros_like(lam), lam, lam + 1.0, lam + 2.0, lam + 3.0], axis=-1
    )
    out = np.empty(lam.shape + (2, 5))
    for g, t in enumerate((-1.0, -2.0)):
        for j in range(5):
            num = 1.0
            den = 1.0
            for m in range(5):
                if m == j:
                    continue
                num = num * (t - nodes[..., m])
                den = den * (nodes[..., j] - nodes[..., m])
            out[..., g, j] = num / den
    return out


@dataclass
class SpecialCells:
    """Gather table for cells that deviate from the shared interior rule."""

    line: np.ndarray     # (S,)
    cell: np.ndarray     # (S,)
    nodes: np.ndarray    # (S, W) absolute node columns within the line
    wl: np.ndarray       # (S, W) weights for JL
    wr: np.ndarray       # (S, W) weights for JR


class LineQuadrature:
    """Precomputed J_L/J_R evaluation for one line family at one alpha."""

    def __init__(self, family: LineFamily, alpha: float, mode: str = "linear",
                 stencil_choice: int = 1):
        if mode not in ("linear", "nonlinear"):
            raise ValueError("mode must be 'linear' or 'nonlinear'")
        if stencil_choice not in (0, 1, 2):
            raise ValueError("stencil choice must be 0, 1 or 2")
        self.family = family
        self.alpha = float(alpha)
        self.mode = mode
        self.stencil_choice = stencil_choice
        self.nu = self.alpha * family.h

        self._wc_l = _uniform_weights(self.nu, -2, 6, "L")
        self._wc_r = _uniform_weights(self.nu, -2, 6, "R")
        if mode == "nonlinear":
            self._sub_l = [_uniform_weights(self.nu, r - 2, 4, "L") for r in range(3)]
            self._sub_r = [_uniform_weights(self.nu, r - 2, 4, "R") for r in range(3)]
            self._d_l = weno_linear_weights(self.nu, "L")
            self._d_r = weno_linear_weights(self.nu, "R")
        self._cell_mask = (
            np.arange(family.width - 1)[None, :] < family.ncells[:, None]
        )
        self._special = self._build_special_cells()

    # -- construction -----------------------------------------------------

    def _build_special_cells(self) -> SpecialCells:
        fam = self.family
        h, alpha = fam.h, self.alpha
        entries: list[tuple[int, int, np.ndarray, np.ndarray, np.ndarray]] = []
        for l in range(fam.nlines):
            nc = int(fam.ncells[l])
            for cell, nodes, wl, wr in self._left_end_rows(float(fam.lam_a[l])):
                entries.append((l, cell, nodes, wl, wr))
            # Right end: mirror of the left-end construction.  Reflection
            # swaps the two kernels, so (wl, wr) trade places.
            for cell, nodes, wl, wr in self._left_end_rows(float(fam.lam_b[l])):
                entries.append((l, nc - 1 - cell, nc - nodes, wr, wl))
        width = max(e[2].size for e in entries)
        s = len(entries)
        out = SpecialCells(
            line=np.empty(s, dtype=np.int64),
            cell=np.empty(s, dtype=np.int64),
            nodes=np.zeros((s, width), dtype=np.int64),
            wl=np.zeros((s, width)),
            wr=np.zeros((s, width)),
        )
        for i, (l, cell, nodes, wl, wr) in enumerate(entries):
            out.line[i] = l
            out.cell[i] = cell
            out.nodes[i, : nodes.size] = nodes
            out.wl[i, : nodes.size] = wl
            out.wr[i, : nodes.size] = wr
        return out

    def _left_end_rows(self, lam: float):
        """Special-cell rows for a line's left end, in left-local indices.

        Uniform ends (lam == 1) shift the six-point stencil inward for the
        first two cells.  Fractional ends use four-point stencils for cells
        0 and 1 (ghost nodes folded into real-node weights via the
        extrapolation rows) and a one-sided six-point stencil for cell 2.
        """
        h, alpha = self.family.h, self.alpha
        rows = []
        if lam == 1.0:
            for cell in (0, 1):
                w_l = _uniform_weights(self.nu, -cell, 6, "L")
                w_r = _uniform_weights(self.nu, -cell, 6, "R")
                rows.append((cell, np.arange(6), w_l, w_r))
            return rows

        ghosts = eno_extrapolation_rows(lam)  # (2, 5) over nodes 0..4
        r = self.stencil_choice
        # Node coordinates in units of h, ghosts first: g2, g1, x0, x1, ...
        ext = np.concatenate([[-2.0, -1.0, 0.0], lam + np.arange(6.0)])

        def fold(stencil_ext, weights):
            """Rewrite ghost-node weights as weights on real nodes 0..4."""
            real = np.zeros(9)
            for slot, w in zip(stencil_ext, weights):
                if slot == 0:
                    real[:5] += w * ghosts[1]  # g2 = x(-2h)
                elif slot == 1:
                    real[:5] += w * ghosts[0]  # g1 = x(-h)
                else:
                    real[slot - 2] += w
            used = np.nonzero(real)[0]
            hi = used.max() + 1 if used.size else 1
            return np.arange(hi), real[:hi]

        for cell in (0, 1):
            ext_sl = slice(cell + r, cell + r + 4)  # stencil ext-indices
            nodes_h = ext[ext_sl]
            left_edge = ext[cell + 2]
            width = ext[cell + 3] - left_edge
            wl = _weights_from_offsets((nodes_h - left_edge) * h, np.asarray(width * h), alpha, "L")
            wr = _weights_from_offsets((nodes_h - left_edge) * h, np.asarray(width * h), alpha, "R")
            idx, wl = fold(range(ext_sl.start, ext_sl.stop), wl)
            idx2, wr = fold(range(ext_sl.start, ext_sl.stop), wr)
            n = max(idx.size, idx2.size)
            wl = np.pad(wl, (0, n - wl.size))
            wr = np.pad(wr, (0, n - wr.size))
            rows.append((cell, np.arange(n), wl, wr))
        # Cell 2 avoids the fractional node x0 with stencil x1..x6.
        w_l = _uniform_weights(self.nu, -1, 6, "L")
        w_r = _uniform_weights(self.nu, -1, 6, "R")
        rows.append((2, np.arange(1, 7), w_l, w_r))
        return rows

    # -- evaluation --------------------------------------------------------

    def jl_jr(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell kernel integrals of (L, M) line values."""
        fam = self.family
        v = np.asarray(values, dtype=float)
        ncell_cols = fam.width - 1
        jl = np.zeros((fam.nlines, ncell_cols))
        jr = np.zeros((fam.nlines, ncell_cols))

        if self.mode == "linear":
            self._centered_linear(v, jl, jr)
        else:
            self._centered_nonlinear(v, jl, jr)

        sp = self._special
        vals = v[sp.line[:, None], sp.nodes]
        jl[sp.line, sp.cell] = np.einsum("sw,sw->s", sp.wl, vals)
        jr[sp.line, sp.cell] = np.einsum("sw,sw->s", sp.wr, vals)

        jl *= self._cell_mask
        jr *= self._cell_mask
        return jl, jr

    def _centered_linear(self, v, jl, jr):
        n = v.shape[1]
        span = n - 5  # centered cells 2 .. n-4 (stencil {i-2 .. i+3})
        if span <= 0:
            return
        sl = slice(2, 2 + span)
        for j in range(6):
            col = v[:, j : j + span]
            jl[:, sl] += self._wc_l[j] * col
            jr[:, sl] += self._wc_r[j] * col

    def _centered_nonlinear(self, v, jl, jr):
        n = v.shape[1]
        span = n - 5
        if span <= 0:
            return
        sl = slice(2, 2 + span)
        windows = [v[:, j : j + span] for j in range(6)]
        betas = smoothness_indicators(np.stack(windows, axis=-1))
        for side, sub, d, out in (
            ("L", self._sub_l, self._d_l, jl),
            ("R", self._sub_r, self._d_r, jr),
        ):
            om = nonlinear_weights(betas, d)
            acc = np.zeros_like(windows[0])
            for r in range(3):
                jr_sub = sum(sub[r][j] * windows[r + j] for j in range(4))
                acc += om[r] * jr_sub
            out[:, sl] += acc


def cell_integral(field_values, grid_nodes, i: int, alpha: float,
                  mode: str = "linear", side: str = "L",
                  stencil_choice: int = 1) -> float:
    """Kernel integral over cell i of a single line (reference entry point).

    Thin scalar wrapper over the batched plan; used by tests and the
    self-check suites, not by the solvers.
    """
    from .grid import Grid1D, family_from_grid

    fam = family_from_grid(Grid1D(np.asarray(grid_nodes, dtype=float)))
    quad = LineQuadrature(fam, alpha, mode=mode, stencil_choice=stencil_choice)
    jl, jr = quad.jl_jr(np.asarray(field_values, dtype=float)[None, :])
    return float(jl[0, i] if side == "L" else jr[0, i])
