"""1D grids, sampled fields and line-decomposed 2D meshes.

All solver lines share one structure: a uniform interior spacing ``h`` with
(possibly) fractional end cells of width ``lam * h``.  Uniform grids have
``lam == 1`` at both ends, the half-cell mesh has ``lam == 1/2``, and chords
of an embedded circle carry per-line fractions determined by the geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# End cells narrower than this fraction of h snap onto the lattice node,
# keeping the ENO extrapolation coefficients bounded (they divide by lam).
LAMBDA_SNAP = 1e-10

_LENGTH_RTOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Ordered node coordinates x_0 < x_1 < ... < x_N with per-cell spacings."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 7:
            raise ValueError("need at least 7 nodes (6 cells) for the six-point stencil")
        dx = np.diff(nodes)
        if np.any(dx <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        length = nodes[-1] - nodes[0]
        if abs(dx.sum() - length) > _LENGTH_RTOL * abs(length):
            raise ValueError("spacings do not telescope to the domain length")

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def ncells(self) -> int:
        return self.nodes.size - 1

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])


@dataclass
class Field:
    """Real values sampled at the nodes of a grid."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.nodes.shape:
            raise ValueError("values length must equal node count")


def build_uniform_grid(a: float, b: float, n: int) -> Grid1D:
    """Uniform grid with ``n`` cells on [a, b]."""
    if b <= a:
        raise ValueError("b must exceed a")
    if n < 6:
        raise ValueError("need at least 6 cells for the six-point stencil")
    return Grid1D(np.linspace(a, b, n + 1))


def build_half_cell_grid(a: float, b: float, n: int) -> Grid1D:
    """Grid of ``n`` cells whose first and last cells are half-width.

    Interior cells have width h = (b - a)/(n - 1); the two end cells have
    width h/2 so the spacings telescope to b - a.
    """
    if b <= a:
        raise ValueError("b must exceed a")
    if n < 7:
        raise ValueError("need at least 7 cells (half cells shrink the stencil span)")
    h = (b - a) / (n - 1)
    nodes = np.empty(n + 1)
    nodes[0] = a
    nodes[1:n] = a + h / 2 + h * np.arange(n - 1)
    nodes[n] = b
    return Grid1D(nodes)


@dataclass(frozen=True)
class LineGeometry:
    """One solver line: uniform interior spacing with fractional end cells."""

    nodes: np.ndarray
    h: float
    lam_a: float
    lam_b: float

    @property
    def ncells(self) -> int:
        return self.nodes.size - 1


def line_geometry(grid: Grid1D) -> LineGeometry:
    """Classify a Grid1D as a fractional-end-cell line.

    Rejects grids whose interior spacing is not uniform; the quadrature plan
    only supports the uniform-interior family.
    """
    dx = grid.spacings
    h = float(np.median(dx))
    interior = dx[1:-1]
    if interior.size and np.max(np.abs(interior - h)) > 1e-9 * h:
        raise ValueError("interior cells must share one spacing")
    lam_a = float(dx[0] / h)
    lam_b = float(dx[-1] / h)
    for lam in (lam_a, lam_b):
        if not (0.0 < lam <= 1.0 + 1e-9):
            raise ValueError(f"end-cell fraction {lam} outside (0, 1]")
    if abs(lam_a - 1.0) < 1e-9:
        lam_a = 1.0
    if abs(lam_b - 1.0) < 1e-9:
        lam_b = 1.0
    return LineGeometry(grid.nodes, h, lam_a, lam_b)


@dataclass
class LineFamily:
    """A batch of lines sharing interior spacing, padded to a common width.

    Padded node slots replicate the line's last coordinate; padded cells get
    zero width so convolution sweeps cannot leak across line ends.
    """

    nodes: np.ndarray        # (L, M) coordinates, edge-replicated padding
    nnodes: np.ndarray       # (L,) real node counts
    h: float
    lam_a: np.ndarray        # (L,)
    lam_b: np.ndarray        # (L,)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.nnodes = np.asarray(self.nnodes, dtype=np.int64)
        self.lam_a = np.asarray(self.lam_a, dtype=float)
        self.lam_b = np.asarray(self.lam_b, dtype=float)

    @property
    def nlines(self) -> int:
        return self.nodes.shape[0]

    @property
    def width(self) -> int:
        return self.nodes.shape[1]

    @property
    def ncells(self) -> np.ndarray:
        return self.nnodes - 1

    @property
    def last(self) -> np.ndarray:
        """Column index of each line's final node."""
        return self.nnodes - 1

    @property
    def a_coords(self) -> np.ndarray:
        return self.nodes[:, 0]

    @property
    def b_coords(self) -> np.ndarray:
        return np.take_along_axis(self.nodes, self.last[:, None], axis=1)[:, 0]

    def cell_widths(self) -> np.ndarray:
        """(L, M-1) cell widths; padded cells are zero."""
        w = np.diff(self.nodes, axis=1)
        mask = np.arange(w.shape[1])[None, :] < self.ncells[:, None]
        return np.where(mask, w, 0.0)

    def node_mask(self) -> np.ndarray:
        return np.arange(self.width)[None, :] < self.nnodes[:, None]

    def gather_last(self, values: np.ndarray) -> np.ndarray:
        """Per-line value at the final node of (L, M) data."""
        return np.take_along_axis(values, self.last[:, None], axis=1)[:, 0]


def family_from_lines(geoms: list[LineGeometry]) -> LineFamily:
    hs = {round(g.h, 14) for g in geoms}
    if len(hs) != 1:
        raise ValueError("all lines of a family must share the interior spacing")
    m = max(g.nodes.size for g in geoms)
    nodes = np.empty((len(geoms), m))
    nn = np.empty(len(geoms), dtype=np.int64)
    for i, g in enumerate(geoms):
        nodes[i, : g.nodes.size] = g.nodes
        nodes[i, g.nodes.size :] = g.nodes[-1]
        nn[i] = g.nodes.size
    return LineFamily(
        nodes,
        nn,
        geoms[0].h,
        np.array([g.lam_a for g in geoms]),
        np.array([g.lam_b for g in geoms]),
    )


def family_from_grid(grid: Grid1D) -> LineFamily:
    return family_from_lines([line_geometry(grid)])


@dataclass
class LineMesh2D:
    """Line decomposition of a 2D domain.

    ``x_lines[j]`` is a (y, Grid1D) pair sweeping x at fixed y; ``y_lines[i]``
    sweeps y at fixed x.  ``x_ids``/``y_ids`` map each line node to a global
    unknown id; interior lattice points carry the same id from both families.
    ``pinned`` marks ids whose values are boundary data, not unknowns.
    """

    x_lines: list[tuple[float, Grid1D]]
    y_lines: list[tuple[float, Grid1D]]
    x_ids: list[np.ndarray]
    y_ids: list[np.ndarray]
    coords: np.ndarray       # (n_ids, 2) coordinates per global id
    pinned: np.ndarray       # (n_ids,) bool
    h: float
    interior_ids: np.ndarray = field(init=False)

    def __post_init__(self):
        self.interior_ids = np.nonzero(~self.pinned)[0]

    def repin(self, pinned: np.ndarray) -> None:
        self.pinned = np.asarray(pinned, dtype=bool)
        self.interior_ids = np.nonzero(~self.pinned)[0]

    @property
    def n_ids(self) -> int:
        return self.coords.shape[0]

    def x_family(self) -> LineFamily:
        return family_from_lines([line_geometry(g) for _, g in self.x_lines])

    def y_family(self) -> LineFamily:
        return family_from_lines([line_geometry(g) for _, g in self.y_lines])

    def x_id_matrix(self, trash: int) -> np.ndarray:
        return _pad_ids(self.x_ids, trash)

    def y_id_matrix(self, trash: int) -> np.ndarray:
        return _pad_ids(self.y_ids, trash)


def _pad_ids(ids: list[np.ndarray], trash: int) -> np.ndarray:
    m = max(a.size for a in ids)
    out = np.full((len(ids), m), trash, dtype=np.int64)
    for i, a in enumerate(ids):
        out[i, : a.size] = a
    return out


def build_rect_line_mesh(
    ax: float,
    bx: float,
    ay: float,
    by: float,
    n: int,
    half_cell: bool = False,
    pin_boundary: bool = True,
    edge_lines: bool = False,
) -> LineMesh2D:
    """Tensor-product mesh on a rectangle, decomposed into lines.

    With ``half_cell`` the 1D node set per direction is the half-cell grid.
    ``edge_lines`` additionally builds the four boundary rows/columns as lines
    (needed by advection, where outflow edges are evolved); otherwise only
    interior rows/columns become lines.  ``pin_boundary`` pins all of the
    rectangle's boundary; advection callers pin inflow edges themselves.
    """
    build = build_half_cell_grid if half_cell else build_uniform_grid
    gx = build(ax, bx, n)
    gy = build(ay, by, n)
    xs, ys = gx.nodes, gy.nodes
    nx, ny = xs.size, ys.size

    ids = np.arange(nx * ny).reshape(ny, nx)  # [j, i]
    xx, yy = np.meshgrid(xs, ys)
    coords = np.column_stack([xx.ravel(), yy.ravel()])

    pinned = np.zeros(nx * ny, dtype=bool)
    if pin_boundary:
        edge = np.zeros((ny, nx), dtype=bool)
        edge[0, :] = edge[-1, :] = True
        edge[:, 0] = edge[:, -1] = True
        pinned[ids[edge]] = True

    jrange = range(ny) if edge_lines else range(1, ny - 1)
    irange = range(nx) if edge_lines else range(1, nx - 1)
    x_lines = [(float(ys[j]), gx) for j in jrange]
    y_lines = [(float(xs[i]), gy) for i in irange]
    x_ids = [ids[j, :].copy() for j in jrange]
    y_ids = [ids[:, i].copy() for i in irange]
    h = (bx - ax) / (n - 1) if half_cell else (bx - ax) / n
    return LineMesh2D(x_lines, y_lines, x_ids, y_ids, coords, pinned, h)


def build_circle_line_mesh(radius: float, n: int, min_nodes: int = 7) -> LineMesh2D:
    """Disk of given radius embedded in an (n+1) x (n+1) lattice.

    Lines are lattice rows/columns clipped to the circle; each surviving line
    gets boundary end nodes exactly on the circle.  Rows or columns holding
    fewer than ``min_nodes`` nodes are dropped (their strictly-interior
    lattice points, if any, would be orphaned, which raises).
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    h = 2.0 * radius / n
    lattice = -radius + h * np.arange(n + 1)

    def chord(span: float) -> np.ndarray | None:
        """Interior lattice coords for a chord of half-width ``span``."""
        inside = lattice[np.abs(lattice) < span - LAMBDA_SNAP * h]
        if inside.size < min_nodes - 2:
            return None
        return inside

    interior_id: dict[tuple[int, int], int] = {}
    coords: list[tuple[float, float]] = []
    pinned: list[bool] = []

    def node_id(i: int, j: int) -> int:
        key = (i, j)
        if key not in interior_id:
            interior_id[key] = len(coords)
            coords.append((lattice[i], lattice[j]))
            pinned.append(False)
        return interior_id[key]

    def boundary_id(x: float, y: float) -> int:
        coords.append((x, y))
        pinned.append(True)
        return len(coords) - 1

    x_lines, x_ids, rows_used = [], [], set()
    for j in range(n + 1):
        y = lattice[j]
        if radius**2 - y**2 <= (LAMBDA_SNAP * h) ** 2:
            continue
        span = math.sqrt(radius**2 - y**2)
        inside = chord(span)
        if inside is None:
            continue
        rows_used.add(j)
        i0 = int(round((inside[0] + radius) / h))
        inner = [node_id(i0 + p, j) for p in range(inside.size)]
        ids = np.array([boundary_id(-span, y)] + inner + [boundary_id(span, y)])
        nodes = np.concatenate([[-span], inside, [span]])
        x_lines.append((y, Grid1D(nodes)))
        x_ids.append(ids)

    y_lines, y_ids, cols_used = [], [], set()
    for i in range(n + 1):
        x = lattice[i]
        if radius**2 - x**2 <= (LAMBDA_SNAP * h) ** 2:
            continue
        span = math.sqrt(radius**2 - x**2)
        inside = chord(span)
        if inside is None:
            continue
        cols_used.add(i)
        j0 = int(round((inside[0] + radius) / h))
        inner = [node_id(i, j0 + p) for p in range(inside.size)]
        ids = np.array([boundary_id(x, -span)] + inner + [boundary_id(x, span)])
        nodes = np.concatenate([[-span], inside, [span]])
        y_lines.append((x, Grid1D(nodes)))
        y_ids.append(ids)

    for (i, j) in interior_id:
        if j not in rows_used or i not in cols_used:
            raise ValueError(
                "lattice point inside the disk lost its row or column; refine the lattice"
            )

    return LineMesh2D(
        x_lines,
        y_lines,
        x_ids,
        y_ids,
        np.array(coords),
        np.array(pinned, dtype=bool),
        h,
    )
