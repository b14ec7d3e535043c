"""Structured 1D interval and 2D triangular meshes with point location."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels

BARY_EPS = 1e-12


class BoundaryTag(enum.Enum):
    INLET = "inlet"
    OUTLET = "outlet"
    OTHER = "other"


TAG_CODES = {BoundaryTag.INLET: 0, BoundaryTag.OUTLET: 1, BoundaryTag.OTHER: 2}
CODE_TAGS = {v: k for k, v in TAG_CODES.items()}
SIDES = ("left", "right", "bottom", "top")
DEFAULT_SIDE_TAGS = {
    "left": BoundaryTag.INLET,
    "right": BoundaryTag.OUTLET,
    "bottom": BoundaryTag.OTHER,
    "top": BoundaryTag.OTHER,
}


@dataclass(frozen=True)
class CellRef:
    cell: int
    bary: np.ndarray


class _OutsideDomain:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "OUTSIDE"

    def __bool__(self):
        return False


OUTSIDE = _OutsideDomain()


class Mesh:
    """Simplicial mesh of an interval or a rectangle.

    Local facet ``k`` of a triangle is the edge opposite its local vertex
    ``k``.  In 1D a cell ``(v0, v1)`` has local facets ``(v0, v1)``, i.e.
    left then right, and facets are the vertices themselves.

    ``facet_cells[f]`` holds the adjacent cells in increasing order, with
    ``-1`` in the second slot for boundary facets.  ``facet_tag[f]`` is the
    code of the facet's :class:`BoundaryTag` (``-1`` for interior facets).
    """

    def __init__(self, vertices, cells, facets, cell_facets, facet_tag, bbox):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64)
        self.facets = np.ascontiguousarray(facets, dtype=np.int64)
        self.cell_facets = np.ascontiguousarray(cell_facets, dtype=np.int64)
        self.facet_tag = np.ascontiguousarray(facet_tag, dtype=np.int64)
        self.bbox = np.ascontiguousarray(bbox, dtype=float)
        self.dim = self.vertices.shape[1]
        for arr in (self.vertices, self.cells, self.facets, self.cell_facets, self.facet_tag, self.bbox):
            arr.setflags(write=False)

        fc = np.full((self.n_facets, 2), -1, dtype=np.int64)
        count = np.zeros(self.n_facets, dtype=np.int64)
        for k in range(self.n_cells):
            for f in self.cell_facets[k]:
                if count[f] >= 2:
                    raise ValueError(f"facet {f} shared by more than two cells")
                fc[f, count[f]] = k
                count[f] += 1
        self.facet_cells = fc
        self.facet_cells.setflags(write=False)

        boundary = count == 1
        if np.any(boundary != (self.facet_tag >= 0)):
            raise ValueError("boundary facets and tagged facets differ")
        if np.any(self.cell_measures <= 0):
            raise ValueError("mesh has cells of nonpositive measure")

    # --- sizes -----------------------------------------------------------
    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_cells(self):
        return self.cells.shape[0]

    @property
    def n_facets(self):
        return self.facets.shape[0]

    # --- geometry --------------------------------------------------------
    @cached_property
    def cell_measures(self):
        v = self.vertices[self.cells]
        if self.dim == 1:
            return v[:, 1, 0] - v[:, 0, 0]
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def centroids(self):
        return self.vertices[self.cells].mean(axis=1)

    @cached_property
    def facet_measures(self):
        if self.dim == 1:
            return np.ones(self.n_facets)
        d = self.vertices[self.facets[:, 1]] - self.vertices[self.facets[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def facet_midpoints(self):
        return self.vertices[self.facets].mean(axis=1)

    @cached_property
    def boundary_facets(self):
        return np.flatnonzero(self.facet_tag >= 0)

    def outward_normals(self, k):
        """Unit outward normals of cell ``k``, one per local facet."""
        v = self.vertices[self.cells[k]]
        if self.dim == 1:
            return np.array([[-1.0], [1.0]])
        out = np.empty((3, 2))
        for j in range(3):
            a, b = v[(j + 1) % 3], v[(j + 2) % 3]
            t = b - a
            n = np.array([t[1], -t[0]])
            if np.dot(n, a - v[j]) < 0:
                n = -n
            out[j] = n / np.linalg.norm(n)
        return out

    @cached_property
    def neighbors(self):
        nb = np.full((self.n_cells, self.dim + 1), -1, dtype=np.int64)
        for k in range(self.n_cells):
            for j, f in enumerate(self.cell_facets[k]):
                a, b = self.facet_cells[f]
                nb[k, j] = b if a == k else a
        return nb

    @cached_property
    def _vertex_cells(self):
        order = np.argsort(self.cells.ravel(), kind="stable")
        owners = (order // (self.dim + 1)).astype(np.int64)
        ptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.add.at(ptr, self.cells.ravel() + 1, 1)
        return np.cumsum(ptr), owners

    def facets_with_tag(self, tag: BoundaryTag):
        return np.flatnonzero(self.facet_tag == TAG_CODES[tag])

    # --- point location --------------------------------------------------
    def locate_many(self, points, hints=None):
        """Vectorised point location; returns ``(cells, bary)`` with -1 outside."""
        points = np.asarray(points, dtype=float)
        if self.dim == 1:
            pts = points.reshape(-1)
            return kernels.locate_points_1d(self._coords_1d, pts)
        pts = np.ascontiguousarray(points.reshape(-1, 2))
        if hints is None:
            hints = np.zeros(pts.shape[0], dtype=np.int64)
        ptr, idx = self._vertex_cells
        return kernels.locate_points_2d(
            self.vertices,
            self.cells,
            self.neighbors,
            ptr,
            idx,
            self.bbox,
            pts,
            np.ascontiguousarray(hints, dtype=np.int64),
            BARY_EPS,
        )

    @cached_property
    def _coords_1d(self):
        return np.ascontiguousarray(self.vertices[:, 0])

    def clamp(self, points):
        """Clamp points into the bounding box (used for inflow feet)."""
        points = np.asarray(points, dtype=float)
        lo = self.bbox[0::2]
        hi = self.bbox[1::2]
        return np.clip(points, lo, hi)

    def to_csv(self, path):
        """Debug dump: one row per cell with its vertex coordinates."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cell"] + [f"v{j}_{ax}" for j in range(self.dim + 1) for ax in "xy"[: self.dim]])
            for k, c in enumerate(self.cells):
                w.writerow([k] + ["%.17g" % x for x in self.vertices[c].ravel()])


def locate_point(mesh: Mesh, x, hint=None):
    """Locate a single point; returns a :class:`CellRef` or ``OUTSIDE``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    hints = None if hint is None else np.array([hint])
    cells, bary = mesh.locate_many(x.reshape(1, -1), hints)
    if cells[0] < 0:
        return OUTSIDE
    return CellRef(int(cells[0]), bary[0].copy())


def build_interval_mesh(a: float, b: float, n: int) -> Mesh:
    """Uniform mesh of ``[a, b]`` with ``n`` cells; ``a`` is the inlet."""
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if int(n) != n or n < 1:
        raise ValueError(f"need a positive cell count, got {n}")
    n = int(n)
    x = np.linspace(a, b, n + 1)
    x[0], x[-1] = a, b
    cells = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    facets = np.arange(n + 1).reshape(-1, 1)
    tags = np.full(n + 1, -1)
    tags[0] = TAG_CODES[BoundaryTag.INLET]
    tags[n] = TAG_CODES[BoundaryTag.OUTLET]
    return Mesh(x.reshape(-1, 1), cells, facets, cells.copy(), tags, [a, b])


def build_structured_triangular_mesh(bbox, nx: int, ny: int, side_tags=None) -> Mesh:
    """Split an ``nx`` x ``ny`` grid of ``bbox = (x0, x1, y0, y1)`` into triangles.

    Every quad is cut along its lower-left to upper-right diagonal.  Quad
    ``(i, j)`` yields cells ``2*(j*nx + i)`` (below the diagonal) and
    ``2*(j*nx + i) + 1`` (above).  ``side_tags`` maps ``left/right/bottom/top``
    to a :class:`BoundaryTag`.
    """
    x0, x1, y0, y1 = map(float, bbox)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate bounding box {bbox}")
    if nx < 1 or ny < 1:
        raise ValueError("need nx, ny >= 1")
    tags = dict(DEFAULT_SIDE_TAGS)
    if side_tags:
        unknown = set(side_tags) - set(SIDES)
        if unknown:
            raise ValueError(f"unknown sides {sorted(unknown)}")
        tags.update({k: BoundaryTag(v) for k, v in side_tags.items()})

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    xs[-1], ys[-1] = x1, y1
    X, Y = np.meshgrid(xs, ys)
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    v00 = (jj * (nx + 1) + ii).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    cells = np.empty((2 * nx * ny, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper

    # local facet j is opposite local vertex j
    local = np.stack(
        [cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]], axis=1
    ).reshape(-1, 2)
    local.sort(axis=1)
    facets, inv = np.unique(local, axis=0, return_inverse=True)
    cell_facets = inv.reshape(-1, 3)

    counts = np.bincount(cell_facets.ravel(), minlength=facets.shape[0])
    mid = vertices[facets].mean(axis=1)
    facet_tag = np.full(facets.shape[0], -1, dtype=np.int64)
    bnd = counts == 1
    side_of = {
        "left": np.isclose(mid[:, 0], x0, rtol=0, atol=1e-12 * (x1 - x0)),
        "right": np.isclose(mid[:, 0], x1, rtol=0, atol=1e-12 * (x1 - x0)),
        "bottom": np.isclose(mid[:, 1], y0, rtol=0, atol=1e-12 * (y1 - y0)),
        "top": np.isclose(mid[:, 1], y1, rtol=0, atol=1e-12 * (y1 - y0)),
    }
    for side in SIDES:
        facet_tag[bnd & side_of[side]] = TAG_CODES[tags[side]]
    return Mesh(vertices, cells, facets, cell_facets, facet_tag, [x0, x1, y0, y1])
