"""Mixed finite element spaces: flux in H(div), pressure/saturation in L2.

Two families are provided:

``RT0_P0``
    lowest-order Raviart-Thomas flux with piecewise-constant pressure.  In 1D
    the flux space reduces to continuous P1.  A flux DOF is normalised to a
    unit normal flux through its facet; its global orientation points from
    the lower- to the higher-index adjacent cell, and outwards on the
    boundary in 2D.  In 1D every flux DOF points along ``+x``.
``P2_P1_LUMPED``
    continuous P2 vector flux with continuous P1 pressure whose mass matrix
    is row-sum lumped.

All local matrices returned here already carry the global orientation
signs of the flux DOFs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .mesh import CellRef, Mesh


class ElementFamily(enum.Enum):
    RT0_P0 = "rt0"
    P2_P1_LUMPED = "th"


class SingularCoefficientError(ValueError):
    """Raised when a mass weight is not strictly positive."""


# reference quadrature: barycentric points and weights summing to one
def _gauss_1d(npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    s = 0.5 * (x + 1.0)
    return np.stack([1.0 - s, s], axis=1), 0.5 * w


_TRI_DEG2 = (
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    np.full(3, 1.0 / 3.0),
)
_A4, _B4 = 0.445948490915965, 0.091576213509771
_WA4, _WB4 = 0.223381589678011, 0.109951743655322
_TRI_DEG4 = (
    np.array(
        [
            [_A4, _A4, 1 - 2 * _A4],
            [_A4, 1 - 2 * _A4, _A4],
            [1 - 2 * _A4, _A4, _A4],
            [_B4, _B4, 1 - 2 * _B4],
            [_B4, 1 - 2 * _B4, _B4],
            [1 - 2 * _B4, _B4, _B4],
        ]
    ),
    np.array([_WA4] * 3 + [_WB4] * 3),
)


def reference_quadrature(dim, degree):
    """Barycentric quadrature on the reference simplex, exact to ``degree``."""
    if dim == 1:
        if degree <= 3:
            return _gauss_1d(2)
        if degree <= 5:
            return _gauss_1d(3)
    elif dim == 2:
        if degree <= 2:
            return _TRI_DEG2
        if degree <= 4:
            return _TRI_DEG4
    raise ValueError(f"no quadrature of degree {degree} in {dim}D")


DEFAULT_QUAD_DEGREE = {ElementFamily.RT0_P0: 2, ElementFamily.P2_P1_LUMPED: 4}


@dataclass(eq=False)
class MixedSpace:
    mesh: Mesh
    family: ElementFamily
    n_u: int
    n_p: int
    cell_flux_dofs: np.ndarray
    cell_flux_signs: np.ndarray
    cell_pressure_dofs: np.ndarray
    pressure_points: np.ndarray
    pressure_hints: np.ndarray
    quad_bary: np.ndarray
    quad_ref_weights: np.ndarray
    # boundary functional: F_v[dof] += p(facet) * coef
    bnd_facets: np.ndarray = field(repr=False)
    bnd_dofs: np.ndarray = field(repr=False)
    bnd_coefs: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.mesh.dim

    @property
    def pressure_kind(self):
        return "p0" if self.family is ElementFamily.RT0_P0 else "p1"

    @cached_property
    def quad_points(self):
        """Physical quadrature points, shape ``(n_cells, q, dim)``."""
        v = self.mesh.vertices[self.mesh.cells]
        return np.einsum("qm,kmd->kqd", self.quad_bary, v)

    @cached_property
    def quad_weights(self):
        return np.outer(self.mesh.cell_measures, self.quad_ref_weights)

    @cached_property
    def flux_values(self):
        """Signed flux basis values at quadrature points, ``(nc, q, nloc, dim)``."""
        vals, _ = _flux_basis(self, np.arange(self.mesh.n_cells), self.quad_bary)
        return vals

    @cached_property
    def flux_div(self):
        _, div = _flux_basis(self, np.arange(self.mesh.n_cells), self.quad_bary)
        return div

    @cached_property
    def pressure_values(self):
        """Pressure basis at quadrature points, ``(q, nloc_p)`` (same on every cell)."""
        if self.pressure_kind == "p0":
            return np.ones((self.quad_bary.shape[0], 1))
        return self.quad_bary.copy()

    @cached_property
    def lumped_pressure_mass(self):
        """Diagonal of D."""
        meas = self.mesh.cell_measures
        if self.pressure_kind == "p0":
            return meas.copy()
        nloc = self.dim + 1
        return np.bincount(
            self.cell_pressure_dofs.ravel(),
            weights=np.repeat(meas / nloc, nloc),
            minlength=self.n_p,
        )

    def facet_flux_dofs(self, facets):
        """Flux DOFs carried by the given facets (RT0 only)."""
        if self.family is not ElementFamily.RT0_P0:
            raise NotImplementedError("wall conditions are only available for RT0_P0")
        return np.asarray(facets, dtype=np.int64)


def _grad_bary(mesh: Mesh, cells):
    """Gradients of barycentric coordinates, ``(nc, d+1, dim)``."""
    v = mesh.vertices[mesh.cells[cells]]
    if mesh.dim == 1:
        L = v[:, 1, 0] - v[:, 0, 0]
        return np.stack([-1.0 / L, 1.0 / L], axis=1)[:, :, None]
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)  # columns
    Jinv = np.linalg.inv(J)
    g1, g2 = Jinv[:, 0, :], Jinv[:, 1, :]
    return np.stack([-g1 - g2, g1, g2], axis=1)


def _flux_basis(space: MixedSpace, cells, bary):
    """Flux basis values ``(nc, q, nloc, dim)`` and divergences ``(nc, q, nloc)``."""
    mesh = space.mesh
    cells = np.asarray(cells)
    nq = bary.shape[0]
    signs = space.cell_flux_signs[cells]
    gb = _grad_bary(mesh, cells)
    if space.family is ElementFamily.RT0_P0:
        if mesh.dim == 1:
            vals = np.broadcast_to(bary[None, :, :, None], (cells.size, nq, 2, 1)).copy()
            div = np.broadcast_to(gb[:, None, :, 0], (cells.size, nq, 2)).copy()
        else:
            v = mesh.vertices[mesh.cells[cells]]
            area = mesh.cell_measures[cells]
            x = np.einsum("qm,kmd->kqd", bary, v)
            vals = (x[:, :, None, :] - v[:, None, :, :]) / (2.0 * area[:, None, None, None])
            div = np.broadcast_to((1.0 / area)[:, None, None], (cells.size, nq, 3)).copy()
        vals *= signs[:, None, :, None]
        div *= signs[:, None, :]
        return vals, div

    # Taylor-Hood: P2 scalar shape functions and their gradients
    if mesh.dim == 1:
        b0, b1 = bary[:, 0], bary[:, 1]
        N = np.stack([b0 * (2 * b0 - 1), 4 * b0 * b1, b1 * (2 * b1 - 1)], axis=1)  # (q, 3)
        dNdb = [  # derivative w.r.t. b0 and b1
            np.stack([4 * b0 - 1, 4 * b1, np.zeros_like(b0)], axis=1),
            np.stack([np.zeros_like(b0), 4 * b0, 4 * b1 - 1], axis=1),
        ]
        dN = dNdb[0][None] * gb[:, None, 0:1, 0] + dNdb[1][None] * gb[:, None, 1:2, 0]
        vals = np.broadcast_to(N[None, :, :, None], (cells.size, nq, 3, 1)).copy()
        return vals, dN
    b = bary
    N = np.stack(
        [
            b[:, 0] * (2 * b[:, 0] - 1),
            b[:, 1] * (2 * b[:, 1] - 1),
            b[:, 2] * (2 * b[:, 2] - 1),
            4 * b[:, 1] * b[:, 2],
            4 * b[:, 0] * b[:, 2],
            4 * b[:, 0] * b[:, 1],
        ],
        axis=1,
    )  # (q, 6)
    # dN[a]/db[m], shape (q, 6, 3)
    z = np.zeros(nq)
    dNdb = np.stack(
        [
            np.stack([4 * b[:, 0] - 1, z, z], axis=1),
            np.stack([z, 4 * b[:, 1] - 1, z], axis=1),
            np.stack([z, z, 4 * b[:, 2] - 1], axis=1),
            np.stack([z, 4 * b[:, 2], 4 * b[:, 1]], axis=1),
            np.stack([4 * b[:, 2], z, 4 * b[:, 0]], axis=1),
            np.stack([4 * b[:, 1], 4 * b[:, 0], z], axis=1),
        ],
        axis=1,
    )
    gradN = np.einsum("qam,kmd->kqad", dNdb, gb)  # (nc, q, 6, 2)
    nc = cells.size
    vals = np.zeros((nc, nq, 12, 2))
    div = np.empty((nc, nq, 12))
    for a in range(6):
        for c in range(2):
            vals[:, :, 2 * a + c, c] = N[None, :, a]
            div[:, :, 2 * a + c] = gradN[:, :, a, c]
    return vals, div


def build_mixed_space(mesh: Mesh, family: ElementFamily = ElementFamily.RT0_P0, quad_degree=None) -> MixedSpace:
    family = ElementFamily(family)
    if mesh.dim not in (1, 2):
        raise ValueError(f"unsupported mesh dimension {mesh.dim}")
    degree = DEFAULT_QUAD_DEGREE[family] if quad_degree is None else int(quad_degree)
    if family is ElementFamily.P2_P1_LUMPED and degree < 4:
        raise ValueError("P2_P1_LUMPED needs a quadrature of degree >= 4 for a nonsingular flux mass")
    qb, qw = reference_quadrature(mesh.dim, degree)
    nc = mesh.n_cells
    bf = mesh.boundary_facets

    if family is ElementFamily.RT0_P0:
        n_p = nc
        p_dofs = np.arange(nc).reshape(-1, 1)
        p_points = mesh.centroids.copy()
        p_hints = np.arange(nc)
        if mesh.dim == 1:
            n_u = mesh.n_vertices
            f_dofs = mesh.cells.copy()
            f_signs = np.ones((nc, 2))
            bnd_dofs = mesh.facets[bf, 0]
            # hat function equals +1 at its vertex; outward normal is -1 at the left end
            bnd_coefs = np.where(mesh.vertices[bnd_dofs, 0] == mesh.bbox[0], -1.0, 1.0)
        else:
            n_u = mesh.n_facets
            f_dofs = mesh.cell_facets.copy()
            owner = mesh.facet_cells[f_dofs, 0]
            f_signs = np.where(owner == np.arange(nc)[:, None], 1.0, -1.0)
            bnd_dofs = bf.copy()
            bnd_coefs = np.ones(bf.size)
        bnd_facets = bf.copy()
    else:
        nv = mesh.n_vertices
        n_p = nv
        p_dofs = mesh.cells.copy()
        p_points = mesh.vertices.copy()
        ptr, idx = mesh._vertex_cells
        p_hints = idx[ptr[:-1]]
        if mesh.dim == 1:
            n_u = 2 * nc + 1
            base = 2 * np.arange(nc)
            f_dofs = np.stack([base, base + 1, base + 2], axis=1)
            f_signs = np.ones((nc, 3))
            bnd_facets = bf.copy()
            bnd_dofs = 2 * mesh.facets[bf, 0]
            bnd_coefs = np.where(mesh.vertices[mesh.facets[bf, 0], 0] == mesh.bbox[0], -1.0, 1.0)
        else:
            n_nodes = nv + mesh.n_facets
            n_u = 2 * n_nodes
            nodes = np.concatenate([mesh.cells, nv + mesh.cell_facets], axis=1)  # (nc, 6)
            f_dofs = (2 * nodes[:, :, None] + np.arange(2)[None, None, :]).reshape(nc, 12)
            f_signs = np.ones((nc, 12))
            facets_l, dofs_l, coefs_l = [], [], []
            for f in bf:
                k = mesh.facet_cells[f, 0]
                j = int(np.flatnonzero(mesh.cell_facets[k] == f)[0])
                n = mesh.outward_normals(k)[j]
                length = mesh.facet_measures[f]
                a, b = mesh.facets[f]
                for node, wgt in ((a, length / 6.0), (b, length / 6.0), (nv + f, 2.0 * length / 3.0)):
                    for c in range(2):
                        facets_l.append(f)
                        dofs_l.append(2 * node + c)
                        coefs_l.append(wgt * n[c])
            bnd_facets = np.array(facets_l, dtype=np.int64)
            bnd_dofs = np.array(dofs_l, dtype=np.int64)
            bnd_coefs = np.array(coefs_l)

    return MixedSpace(
        mesh=mesh,
        family=family,
        n_u=int(n_u),
        n_p=int(n_p),
        cell_flux_dofs=np.ascontiguousarray(f_dofs, dtype=np.int64),
        cell_flux_signs=np.ascontiguousarray(f_signs, dtype=float),
        cell_pressure_dofs=np.ascontiguousarray(p_dofs, dtype=np.int64),
        pressure_points=np.ascontiguousarray(p_points, dtype=float),
        pressure_hints=np.ascontiguousarray(p_hints, dtype=np.int64),
        quad_bary=qb,
        quad_ref_weights=qw,
        bnd_facets=np.asarray(bnd_facets, dtype=np.int64),
        bnd_dofs=np.asarray(bnd_dofs, dtype=np.int64),
        bnd_coefs=np.asarray(bnd_coefs, dtype=float),
    )


# --- local matrices ---------------------------------------------------------

def velocity_mass_blocks(space: MixedSpace, weights):
    """Local weighted flux mass matrices for all cells.

    ``weights`` holds the coefficient at every quadrature point,
    shape ``(n_cells, q)``.
    """
    weights = np.asarray(weights, dtype=float)
    if not np.all(weights > 0):
        raise SingularCoefficientError("flux mass weight must be strictly positive")
    V = space.flux_values
    return np.einsum("kqad,kqbd,kq->kab", V, V, weights * space.quad_weights, optimize=True)


def div_blocks(space: MixedSpace):
    """Local ``(div v_a, q_j)`` blocks, shape ``(n_cells, nloc_u, nloc_p)``."""
    return np.einsum("kqa,qj,kq->kaj", space.flux_div, space.pressure_values, space.quad_weights)


def local_velocity_mass(space: MixedSpace, cell: int, weight):
    """Weighted flux mass on one cell; ``weight`` maps points ``(q, dim)`` to values."""
    pts = space.quad_points[cell]
    w = np.broadcast_to(np.asarray(weight(pts), dtype=float), (pts.shape[0],))
    if not np.all(w > 0):
        raise SingularCoefficientError(f"nonpositive weight on cell {cell}")
    V = space.flux_values[cell]
    return np.einsum("qad,qbd,q->ab", V, V, w * space.quad_weights[cell])


def local_div(space: MixedSpace, cell: int):
    return np.einsum("qa,qj,q->aj", space.flux_div[cell], space.pressure_values, space.quad_weights[cell])


def local_pressure_mass(space: MixedSpace, cell: int):
    meas = space.mesh.cell_measures[cell]
    if space.pressure_kind == "p0":
        return np.array([[meas]])
    n = space.dim + 1
    return np.eye(n) * meas / n


# --- scalar fields ----------------------------------------------------------

@dataclass(eq=False)
class ScalarField:
    space: MixedSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.n_p,):
            raise ValueError(f"expected {self.space.n_p} values, got {self.values.shape}")

    def eval_many(self, cells, bary):
        if self.space.pressure_kind == "p0":
            return self.values[cells]
        dofs = self.space.cell_pressure_dofs[cells]
        return np.einsum("km,km->k", self.values[dofs], bary)


def eval_scalar_field(fld: ScalarField, at: CellRef):
    return float(fld.eval_many(np.array([at.cell]), np.asarray(at.bary).reshape(1, -1))[0])
