"""Global blocks and loads of the complementarity saddle-point system.

The system reads

    M U + B P      = F_v
    B^T U + D Lam  = F_q,     P >= 0, Lam >= 0, P^T Lam = 0

with ``M[i, j] = (12 mu / (tau h^3) v_i, v_j)``, ``B[i, j] = (div v_i, q_j)``,
``D`` the (lumped) pressure mass, ``F_v[i] = <p_bnd, v_i . n>`` and
``F_q[i] = (lam_old + h - h_old, q_i)``.  ``U`` holds the coefficients of
the flux ``(tau h^3 / 12 mu) grad p``, i.e. the negated physical flux.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .characteristics import TransportData, advected_source
from .fem import (
    ElementFamily,
    MixedSpace,
    SingularCoefficientError,
    div_blocks,
    velocity_mass_blocks,
)
from .mesh import CODE_TAGS, TAG_CODES, BoundaryTag
from .sparse import AssemblyPattern, SparseMatrix, factorize, write_coordinate

log = logging.getLogger(__name__)


class Residuals(NamedTuple):
    flux: float
    flux_scale: float
    mass: float
    mass_scale: float

    @property
    def flux_rel(self):
        return self.flux / self.flux_scale if self.flux_scale > 0 else self.flux

    @property
    def mass_rel(self):
        return self.mass / self.mass_scale if self.mass_scale > 0 else self.mass


@dataclass(eq=False)
class SaddleLcpSystem:
    M: SparseMatrix
    B: SparseMatrix
    D: np.ndarray
    F_v: np.ndarray
    F_q: np.ndarray
    c: float = 1.0
    # optional exact factorisation M == mass_scale * mass_base (lets solvers reuse factors)
    mass_base: Optional[SparseMatrix] = None
    mass_scale: float = 1.0

    def __post_init__(self):
        n_u, n_p = self.B.shape
        if self.M.shape != (n_u, n_u):
            raise ValueError(f"M has shape {self.M.shape}, expected {(n_u, n_u)}")
        self.D = np.asarray(self.D, dtype=float)
        self.F_v = np.asarray(self.F_v, dtype=float)
        self.F_q = np.asarray(self.F_q, dtype=float)
        if self.D.shape != (n_p,) or self.F_q.shape != (n_p,) or self.F_v.shape != (n_u,):
            raise ValueError("load or pressure-mass length does not match B")
        if not np.all(self.D > 0):
            raise ValueError("pressure mass must be strictly positive")
        if not self.c > 0:
            raise ValueError(f"active-set parameter must be positive, got {self.c}")
        self._B_csc = None

    @property
    def n_u(self):
        return self.B.shape[0]

    @property
    def n_p(self):
        return self.B.shape[1]

    @property
    def B_csc(self):
        if self._B_csc is None:
            self._B_csc = self.B.to_scipy().tocsc()
        return self._B_csc

    def residuals(self, U, P, Lam) -> Residuals:
        """Max-norm residuals of both block rows with their natural scales."""
        Bs = self.B.to_scipy()
        Ms = self.M.to_scipy()
        r1 = Ms @ U + Bs @ P - self.F_v
        r2 = Bs.T @ U + self.D * Lam - self.F_q
        s1 = abs(Ms) @ np.abs(U) + abs(Bs) @ np.abs(P) + np.abs(self.F_v)
        s2 = abs(Bs).T @ np.abs(U) + self.D * np.abs(Lam) + np.abs(self.F_q)
        norm = lambda v: float(np.max(np.abs(v))) if v.size else 0.0  # noqa: E731
        return Residuals(norm(r1), norm(s1), norm(r2), norm(s2))


def _as_pressure_law(value):
    if callable(value):
        return value
    v = float(value)
    return lambda t: v


class Assembler:
    """Assembles systems for one space, reusing patterns and unchanged blocks.

    ``boundary_pressure`` maps a :class:`BoundaryTag` to a constant or a
    function of time.  Tags of the mesh that have no entry are treated as
    impermeable walls (zero normal flux, RT0 only).
    """

    def __init__(self, space: MixedSpace, mu: float, boundary_pressure: Mapping):
        if not mu > 0:
            raise ValueError(f"viscosity must be positive, got {mu}")
        self.space = space
        self.mu = float(mu)
        self.pressure = {BoundaryTag(k): _as_pressure_law(v) for k, v in boundary_pressure.items()}
        mesh = space.mesh

        present = {CODE_TAGS[c] for c in np.unique(mesh.facet_tag[mesh.boundary_facets])}
        wall_tags = sorted((t for t in present if t not in self.pressure), key=lambda t: t.value)
        wall = np.zeros(space.n_u, dtype=bool)
        for tag in wall_tags:
            wall[space.facet_flux_dofs(mesh.facets_with_tag(tag))] = True
        self.wall = wall
        self.wall_dofs = np.flatnonzero(wall)

        dofs = space.cell_flux_dofs
        nloc = dofs.shape[1]
        rows = np.repeat(dofs, nloc, axis=1).ravel()
        cols = np.tile(dofs, (1, nloc)).ravel()
        self._keep = ~(wall[rows] | wall[cols])
        self._diag_local = dofs.ravel()
        self._M_pattern = AssemblyPattern(
            space.n_u,
            space.n_u,
            np.concatenate([rows, self.wall_dofs]),
            np.concatenate([cols, self.wall_dofs]),
        )

        pdofs = space.cell_pressure_dofs
        npl = pdofs.shape[1]
        brows = np.repeat(dofs, npl, axis=1).ravel()
        bcols = np.tile(pdofs, (1, nloc)).ravel()
        bvals = div_blocks(space).ravel() * ~wall[brows]
        self.B = SparseMatrix.from_arrays(space.n_u, space.n_p, brows, bcols, bvals)
        self.D = space.lumped_pressure_mass.copy()

        bnd_tags = mesh.facet_tag[space.bnd_facets]
        self._bnd_keep = ~wall[space.bnd_dofs]
        self._bnd_tags = bnd_tags
        self._last_weights = None
        self._last_M = None
        self._last_scale = 1.0
        self._base_weights = None
        self._base_M = None

    # -- blocks ---------------------------------------------------------------
    def mass_weights(self, tau, h_law, t):
        space = self.space
        pts = space.quad_points.reshape(-1, space.dim)
        h = np.asarray(h_law(pts, t), dtype=float).reshape(space.quad_points.shape[:2])
        if not np.all(h > 0):
            bad = np.argwhere(~(h > 0))[0]
            raise SingularCoefficientError(
                f"film thickness {h[tuple(bad)]:.6g} is not positive in cell {bad[0]} at t={t:.17g}"
            )
        return 12.0 * self.mu / (tau * h**3)

    def velocity_mass(self, tau, h_law, t) -> SparseMatrix:
        """Weighted flux mass; returns the identical object when weights repeat."""
        return self._velocity_mass(tau, h_law, t)[0]

    def _velocity_mass(self, tau, h_law, t):
        """``(M, base, scale)`` with ``M == scale * base`` exactly in the weights.

        When the new weights are a uniform multiple of the weights ``base``
        was built from, ``M`` is formed by scaling instead of reassembly.
        """
        w = self.mass_weights(tau, h_law, t)
        if self._last_weights is not None and np.array_equal(w, self._last_weights):
            return self._last_M, self._base_M, self._last_scale
        if self._base_weights is not None:
            ratio = w / self._base_weights
            alpha = ratio.flat[0]
            if np.all(ratio == alpha):
                base = self._base_M
                M = SparseMatrix(base.shape, base.indptr, base.indices, alpha * base.data)
                self._last_weights, self._last_M, self._last_scale = w, M, float(alpha)
                return M, base, float(alpha)
        blocks = velocity_mass_blocks(self.space, w)
        vals = blocks.reshape(-1) * self._keep
        if self.wall_dofs.size:
            diag = np.einsum("kaa->ka", blocks).ravel()
            dsum = np.bincount(self._diag_local, weights=diag, minlength=self.space.n_u)
            extra = dsum[self.wall_dofs]
        else:
            extra = np.zeros(0)
        M = self._M_pattern.fill(np.concatenate([vals, extra]))
        self._last_weights, self._last_M, self._last_scale = w, M, 1.0
        self._base_weights, self._base_M = w, M
        return M, M, 1.0

    def boundary_load(self, t):
        space = self.space
        p = np.zeros(space.bnd_dofs.size)
        for tag, law in self.pressure.items():
            p[self._bnd_tags == TAG_CODES[tag]] = law(t)
        vals = space.bnd_coefs * p * self._bnd_keep
        return np.bincount(space.bnd_dofs, weights=vals, minlength=space.n_u)

    def pressure_load(self, transport: TransportData, t):
        return self.D * advected_source(self.space, transport, t)

    def assemble(self, tau, h_law, transport: TransportData, t, c=1.0) -> SaddleLcpSystem:
        M, base, scale = self._velocity_mass(tau, h_law, t)
        return SaddleLcpSystem(
            M=M,
            B=self.B,
            D=self.D,
            F_v=self.boundary_load(t),
            F_q=self.pressure_load(transport, t),
            c=c,
            mass_base=base,
            mass_scale=scale,
        )


def assemble_system(space, mu, tau, h_law, transport, p_gamma, t, c=1.0) -> SaddleLcpSystem:
    """One-shot assembly at time ``t`` (the new time level)."""
    if not tau > 0:
        raise ValueError(f"time step must be positive, got {tau}")
    return Assembler(space, mu, p_gamma).assemble(tau, h_law, transport, t, c)


# --- checks and dumps -----------------------------------------------------------

def interpolate_flux(space: MixedSpace, flux: Callable):
    """RT0 coefficients of a vector field given as ``flux(points) -> (n, dim)``.

    Exact for constant fields in 2D and for linear fields in 1D.
    """
    if space.family is not ElementFamily.RT0_P0:
        raise NotImplementedError("flux interpolation is provided for RT0_P0 only")
    mesh = space.mesh
    if mesh.dim == 1:
        return np.asarray(flux(mesh.vertices), dtype=float).reshape(-1)
    mid = mesh.facet_midpoints
    vals = np.asarray(flux(mid), dtype=float).reshape(-1, 2)
    normals = np.empty((mesh.n_facets, 2))
    owner = mesh.facet_cells[:, 0]
    for f in range(mesh.n_facets):
        k = owner[f]
        j = int(np.flatnonzero(mesh.cell_facets[k] == f)[0])
        normals[f] = mesh.outward_normals(k)[j]
    return np.einsum("fd,fd->f", vals, normals) * mesh.facet_measures


@dataclass
class ConventionReport:
    pressure_error: float
    flux_error: float
    tol: float

    @property
    def ok(self):
        return self.pressure_error <= self.tol and self.flux_error <= self.tol


def solve_unconstrained(system: SaddleLcpSystem):
    """Solve the block system with every pressure DOF free and ``Lam = 0``."""
    K = sp.bmat([[system.M.to_scipy(), system.B.to_scipy()], [system.B.to_scipy().T, None]], format="csr")
    x = factorize(K).solve(np.concatenate([system.F_v, system.F_q]))
    return x[: system.n_u], x[system.n_u :]


def sign_convention_check(system, space, exact_pressure, exact_flux=None, tol=1e-10) -> ConventionReport:
    """Solve an uncavitated manufactured case and compare against its exact solution.

    ``exact_pressure(points)`` gives the pressure at the pressure DOF
    points; ``exact_flux(points)`` the vector field ``(tau h^3 / 12 mu) grad p``
    (the negated physical flux).  Errors are relative to the solution size.
    """
    U, P = solve_unconstrained(system)
    p_ex = np.asarray(exact_pressure(space.pressure_points), dtype=float).reshape(-1)
    p_err = float(np.max(np.abs(P - p_ex))) / max(1.0, float(np.max(np.abs(p_ex))))
    if exact_flux is None:
        u_err = 0.0
    else:
        u_ex = interpolate_flux(space, exact_flux)
        u_err = float(np.max(np.abs(U - u_ex))) / max(1.0, float(np.max(np.abs(u_ex))))
    report = ConventionReport(p_err, u_err, tol)
    if not report.ok:
        log.error("sign convention mismatch: pressure error %.3e, flux error %.3e", p_err, u_err)
    return report


def dump_system(system: SaddleLcpSystem, directory, prefix="system"):
    """Write M and B in Matrix Market format and the vectors as text columns."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_coordinate(d / f"{prefix}_M.mtx", system.M)
    write_coordinate(d / f"{prefix}_B.mtx", system.B)
    for name, vec in (("D", system.D), ("F_v", system.F_v), ("F_q", system.F_q)):
        np.savetxt(d / f"{prefix}_{name}.txt", vec, fmt="%.17g")
