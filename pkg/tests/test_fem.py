import numpy as np
import pytest
import sympy

from lubricav.fem import (
    ElementFamily,
    ScalarField,
    SingularCoefficientError,
    build_mixed_space,
    eval_scalar_field,
    local_div,
    local_pressure_mass,
    local_velocity_mass,
    velocity_mass_blocks,
)
from lubricav.mesh import TAG_CODES, BoundaryTag, CellRef, Mesh, build_interval_mesh, build_structured_triangular_mesh

RT0 = ElementFamily.RT0_P0
TH = ElementFamily.P2_P1_LUMPED
ONE = lambda x: np.ones(len(x))  # noqa: E731


def single_triangle(verts):
    other = TAG_CODES[BoundaryTag.OTHER]
    v = np.asarray(verts, dtype=float)
    return Mesh(v, [[0, 1, 2]], [[1, 2], [0, 2], [0, 1]], [[0, 1, 2]], [other] * 3,
                [v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max()])


def rt0_mass_oracle(verts):
    """Exact RT0 mass on a triangle, basis (x - v_k) / (2 |K|), by symbolic integration."""
    x, y, s, t = sympy.symbols("x y s t")
    V = [sympy.Matrix([sympy.Rational(c).limit_denominator(10**6) for c in v]) for v in verts]
    J = sympy.Matrix.hstack(V[1] - V[0], V[2] - V[0])
    area = abs(J.det()) / 2
    pt = V[0] + J * sympy.Matrix([s, t])
    phi = [(pt - V[k]) / (2 * area) for k in range(3)]
    out = sympy.zeros(3, 3)
    for i in range(3):
        for j in range(3):
            integrand = (phi[i].T * phi[j])[0] * abs(J.det())
            out[i, j] = sympy.integrate(sympy.integrate(integrand, (t, 0, 1 - s)), (s, 0, 1))
    return np.array(out.tolist(), dtype=float)


class TestSpaces:
    def test_interval_counts(self):
        sp = build_mixed_space(build_interval_mesh(0, 1, 4), RT0)
        assert (sp.n_u, sp.n_p) == (5, 4)

    def test_square_counts(self):
        sp = build_mixed_space(build_structured_triangular_mesh((0, 1, 0, 1), 1, 1), RT0)
        assert (sp.n_u, sp.n_p) == (5, 2)

    def test_large_square(self):
        sp = build_mixed_space(build_structured_triangular_mesh((0, 1, 0, 1), 100, 100), RT0)
        assert sp.n_p == 20000

    def test_taylor_hood_counts(self):
        m = build_structured_triangular_mesh((0, 1, 0, 1), 3, 2)
        sp = build_mixed_space(m, TH)
        assert sp.n_p == m.n_vertices
        assert sp.n_u == 2 * (m.n_vertices + m.n_facets)
        sp1 = build_mixed_space(build_interval_mesh(0, 1, 4), TH)
        assert (sp1.n_u, sp1.n_p) == (9, 5)

    def test_taylor_hood_needs_exact_quadrature(self):
        with pytest.raises(ValueError):
            build_mixed_space(build_interval_mesh(0, 1, 2), TH, quad_degree=2)

    def test_opposite_signs_on_shared_facets(self):
        m = build_structured_triangular_mesh((0, 1, 0, 1), 3, 3)
        sp = build_mixed_space(m, RT0)
        for f in range(m.n_facets):
            a, b = m.facet_cells[f]
            if b < 0:
                continue
            sa = sp.cell_flux_signs[a][list(m.cell_facets[a]).index(f)]
            sb = sp.cell_flux_signs[b][list(m.cell_facets[b]).index(f)]
            assert sa == -sb


class TestLocalMatrices:
    def test_unit_interval_mass(self):
        sp = build_mixed_space(build_interval_mesh(0, 1, 1), RT0)
        np.testing.assert_allclose(local_velocity_mass(sp, 0, ONE), [[1 / 3, 1 / 6], [1 / 6, 1 / 3]], atol=1e-15)

    def test_reference_triangle_matches_symbolic_oracle(self):
        verts = [(0, 0), (1, 0), (0, 1)]
        sp = build_mixed_space(single_triangle(verts), RT0)
        ref = rt0_mass_oracle(verts)
        s = sp.cell_flux_signs[0]
        np.testing.assert_allclose(local_velocity_mass(sp, 0, ONE), ref * np.outer(s, s), atol=1e-14)

    def test_skewed_triangle_matches_symbolic_oracle(self):
        verts = [(0.1, -0.2), (1.3, 0.25), (0.4, 0.9)]
        sp = build_mixed_space(single_triangle(verts), RT0)
        np.testing.assert_allclose(local_velocity_mass(sp, 0, ONE), rt0_mass_oracle(verts), rtol=1e-12, atol=1e-14)

    def test_linear_in_weight(self):
        m = build_structured_triangular_mesh((0, 2, 0, 1), 2, 2)
        sp = build_mixed_space(m, RT0)
        base = local_velocity_mass(sp, 3, ONE)
        np.testing.assert_allclose(local_velocity_mass(sp, 3, lambda x: 7.5 * np.ones(len(x))), 7.5 * base, rtol=1e-14)

    def test_spd_for_random_positive_weights(self, rng):
        m = build_structured_triangular_mesh((0, 1, 0, 1), 3, 3)
        for family in (RT0, TH):
            sp = build_mixed_space(m, family)
            w = rng.uniform(0.1, 10.0, sp.quad_points.shape[:2])
            for block in velocity_mass_blocks(sp, w):
                np.testing.assert_allclose(block, block.T, rtol=1e-13, atol=0)
                assert np.linalg.eigvalsh(block).min() > 0

    def test_nonpositive_weight_rejected(self):
        sp = build_mixed_space(build_interval_mesh(0, 1, 2), RT0)
        with pytest.raises(SingularCoefficientError):
            local_velocity_mass(sp, 0, lambda x: np.zeros(len(x)))

    def test_triangle_div_is_orientation(self):
        m = build_structured_triangular_mesh((0, 1, 0, 1), 2, 2)
        sp = build_mixed_space(m, RT0)
        for k in range(m.n_cells):
            np.testing.assert_allclose(local_div(sp, k)[:, 0], sp.cell_flux_signs[k], atol=1e-14)

    def test_interval_div(self):
        sp = build_mixed_space(build_interval_mesh(0.5, 2.0, 3), RT0)
        np.testing.assert_allclose(local_div(sp, 1)[:, 0], [-1.0, 1.0], atol=1e-14)

    def test_pressure_mass(self):
        m = build_structured_triangular_mesh((0, 2, 0, 1), 1, 1)
        assert local_pressure_mass(build_mixed_space(m, RT0), 0)[0, 0] == pytest.approx(1.0)
        sp = build_mixed_space(build_interval_mesh(0, 0.6, 2), TH)
        np.testing.assert_allclose(local_pressure_mass(sp, 0), np.diag([0.15, 0.15]))
        np.testing.assert_allclose(sp.lumped_pressure_mass, [0.15, 0.3, 0.15])

    def test_lumping_is_row_sum(self):
        # row sums of the consistent P1 mass on a segment are L/2
        L = 0.4
        consistent = L * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
        sp = build_mixed_space(build_interval_mesh(0, L, 1), TH)
        np.testing.assert_allclose(np.diag(local_pressure_mass(sp, 0)), consistent.sum(axis=1))


class TestContinuity:
    def test_normal_flux_continuous(self, rng):
        m = build_structured_triangular_mesh((0, 1, 0, 1), 3, 2)
        sp = build_mixed_space(m, RT0)
        from lubricav.fem import _flux_basis

        for f in range(m.n_facets):
            a, b = m.facet_cells[f]
            if b < 0:
                continue
            p = m.facet_midpoints[f] + 0.1 * rng.uniform(-1, 1) * np.diff(m.vertices[m.facets[f]], axis=0)[0]
            n = m.outward_normals(a)[list(m.cell_facets[a]).index(f)]
            vals = []
            for k in (a, b):
                v = m.vertices[m.cells[k]]
                bary = np.linalg.solve(np.vstack([v.T, np.ones(3)]), np.append(p, 1.0))
                phi, _ = _flux_basis(sp, np.array([k]), bary.reshape(1, 3))
                j = list(m.cell_facets[k]).index(f)
                vals.append(phi[0, 0, j] @ n)
            assert vals[0] == pytest.approx(vals[1], abs=1e-12)

    def test_divergence_theorem(self, rng):
        from lubricav.assembly import Assembler

        m = build_structured_triangular_mesh((0, 1, 0, 2), 4, 3)
        sp = build_mixed_space(m, RT0)
        B = Assembler(sp, 1.0, {t: 0.0 for t in BoundaryTag}).B.toarray()
        U = rng.standard_normal(sp.n_u)
        boundary = U[m.boundary_facets].sum()
        assert (B.T @ U).sum() == pytest.approx(boundary, abs=1e-12)


class TestScalarField:
    def test_p0_value(self):
        sp = build_mixed_space(build_interval_mesh(0, 1, 5), RT0)
        vals = np.zeros(5)
        vals[3] = 0.7
        f = ScalarField(sp, vals)
        assert eval_scalar_field(f, CellRef(3, np.array([0.2, 0.8]))) == 0.7

    def test_p1_midpoint(self):
        sp = build_mixed_space(build_interval_mesh(0, 1, 1), TH)
        assert eval_scalar_field(ScalarField(sp, [0.0, 1.0]), CellRef(0, np.array([0.5, 0.5]))) == 0.5

    def test_constant_field(self, rng):
        sp = build_mixed_space(build_structured_triangular_mesh((0, 1, 0, 1), 2, 2), TH)
        f = ScalarField(sp, np.ones(sp.n_p))
        bary = rng.dirichlet(np.ones(3))
        assert eval_scalar_field(f, CellRef(5, bary)) == pytest.approx(1.0, abs=1e-15)

    def test_length_checked(self):
        sp = build_mixed_space(build_interval_mesh(0, 1, 3), RT0)
        with pytest.raises(ValueError):
            ScalarField(sp, np.ones(4))
