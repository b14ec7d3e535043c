import numpy as np
import pytest

from lubricav.characteristics import TransportData, advected_source, foot_point
from lubricav.fem import ElementFamily, ScalarField, build_mixed_space
from lubricav.laws import ConstantSpeed, ConstantThickness, OscillatingThickness, SinusoidalThickness
from lubricav.mesh import build_interval_mesh, build_structured_triangular_mesh


def rt0_space(n=10, lo=0.0, hi=1.0):
    return build_mixed_space(build_interval_mesh(lo, hi, n), ElementFamily.RT0_P0)


class TestFootPoint:
    def test_scalar(self):
        assert foot_point(0.5, 0.0, 0.1, ConstantSpeed(2.0)) == pytest.approx(0.4)

    def test_only_first_coordinate_moves(self):
        foot = foot_point(np.array([0.5, 0.3]), 0.0, 0.2, ConstantSpeed(1.0))
        np.testing.assert_allclose(foot, [0.4, 0.3])

    def test_batch_shape(self):
        pts = np.random.default_rng(0).uniform(size=(7, 2))
        foot = foot_point(pts, 1.0, 1e-3, ConstantSpeed(4.0))
        assert foot.shape == (7, 2)
        np.testing.assert_allclose(foot[:, 0], pts[:, 0] - 2e-3)
        np.testing.assert_array_equal(foot[:, 1], pts[:, 1])

    def test_zero_speed_is_identity(self):
        pts = np.linspace(0, 1, 5).reshape(-1, 1)
        np.testing.assert_array_equal(foot_point(pts, 0.0, 0.3, ConstantSpeed(0.0)), pts)


class TestTransportData:
    def test_rejects_nonpositive_step(self):
        sp = rt0_space()
        with pytest.raises(ValueError):
            TransportData(ConstantSpeed(0), 0.0, ScalarField(sp, np.ones(sp.n_p)), ConstantThickness(1.0))

    def test_rejects_bad_inflow(self):
        sp = rt0_space()
        with pytest.raises(ValueError):
            TransportData(ConstantSpeed(0), 0.1, ScalarField(sp, np.ones(sp.n_p)), ConstantThickness(1.0), theta_in=1.2)


class TestAdvectedSource:
    def test_full_film_without_motion_is_zero(self):
        sp = rt0_space()
        data = TransportData(ConstantSpeed(0.0), 1e-3, ScalarField(sp, np.ones(sp.n_p)), SinusoidalThickness(1.0, 0.3, 1.0))
        np.testing.assert_array_equal(advected_source(sp, data, 0.5), 0.0)

    def test_uniform_thickness_with_motion_is_zero(self):
        sp = rt0_space()
        data = TransportData(ConstantSpeed(3.0), 1e-2, ScalarField(sp, np.ones(sp.n_p)), ConstantThickness(2.0))
        np.testing.assert_array_equal(advected_source(sp, data, 0.5), 0.0)

    def test_wedge_term_with_motion(self):
        # an upstream-thicker film leaves h(x) - h(foot) behind even when full
        sp = rt0_space(20)
        law = SinusoidalThickness(1.0, 0.3, 1.0)
        data = TransportData(ConstantSpeed(1.0), 1e-3, ScalarField(sp, np.ones(sp.n_p)), law)
        x = sp.pressure_points
        expected = law(x) - law(x - 5e-4)
        np.testing.assert_allclose(advected_source(sp, data, 0.1), expected, atol=1e-15)

    def test_squeeze_difference(self):
        sp = rt0_space()
        law = OscillatingThickness(0.375, 0.125, 2.0)
        data = TransportData(ConstantSpeed(0.0), 0.01, ScalarField(sp, np.ones(sp.n_p)), law)
        expected = law(np.zeros((1, 1)), 0.2)[0] - law(np.zeros((1, 1)), 0.19)[0]
        np.testing.assert_allclose(advected_source(sp, data, 0.2), expected, rtol=1e-14)

    def test_cavitated_old_state(self):
        sp = rt0_space(4)
        theta = np.array([1.0, 0.5, 0.25, 1.0])
        data = TransportData(ConstantSpeed(0.0), 0.1, ScalarField(sp, theta), ConstantThickness(2.0))
        np.testing.assert_allclose(advected_source(sp, data, 0.0), 2.0 * (1 - theta))

    def test_p0_lookup_shifts_one_cell(self):
        # a drift of exactly one cell width moves the saturation pattern by one cell
        sp = rt0_space(5)
        theta = np.array([0.2, 0.4, 0.6, 0.8, 1.0])
        data = TransportData(ConstantSpeed(2.0), 0.2, ScalarField(sp, theta), ConstantThickness(1.0), theta_in=0.0)
        got = advected_source(sp, data, 0.0)
        np.testing.assert_allclose(got, 1.0 - np.array([0.0, 0.2, 0.4, 0.6, 0.8]), atol=1e-14)

    def test_outside_feet_see_inflow(self):
        sp = rt0_space(4)
        data = TransportData(ConstantSpeed(1.0), 4.0, ScalarField(sp, np.ones(4)), ConstantThickness(1.5), theta_in=0.6)
        np.testing.assert_allclose(advected_source(sp, data, 0.0), 1.5 * 0.4)

    def test_stored_thickness_field(self):
        sp = rt0_space(6)
        law = SinusoidalThickness(1.0, 0.3, 1.0)
        h_old = ScalarField(sp, law(sp.pressure_points))
        th = ScalarField(sp, np.ones(sp.n_p))
        stored = advected_source(sp, TransportData(ConstantSpeed(0.0), 0.1, th, law, thickness_old=h_old), 0.0)
        np.testing.assert_allclose(stored, 0.0, atol=1e-15)

    def test_two_dimensional(self):
        m = build_structured_triangular_mesh((0, 1, 0, 1), 4, 4)
        sp = build_mixed_space(m, ElementFamily.RT0_P0)
        theta = np.where(sp.pressure_points[:, 0] < 0.5, 0.5, 1.0)
        data = TransportData(ConstantSpeed(0.0), 0.1, ScalarField(sp, theta), ConstantThickness(1.0))
        np.testing.assert_allclose(advected_source(sp, data, 0.0), 1.0 - theta)
