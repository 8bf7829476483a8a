"""Accumulated images of warped events and sharpness scoring.

The splat oracle here recomputes a single event's footprint directly from the
separable Gaussian formula; the module must match digit for digit.
"""

import numpy as np
import pytest

from cmaxreg.events import CameraGeometry, EventWindow
from cmaxreg.iwe import (
    SIGMA,
    STENCIL_RADIUS,
    Iwe,
    Objective,
    ObjectiveKind,
    build_iwe,
    objective_value,
    splat,
)
from cmaxreg.warps import WarpModel

GEOM = CameraGeometry(32, 24, 25.6, 25.6, 16.0, 12.0)


def footprint_oracle(px, py, geometry):
    """Direct evaluation of one unit-weight Gaussian footprint."""
    img = np.zeros((geometry.height, geometry.width))
    cx, cy = int(round(px)), int(round(py))
    norm = 1.0 / np.sqrt(2 * np.pi)
    for oy in range(-STENCIL_RADIUS, STENCIL_RADIUS + 1):
        for ox in range(-STENCIL_RADIUS, STENCIL_RADIUS + 1):
            ix, iy = cx + ox, cy + oy
            if 0 <= ix < geometry.width and 0 <= iy < geometry.height:
                img[iy, ix] = (
                    norm * np.exp(-0.5 * (ix - px) ** 2 / SIGMA**2)
                    * norm * np.exp(-0.5 * (iy - py) ** 2 / SIGMA**2)
                )
    return img


class TestSplat:
    def test_single_event_matches_oracle(self):
        # agreement to within one rounding step (the oracle associates the
        # separable product in a different order)
        pos = np.array([[15.3, 11.7]])
        got = splat(pos, np.ones(1), GEOM)
        want = footprint_oracle(15.3, 11.7, GEOM)
        np.testing.assert_allclose(got, want, atol=1e-16)

    def test_center_event_mass_captures_almost_everything(self):
        # a 7x7 stencil at +-3 sigma holds > 99.9% of the unit Gaussian mass
        got = splat(np.array([[16.0, 12.0]]), np.ones(1), GEOM)
        assert 0.999 < got.sum() < 1.0

    def test_total_mass_additive_over_events(self):
        rng = np.random.default_rng(0)
        pos = rng.uniform([5, 5], [26, 18], size=(500, 2))
        single = sum(splat(pos[i : i + 1], np.ones(1), GEOM).sum() for i in range(500))
        together = splat(pos, np.ones(500), GEOM).sum()
        assert together == pytest.approx(single, abs=1e-9)

    def test_out_of_image_contributions_dropped(self):
        img = splat(np.array([[-10.0, -10.0]]), np.ones(1), GEOM)
        assert img.sum() == 0.0
        edge = splat(np.array([[0.0, 12.0]]), np.ones(1), GEOM)
        center = splat(np.array([[16.0, 12.0]]), np.ones(1), GEOM)
        assert 0.0 < edge.sum() < center.sum()

    def test_weights_scale_linearly(self):
        pos = np.array([[10.0, 10.0]])
        np.testing.assert_allclose(
            splat(pos, np.array([2.5]), GEOM), 2.5 * splat(pos, np.ones(1), GEOM)
        )

    def test_quantities_multiply_weights(self):
        pos = np.array([[10.0, 10.0], [20.0, 14.0]])
        w = np.array([1.0, 2.0])
        q = np.array([3.0, 0.5])
        np.testing.assert_allclose(
            splat(pos, w, GEOM, quantities=q), splat(pos, w * q, GEOM)
        )


class TestBuildIwe:
    def make_window(self):
        rng = np.random.default_rng(5)
        n = 400
        t = np.sort(rng.uniform(0, 1, n))
        t[0], t[-1] = 0.0, 1.0
        return EventWindow(
            t=t,
            x=rng.uniform(2, 29, n),
            y=rng.uniform(2, 21, n),
            p=np.where(np.arange(n) % 2 == 0, 1, -1),
        )

    def test_identity_warp_preserves_positions(self):
        w = self.make_window()
        iwe = build_iwe(w, WarpModel.translation2d(0.0, 0.0), GEOM)
        direct = splat(w.xy(), np.ones(w.n), GEOM)
        np.testing.assert_array_equal(iwe.values, direct)
        assert not iwe.empty
        assert iwe.total_mass == pytest.approx(iwe.values.sum())

    def test_polarity_weighting(self):
        w = self.make_window()
        signed = build_iwe(w, WarpModel.translation2d(0.0, 0.0), GEOM,
                           Objective(use_polarity=True))
        direct = splat(w.xy(), w.p.astype(float), GEOM)
        np.testing.assert_array_equal(signed.values, direct)

    def test_empty_flag_when_all_mass_lands_outside(self):
        # events whose footprints fall entirely off the sensor leave an
        # all-zero image; the flag guards downstream divisions
        w = EventWindow(
            t=np.array([0.0, 1.0]),
            x=np.array([-50.0, -50.0]),
            y=np.array([-50.0, -50.0]),
            p=np.array([1, 1]),
        )
        iwe = build_iwe(w, WarpModel.translation2d(0.0, 0.0), GEOM)
        assert iwe.empty
        assert iwe.total_mass == 0.0

    def test_deterministic(self):
        w = self.make_window()
        a = build_iwe(w, WarpModel.zoom1dof(0.3), GEOM)
        b = build_iwe(w, WarpModel.zoom1dof(0.3), GEOM)
        np.testing.assert_array_equal(a.values, b.values)


class TestObjectiveValue:
    def test_variance_equals_numpy_var(self):
        vals = np.arange(12.0).reshape(3, 4)
        iwe = Iwe(values=vals, total_mass=float(vals.sum()), empty=False)
        assert objective_value(iwe, Objective()) == np.var(vals)

    def test_gradient_magnitude_hand_value(self):
        # a pure x-ramp a*x has gradient (a, 0) everywhere under np.gradient's
        # central/one-sided scheme, so the mean squared magnitude is a^2
        vals = 3.0 * np.tile(np.arange(5.0), (4, 1))
        iwe = Iwe(values=vals, total_mass=float(vals.sum()), empty=False)
        got = objective_value(iwe, Objective(kind=ObjectiveKind.GRADIENT_MAGNITUDE))
        assert got == pytest.approx(9.0, rel=1e-12)

    def test_flat_image_scores_zero_under_both(self):
        vals = np.full((6, 8), 2.0)
        iwe = Iwe(values=vals, total_mass=float(vals.sum()), empty=False)
        assert objective_value(iwe, Objective()) == 0.0
        assert objective_value(
            iwe, Objective(kind=ObjectiveKind.GRADIENT_MAGNITUDE)
        ) == 0.0

    def test_variance_homogeneity(self):
        # doubling every event weight quadruples the variance
        rng = np.random.default_rng(1)
        vals = rng.uniform(0, 1, (10, 10))
        a = Iwe(values=vals, total_mass=1.0, empty=False)
        b = Iwe(values=2 * vals, total_mass=2.0, empty=False)
        assert objective_value(b, Objective()) == pytest.approx(
            4 * objective_value(a, Objective()), rel=1e-12
        )

    def test_sharper_image_scores_higher(self):
        # concentrating the same mass in fewer pixels raises the variance
        flat = np.full((8, 8), 1.0)
        sharp = np.zeros((8, 8))
        sharp[0, 0] = 64.0
        v_flat = objective_value(Iwe(flat, 64.0, False), Objective())
        v_sharp = objective_value(Iwe(sharp, 64.0, False), Objective())
        assert v_sharp > v_flat
