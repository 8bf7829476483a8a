"""Tests for the collapse penalties.

The zoom closed form is checked against direct numerical quadrature of the
area deformation rate; the dead-zone map aggregation is pinned with rotation
axes that sit just inside / just outside the dead zone on a known sensor; the
event-based baselines are checked on hand-built scenes whose per-pixel
averages are exact in floating point.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from cmaxreg.events import CameraGeometry, EventWindow
from cmaxreg.regularizers import (
    RegKind,
    RegularizerOptions,
    deformation_map_3dof,
    rate_map,
    reg_event_based,
    reg_geometric,
    reg_translation_2dof,
    reg_zoom_1dof,
)
from cmaxreg.warps import WarpModel, rate_of_area_change

GEOM = CameraGeometry(240, 180, 200.0, 200.0, 120.0, 90.0)


def quad_penalty(model, geometry, point) -> float:
    """Quadrature oracle: integrate the area deformation rate over the window."""

    def rate(t):
        pts = np.asarray([point], dtype=float)
        return float(np.atleast_1d(rate_of_area_change(model, geometry, pts, float(t)))[0])

    value, err = quad(rate, 0.0, 1.0, limit=500, epsabs=1e-12, epsrel=1e-12)
    assert err < 1e-10
    return value


class TestOptions:
    def test_defaults(self):
        opt = RegularizerOptions()
        assert opt.tau == 0.2
        assert opt.alpha == 1.0
        assert opt.trim == 0.01
        assert opt.stride == 1
        assert opt.n_time_samples == 16

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"tau": -0.1},
            {"alpha": -1.0},
            {"trim": 0.5},
            {"trim": -0.01},
            {"stride": 0},
            {"n_time_samples": 1},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            RegularizerOptions(**kwargs)


class TestZoomPenalty:
    @pytest.mark.parametrize("hz", [-2.0, -0.5, 0.3, 0.7, 0.95])
    def test_matches_quadrature(self, hz):
        model = WarpModel.zoom1dof(hz)
        expected = quad_penalty(model, GEOM, (37.0, 91.0))
        assert reg_zoom_1dof(hz) == pytest.approx(expected, abs=1e-9)

    def test_frozen_value_near_collapse(self):
        # -2 ln(0.01), the penalty one percent short of full collapse.
        assert reg_zoom_1dof(0.99) == pytest.approx(9.210340371976184, abs=1e-12)

    def test_zero_at_rest(self):
        assert reg_zoom_1dof(0.0) == 0.0

    def test_negative_for_expansion(self):
        assert reg_zoom_1dof(-2.0) == pytest.approx(-2.0 * np.log(3.0), abs=1e-12)
        assert reg_zoom_1dof(-2.0) < 0.0

    def test_monotone_toward_collapse(self):
        values = [reg_zoom_1dof(h) for h in (0.1, 0.5, 0.9, 0.99)]
        assert values == sorted(values)
        assert values[-1] > 9.0

    def test_rejects_singular_rate(self):
        with pytest.raises(ValueError):
            reg_zoom_1dof(1.0)


class TestTranslationPenalty:
    def test_identically_zero(self):
        assert reg_translation_2dof((0.0, 0.0)) == 0.0
        assert reg_translation_2dof((123.4, -56.7)) == 0.0

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            reg_translation_2dof((1.0, 2.0, 3.0))

    def test_dispatch_matches(self):
        model = WarpModel.translation2d(40.0, -25.0)
        assert reg_geometric(model, GEOM) == 0.0


class TestSimilarityPenalty:
    def test_contraction_above_margin(self):
        model = WarpModel.similarity4dof(3.0, -2.0, 0.1, 0.9)
        raw = reg_zoom_1dof(0.9)
        assert raw > 1.0
        assert reg_geometric(model, GEOM) == pytest.approx(raw - 1.0, abs=1e-12)

    def test_mild_contraction_inside_margin(self):
        model = WarpModel.similarity4dof(0.0, 0.0, 0.0, 0.3)
        assert reg_zoom_1dof(0.3) < 1.0
        assert reg_geometric(model, GEOM) == 0.0

    def test_expansion_is_free(self):
        model = WarpModel.similarity4dof(0.0, 0.0, 0.0, -0.5)
        assert reg_geometric(model, GEOM) == 0.0

    def test_zero_margin_recovers_raw_penalty(self):
        model = WarpModel.similarity4dof(0.0, 0.0, 0.0, 0.9)
        opt = RegularizerOptions(alpha=0.0)
        assert reg_geometric(model, GEOM, opt) == pytest.approx(
            reg_zoom_1dof(0.9), abs=1e-12
        )


class TestRateMap:
    def test_shape_follows_stride(self):
        model = WarpModel.rotation3dof(0.1, 0.0, 0.0)
        full = rate_map(model, GEOM)
        assert full.values.shape == (180, 240)
        strided = rate_map(model, GEOM, RegularizerOptions(stride=4))
        assert strided.values.shape == (45, 60)
        ragged = rate_map(model, GEOM, RegularizerOptions(stride=7))
        assert ragged.values.shape == (26, 35)  # ceil(180/7), ceil(240/7)
        assert ragged.width == 240 and ragged.height == 180 and ragged.stride == 7

    def test_z_rotation_preserves_area(self):
        dmap = deformation_map_3dof((0.0, 0.0, 0.25), GEOM)
        assert np.max(np.abs(dmap.values)) <= 1e-12

    def test_zoom_map_is_constant_and_near_closed_form(self):
        model = WarpModel.zoom1dof(0.5)
        dmap = rate_map(model, GEOM, RegularizerOptions(stride=10))
        assert np.ptp(dmap.values) == 0.0
        # 15-interval trapezoid of a smooth rate: expect ~1e-4 relative error.
        assert dmap.values[0, 0] == pytest.approx(reg_zoom_1dof(0.5), rel=2e-3)

    def test_time_sampling_converged(self):
        model = WarpModel.rotation3dof(0.2, 0.0, 0.0)
        coarse = rate_map(model, GEOM, RegularizerOptions(stride=6, n_time_samples=16))
        fine = rate_map(model, GEOM, RegularizerOptions(stride=6, n_time_samples=1024))
        scale = np.max(np.abs(fine.values))
        assert np.max(np.abs(coarse.values - fine.values)) <= 1e-4 * scale

    def test_identity_affine_map_is_zero(self):
        model = WarpModel.affine6dof(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        dmap = rate_map(model, GEOM, RegularizerOptions(stride=8))
        assert np.max(np.abs(dmap.values)) <= 1e-15


class TestDeadZone:
    @pytest.mark.parametrize(
        "omega",
        [
            (0.1, 0.0, 0.0),
            (0.0, 0.1, 0.0),
            (0.1 / np.sqrt(3), 0.1 / np.sqrt(3), 0.1 / np.sqrt(3)),
        ],
    )
    def test_small_rotations_inside_dead_zone(self, omega):
        # On this sensor the deformation rate of a 0.1 rad rotation about
        # these axes stays below the default dead-zone half-width everywhere.
        model = WarpModel.rotation3dof(*omega)
        assert reg_geometric(model, GEOM) == 0.0

    def test_in_plane_diagonal_axis_exceeds_dead_zone(self):
        # Same speed, but the x- and y-tilts add up at the sensor corners.
        w = 0.1 / np.sqrt(2)
        model = WarpModel.rotation3dof(w, w, 0.0)
        assert reg_geometric(model, GEOM) > 0.0

    def test_zero_dead_zone_charges_small_rotation(self):
        model = WarpModel.rotation3dof(0.1, 0.0, 0.0)
        opt = RegularizerOptions(tau=0.0)
        value = reg_geometric(model, GEOM, opt)
        dmap = rate_map(model, GEOM, opt)
        assert value == pytest.approx(np.mean(np.abs(dmap.values)), abs=1e-15)
        assert value > 0.0

    def test_identity_homography_is_free(self):
        model = WarpModel.homography8dof(np.zeros(8))
        assert reg_geometric(model, GEOM) == 0.0


def blob_window(points):
    """Window with one event per (t, x, y) triple, sorted by time."""
    points = sorted(points)
    t = [p[0] for p in points]
    x = [p[1] for p in points]
    y = [p[2] for p in points]
    return EventWindow(t=t, x=x, y=y, p=[1] * len(points))


class TestEventBaselines:
    # 120x90 sensor; the zoom warp below contracts centered pixels by half
    # at the end of the window.
    geom = CameraGeometry(120, 90, 100.0, 100.0, 60.0, 45.0)
    zoom = WarpModel.zoom1dof(0.5)

    def test_two_blob_deformation_is_exact(self):
        # One event at the window start (area ratio exactly 1) and one at the
        # end (exactly 0.25), warped to disjoint interior footprints of 49
        # pixels each: every arithmetic step is exact, mean = 0.625.
        window = blob_window([(0.0, 20.0, 45.0), (1.0, 100.0, 45.0)])
        value = reg_event_based(window, self.zoom, self.geom, RegKind.DEFORMATION)
        assert value == 0.625

    def test_trimming_drops_tail_pixels(self):
        # Left blob hugs the image border so its footprint is clipped to
        # 5x7 = 35 pixels; the interior blob keeps 49.  Untrimmed mean is
        # (35*1 + 49*0.25)/84; trimming 25% from each tail leaves 28 pixels
        # of 0.25 and 14 of 1.0.
        window = blob_window([(0.0, 1.0, 45.0), (1.0, 100.0, 45.0)])
        untrimmed = reg_event_based(
            window, self.zoom, self.geom, RegKind.DEFORMATION, RegularizerOptions(trim=0.0)
        )
        assert untrimmed == 0.5625
        trimmed = reg_event_based(
            window, self.zoom, self.geom, RegKind.DEFORMATION, RegularizerOptions(trim=0.25)
        )
        assert trimmed == 0.5

    def interior_window(self):
        rng = np.random.default_rng(3)
        n = 400
        t = np.sort(rng.uniform(0.0, 1.0, n))
        t[0], t[-1] = 0.0, 1.0
        x = rng.integers(30, 90, n).astype(float)
        y = rng.integers(25, 65, n).astype(float)
        return EventWindow(t=t, x=x, y=y, p=np.ones(n, dtype=int))

    def test_divergence_of_linear_flow(self):
        # The forward flow of this zoom is h * (x - c): divergence 2h
        # everywhere, and finite differences are exact on a linear field.
        window = self.interior_window()
        value = reg_event_based(window, self.zoom, self.geom, RegKind.DIVERGENCE)
        assert value == pytest.approx(1.0, rel=1e-6)

    def test_combined_kind_is_the_sum(self):
        window = self.interior_window()
        div = reg_event_based(window, self.zoom, self.geom, RegKind.DIVERGENCE)
        def_ = reg_event_based(window, self.zoom, self.geom, RegKind.DEFORMATION)
        both = reg_event_based(window, self.zoom, self.geom, RegKind.DIV_PLUS_DEF)
        assert both == div + def_

    def test_deformation_between_extremes(self):
        # Area ratios run from 1 (earliest events) down to 0.25 (latest).
        window = self.interior_window()
        value = reg_event_based(window, self.zoom, self.geom, RegKind.DEFORMATION)
        assert 0.25 < value < 1.0

    def test_empty_support_warns_and_is_free(self):
        window = EventWindow(
            t=[0.0, 1.0], x=[-500.0, -499.0], y=[-500.0, -499.0], p=[1, 1]
        )
        model = WarpModel.translation2d(0.0, 0.0)
        with pytest.warns(UserWarning):
            value = reg_event_based(window, model, self.geom, RegKind.DIVERGENCE)
        assert value == 0.0

    @pytest.mark.parametrize("kind", [RegKind.GEOMETRIC, RegKind.NONE])
    def test_rejects_non_event_kinds(self, kind):
        window = blob_window([(0.0, 20.0, 45.0), (1.0, 100.0, 45.0)])
        with pytest.raises(ValueError):
            reg_event_based(window, self.zoom, self.geom, kind)
