"""Tests for the evaluation metrics and their CSV plumbing."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cmaxreg.events import CameraGeometry, EventWindow
from cmaxreg.metrics import (
    GroundTruthFlow,
    MetricsReport,
    aee_npe,
    fwl,
    read_flow_text,
    rms_angular_velocity,
    time_to_contact,
    write_flow_text,
)
from cmaxreg.warps import FlowField, WarpModel

GEOM = CameraGeometry(32, 24, 25.6, 25.6, 16.0, 12.0)


def flat_flow(width, height, u, v, valid=True):
    vec = np.zeros((height, width, 2))
    vec[:, :, 0] = u
    vec[:, :, 1] = v
    mask = np.full((height, width), valid, dtype=bool)
    return GroundTruthFlow(width=width, height=height, vectors=vec, valid=mask)


class TestGroundTruthFlow:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            GroundTruthFlow(width=3, height=2, vectors=np.zeros((3, 2, 2)), valid=np.ones((2, 3), bool))
        with pytest.raises(ValueError):
            GroundTruthFlow(width=3, height=2, vectors=np.zeros((2, 3, 2)), valid=np.ones((3, 2), bool))

    def test_text_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        flow = GroundTruthFlow(
            width=4,
            height=3,
            vectors=rng.normal(size=(3, 4, 2)),
            valid=rng.random((3, 4)) > 0.3,
        )
        path = tmp_path / "flow.txt"
        write_flow_text(path, flow)
        back = read_flow_text(path)
        assert (back.width, back.height) == (4, 3)
        assert_allclose(back.vectors, flow.vectors, rtol=1e-8)
        assert np.array_equal(back.valid, flow.valid)

    def test_read_rejects_bad_header_and_row_count(self, tmp_path):
        p = tmp_path / "bad_header.txt"
        p.write_text("4\n")
        with pytest.raises(ValueError):
            read_flow_text(p)
        q = tmp_path / "bad_rows.txt"
        q.write_text("2 1\n0 0 1\n")  # header promises 2 rows, file has 1
        with pytest.raises(ValueError):
            read_flow_text(q)


class TestAeeNpe:
    def hand_case(self):
        # Per-pixel endpoint errors 0, 4, 11, 21 by construction.
        gt = flat_flow(2, 2, 0.0, 0.0)
        pred_vec = np.zeros((2, 2, 2))
        pred_vec[0, 1] = (4.0, 0.0)
        pred_vec[1, 0] = (0.0, 11.0)
        pred_vec[1, 1] = (21.0, 0.0)
        pred = FlowField(width=2, height=2, vectors=pred_vec)
        return pred, gt

    def test_hand_values(self):
        pred, gt = self.hand_case()
        out = aee_npe(pred, gt)
        assert out["aee"] == pytest.approx(9.0, abs=1e-12)
        assert out["npe3"] == 75.0
        assert out["npe10"] == 50.0
        assert out["npe20"] == 25.0
        assert out["n_valid"] == 4

    def test_valid_mask_restricts(self):
        pred, gt = self.hand_case()
        gt.valid[1, 1] = False  # drop the 21-pixel error
        out = aee_npe(pred, gt)
        assert out["aee"] == pytest.approx(5.0, abs=1e-12)
        assert out["npe20"] == 0.0
        assert out["n_valid"] == 3

    def test_threshold_is_strict(self):
        gt = flat_flow(1, 1, 0.0, 0.0)
        pred = FlowField(width=1, height=1, vectors=np.full((1, 1, 2), (3.0, 0.0)))
        assert aee_npe(pred, gt)["npe3"] == 0.0

    def test_dimension_mismatch(self):
        pred = FlowField(width=3, height=2, vectors=np.zeros((2, 3, 2)))
        with pytest.raises(ValueError):
            aee_npe(pred, flat_flow(2, 2, 0.0, 0.0))

    def test_no_valid_pixels(self):
        pred = FlowField(width=2, height=2, vectors=np.zeros((2, 2, 2)))
        with pytest.raises(ValueError):
            aee_npe(pred, flat_flow(2, 2, 0.0, 0.0, valid=False))


class TestFwl:
    def drifting_window(self):
        # A single point drifting 10 px in x over the window.
        t = np.linspace(0.0, 1.0, 11)
        return EventWindow(t=t, x=16.0 - 10.0 + 10.0 * t, y=np.full(11, 12.0), p=np.ones(11, int))

    def test_identity_is_exactly_one(self):
        window = self.drifting_window()
        assert fwl(window, WarpModel.translation2d(0.0, 0.0), GEOM) == 1.0

    def test_true_motion_sharpens(self):
        window = self.drifting_window()
        value = fwl(window, WarpModel.translation2d(10.0, 0.0), GEOM)
        assert value > 1.5

    def test_ignores_polarity(self):
        window = self.drifting_window()
        flipped = EventWindow(t=window.t, x=window.x, y=window.y, p=-window.p)
        model = WarpModel.translation2d(10.0, 0.0)
        assert fwl(window, model, GEOM) == fwl(flipped, model, GEOM)

    def test_degenerate_window_raises(self):
        off = EventWindow(t=[0.0, 1.0], x=[-90.0, -91.0], y=[-90.0, -91.0], p=[1, 1])
        with pytest.raises(ValueError):
            fwl(off, WarpModel.translation2d(0.0, 0.0), GEOM)


class TestRmsAngularVelocity:
    zeros_ref = [(0.0, np.zeros(3)), (2.0, np.zeros(3))]

    def test_three_four_five(self):
        estimates = [(0.5, np.array([3.0, 4.0, 0.0])), (1.5, np.array([0.0, 0.0, 5.0]))]
        rms, skipped = rms_angular_velocity(estimates, self.zeros_ref)
        assert rms == 5.0
        assert skipped == 0

    def test_linear_interpolation_of_reference(self):
        ref = [(0.0, np.zeros(3)), (1.0, np.array([2.0, 0.0, 0.0]))]
        rms, skipped = rms_angular_velocity([(0.5, np.array([1.0, 0.0, 0.0]))], ref)
        assert rms == 0.0
        assert skipped == 0

    def test_skips_estimates_outside_span(self):
        estimates = [(-0.1, np.ones(3)), (0.5, np.zeros(3)), (2.5, np.ones(3))]
        rms, skipped = rms_angular_velocity(estimates, self.zeros_ref)
        assert rms == 0.0
        assert skipped == 2

    def test_error_cases(self):
        with pytest.raises(ValueError):
            rms_angular_velocity([], self.zeros_ref)
        with pytest.raises(ValueError):
            rms_angular_velocity([(0.5, np.zeros(3))], [(0.0, np.zeros(3))])
        bad_ref = [(0.0, np.zeros(3)), (0.0, np.zeros(3))]
        with pytest.raises(ValueError):
            rms_angular_velocity([(0.0, np.zeros(3))], bad_ref)
        with pytest.raises(ValueError):
            rms_angular_velocity([(5.0, np.zeros(3))], self.zeros_ref)


class TestTimeToContact:
    def test_arithmetic(self):
        assert time_to_contact(0.5, 1.0) == 2.0
        assert time_to_contact(0.2, 0.1) == pytest.approx(0.5, rel=1e-15)

    def test_rejects_non_approaching(self):
        for hz in (0.0, -0.3):
            with pytest.raises(ValueError):
                time_to_contact(hz, 1.0)

    def test_rejects_bad_duration(self):
        with pytest.raises(ValueError):
            time_to_contact(0.5, 0.0)


class TestMetricsReport:
    def test_header(self):
        assert MetricsReport.csv_header() == "aee,npe3,npe10,npe20,fwl,rms,ttc"

    def test_blank_for_missing(self):
        assert MetricsReport(fwl=1.25).to_csv_row() == ",,,,1.25,,"

    def test_full_row_formatting(self):
        row = MetricsReport(
            aee=1.0 / 3.0, npe3=75.0, npe10=50.0, npe20=25.0, fwl=1.0, rms=5.0, ttc=0.5
        ).to_csv_row()
        assert row == "0.333333333,75,50,25,1,5,0.5"
