"""Evaluation metrics: endpoint error, sharpness gain, angular RMS, contact time."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import CameraGeometry, EventWindow
from .iwe import Objective, build_iwe, objective_value
from .warps import FlowField, WarpModel


@dataclass
class GroundTruthFlow:
    """Reference per-pixel displacement with a validity mask."""

    width: int
    height: int
    vectors: np.ndarray  # (height, width, 2)
    valid: np.ndarray  # (height, width) bool

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.vectors.shape != (self.height, self.width, 2):
            raise ValueError("flow vectors must have shape (height, width, 2)")
        if self.valid.shape != (self.height, self.width):
            raise ValueError("valid mask must have shape (height, width)")


def write_flow_text(path, flow: GroundTruthFlow) -> None:
    """Write `W H` then one `u v valid` line per pixel, row-major."""
    with open(path, "w") as fh:
        fh.write(f"{flow.width} {flow.height}\n")
        for y in range(flow.height):
            for x in range(flow.width):
                u, v = flow.vectors[y, x]
                fh.write(f"{u:.9g} {v:.9g} {int(flow.valid[y, x])}\n")


def read_flow_text(path) -> GroundTruthFlow:
    with open(path, "r") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: flow header must be `W H`")
        w, h = int(header[0]), int(header[1])
        data = np.loadtxt(fh)
    if data.shape != (w * h, 3):
        raise ValueError(f"{path}: expected {w * h} flow rows, got {data.shape[0]}")
    return GroundTruthFlow(
        width=w,
        height=h,
        vectors=data[:, :2].reshape(h, w, 2),
        valid=data[:, 2].reshape(h, w) > 0,
    )


def aee_npe(pred: FlowField, gt: GroundTruthFlow) -> dict:
    """Average endpoint error and outlier percentages over valid pixels.

    npe<N> is the percentage of valid pixels whose endpoint error exceeds
    N pixels.
    """
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise ValueError("flow fields must share dimensions")
    if not np.any(gt.valid):
        raise ValueError("ground truth has no valid pixels")
    err = np.linalg.norm(pred.vectors - gt.vectors, axis=2)[gt.valid]
    return {
        "aee": float(err.mean()),
        "npe3": float(100.0 * np.mean(err > 3.0)),
        "npe10": float(100.0 * np.mean(err > 10.0)),
        "npe20": float(100.0 * np.mean(err > 20.0)),
        "n_valid": int(err.size),
    }


def fwl(window: EventWindow, model: WarpModel, geometry: CameraGeometry) -> float:
    """Sharpness gain: Var(warped image) / Var(identity image).

    Uses the variance objective with unsigned event weights on both sides, so
    a warp that equals the identity scores exactly 1.
    """
    obj = Objective()
    num = objective_value(build_iwe(window, model, geometry, obj), obj)
    identity = WarpModel.translation2d(0.0, 0.0)
    den = objective_value(build_iwe(window, identity, geometry, obj), obj)
    if den == 0.0:
        raise ValueError("identity image has zero variance; window is degenerate")
    return num / den


def rms_angular_velocity(
    estimates: list[tuple[float, np.ndarray]],
    reference: list[tuple[float, np.ndarray]],
) -> tuple[float, int]:
    """RMS norm error between estimates and a linearly interpolated reference.

    estimates: (t_mid_seconds, omega rad/s) per window; reference: sampled
    (t_seconds, omega rad/s), sorted by time.  Estimates outside the
    reference span are skipped; the count of skipped windows is returned.
    """
    if not estimates:
        raise ValueError("no estimates given")
    if len(reference) < 2:
        raise ValueError("reference must contain at least two samples")
    t_ref = np.array([t for t, _ in reference])
    w_ref = np.array([np.asarray(w, float) for _, w in reference])
    if np.any(np.diff(t_ref) <= 0):
        raise ValueError("reference timestamps must be strictly increasing")
    errs = []
    skipped = 0
    for t_mid, w_hat in estimates:
        if t_mid < t_ref[0] or t_mid > t_ref[-1]:
            skipped += 1
            continue
        w_interp = np.array(
            [np.interp(t_mid, t_ref, w_ref[:, k]) for k in range(w_ref.shape[1])]
        )
        errs.append(np.sum((np.asarray(w_hat, float) - w_interp) ** 2))
    if not errs:
        raise ValueError("every estimate falls outside the reference span")
    return float(np.sqrt(np.mean(errs))), skipped


def time_to_contact(hz: float, duration: float) -> float:
    """Seconds until contact for a looming window: duration / zoom rate."""
    if duration <= 0:
        raise ValueError("window duration must be positive")
    if hz <= 0:
        raise ValueError("time to contact is undefined for non-approaching motion")
    return duration / hz


@dataclass
class MetricsReport:
    """One row of evaluation results; missing entries stay blank in CSV."""

    aee: float | None = None
    npe3: float | None = None
    npe10: float | None = None
    npe20: float | None = None
    fwl: float | None = None
    rms: float | None = None
    ttc: float | None = None

    COLUMNS = ("aee", "npe3", "npe10", "npe20", "fwl", "rms", "ttc")

    def to_csv_row(self) -> str:
        vals = []
        for name in self.COLUMNS:
            v = getattr(self, name)
            vals.append("" if v is None else f"{v:.9g}")
        return ",".join(vals)

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.COLUMNS)
