"""Deterministic synthetic event scenes with exact ground truth."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .events import CameraGeometry, EventWindow
from .metrics import GroundTruthFlow
from .warps import WarpModel, displacement_field, trajectory_point


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for one synthetic window.

    n_points scene features are placed uniformly on the sensor at t = 0;
    each emits events_per_point events at uniform times along its warp
    trajectory, jittered by noise_px.  Two noise-free anchor events at the
    window ends pin the normalized time span to exactly [0, 1].
    """

    model: WarpModel
    geometry: CameraGeometry
    n_points: int = 2000
    events_per_point: int = 15
    noise_px: float = 0.5
    seed: int = 0
    t_start: float = 0.0
    duration: float = 1.0

    def __post_init__(self):
        if self.n_points < 1 or self.events_per_point < 1:
            raise ValueError("scene needs at least one point and one event per point")
        if self.noise_px < 0:
            raise ValueError("noise must be non-negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")


def generate(spec: SceneSpec) -> tuple[EventWindow, GroundTruthFlow]:
    """Build the event window and its exact ground-truth displacement field."""
    geom = spec.geometry
    rng = np.random.default_rng(spec.seed)
    x0 = rng.uniform([0.0, 0.0], [geom.width, geom.height], size=(spec.n_points, 2))
    tn = rng.uniform(0.0, 1.0, size=spec.n_points * spec.events_per_point)
    pts = np.repeat(x0, spec.events_per_point, axis=0)
    pos = trajectory_point(spec.model, geom, pts, tn)
    if spec.noise_px > 0:
        pos = pos + rng.normal(0.0, spec.noise_px, size=pos.shape)
    # anchors at the exact window ends keep normalized time == drawn time
    center = np.array([geom.width / 2.0, geom.height / 2.0])
    anchors = trajectory_point(spec.model, geom, np.vstack([center, center]), np.array([0.0, 1.0]))
    keep = (
        (np.rint(pos[:, 0]) >= 0)
        & (np.rint(pos[:, 0]) <= geom.width - 1)
        & (np.rint(pos[:, 1]) >= 0)
        & (np.rint(pos[:, 1]) <= geom.height - 1)
    )
    anchors_ok = (
        (np.rint(anchors[:, 0]) >= 0)
        & (np.rint(anchors[:, 0]) <= geom.width - 1)
        & (np.rint(anchors[:, 1]) >= 0)
        & (np.rint(anchors[:, 1]) <= geom.height - 1)
    )
    if not np.all(anchors_ok):
        raise ValueError("warp throws the sensor center out of view; scene is degenerate")
    if not np.any(keep):
        raise ValueError("every generated event left the sensor; scene is degenerate")
    tn = np.concatenate([tn[keep], [0.0, 1.0]])
    pos = np.vstack([pos[keep], anchors])
    pol = np.where(np.arange(tn.size) % 2 == 0, 1, -1)
    order = np.argsort(tn, kind="stable")
    window = EventWindow(
        t=spec.t_start + tn[order] * spec.duration,
        x=pos[order, 0],
        y=pos[order, 1],
        p=pol[order],
    )
    disp = displacement_field(spec.model, geom)
    gt = GroundTruthFlow(
        width=geom.width,
        height=geom.height,
        vectors=disp.vectors,
        valid=np.ones((geom.height, geom.width), dtype=bool),
    )
    return window, gt


def velocity_scene(
    vz_over_z: float,
    duration: float,
    geometry: CameraGeometry,
    **kwargs,
) -> SceneSpec:
    """Scene for an approaching camera: constant axial velocity over depth.

    A plane at depth Z approached at speed v_z produces the radial flow
    v(x) = (v_z / Z) x, which is exactly the 1-DOF zoom trajectory with a
    per-window rate of (v_z / Z) * duration.  Time to contact is
    duration / rate = Z / v_z.
    """
    model = WarpModel.zoom1dof(vz_over_z * duration)
    return SceneSpec(model=model, geometry=geometry, duration=duration, **kwargs)


def generate_velocity_stream(
    vz_over_z: float,
    duration: float,
    n_windows: int,
    geometry: CameraGeometry,
    seed: int = 0,
    **kwargs,
) -> tuple[EventWindow, GroundTruthFlow]:
    """Concatenate n_windows independent looming windows into one stream.

    Each window restarts the approach (same rate, fresh scene points), so a
    per-window estimator should report the same time to contact on every
    slice.
    """
    if n_windows < 1:
        raise ValueError("need at least one window")
    base = velocity_scene(vz_over_z, duration, geometry, seed=seed, **kwargs)
    windows = []
    gt = None
    for k in range(n_windows):
        spec = replace(base, seed=seed + k, t_start=k * duration)
        win, gt = generate(spec)
        windows.append(win)
    return (
        EventWindow(
            t=np.concatenate([w.t for w in windows]),
            x=np.concatenate([w.x for w in windows]),
            y=np.concatenate([w.y for w in windows]),
            p=np.concatenate([w.p for w in windows]),
        ),
        gt,
    )
