"""Collapse penalties for warp estimation.

The geometric regularizer integrates the rate of area deformation along the
motion trajectories, penalizing warps that funnel events into a shrinking
region.  It never touches the events: cost depends on the warp parameters and
the sensor geometry alone.  The event-based baselines (flow divergence and
per-event area deformation) are also provided; they pay a per-event price.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .events import CameraGeometry, EventWindow, normalize_time
from .iwe import splat
from .warps import (
    SINGULAR_EPS,
    WarpKind,
    WarpModel,
    flow_field,
    rate_of_area_change,
    trajectory_point,
    warp_event,
)


class RegKind(str, Enum):
    NONE = "none"
    GEOMETRIC = "geometric"
    DIVERGENCE = "divergence"
    DEFORMATION = "deformation"
    DIV_PLUS_DEF = "divdef"


@dataclass(frozen=True)
class RegularizerOptions:
    """Tunables shared by the regularizer family.

    tau: dead-zone half-width applied to aggregated deformation maps.
    alpha: margin subtracted from the similarity scale penalty.
    trim: fraction trimmed from each tail of the event-baseline averages.
    stride: pixel stride when sampling deformation maps.
    n_time_samples: trapezoid nodes for the along-trajectory integral.
    """

    tau: float = 0.2
    alpha: float = 1.0
    trim: float = 0.01
    stride: int = 1
    n_time_samples: int = 16

    def __post_init__(self):
        if self.tau < 0 or self.alpha < 0:
            raise ValueError("tau and alpha must be non-negative")
        if not 0 <= self.trim < 0.5:
            raise ValueError("trim fraction must lie in [0, 0.5)")
        if self.stride < 1 or self.n_time_samples < 2:
            raise ValueError("stride must be >= 1 and n_time_samples >= 2")


def reg_zoom_1dof(hz: float) -> float:
    """Integrated area deformation rate of the 1-DOF zoom warp: -2 ln|1 - hz|.

    Positive and growing without bound as hz -> 1 (event collapse), negative
    for expanding warps, zero at rest.
    """
    if abs(1.0 - hz) < SINGULAR_EPS:
        raise ValueError("zoom rate of 1 collapses the window; penalty undefined")
    return -2.0 * float(np.log(abs(1.0 - hz)))


def reg_translation_2dof(theta) -> float:
    """Translations never deform area; the penalty is identically zero."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != 2:
        raise ValueError("translation parameter must have 2 components")
    return 0.0


@dataclass
class DeformationMap:
    """Per-pixel integral of the area deformation rate along trajectories."""

    width: int
    height: int
    stride: int
    values: np.ndarray  # shape (ceil(height/stride), ceil(width/stride))


_POSITION_DEPENDENT = (WarpKind.ROTATION_3DOF, WarpKind.HOMOGRAPHY_8DOF)


def rate_map(
    model: WarpModel,
    geometry: CameraGeometry,
    options: RegularizerOptions = RegularizerOptions(),
) -> DeformationMap:
    """Integrate the deformation rate over [0, 1] for each sampled pixel.

    Composite trapezoid over n_time_samples nodes; trajectories are seeded at
    pixel centers.  Families whose rate is position-independent produce a
    constant map.
    """
    grid = geometry.pixel_centers(options.stride)
    ts = np.linspace(0.0, 1.0, options.n_time_samples)
    rates = np.empty((ts.size, grid.shape[0]))
    for j, t in enumerate(ts):
        if model.kind in _POSITION_DEPENDENT:
            pts = trajectory_point(model, geometry, grid, float(t))
        else:
            pts = grid
        rates[j] = np.atleast_1d(rate_of_area_change(model, geometry, pts, float(t)))
    values = np.trapezoid(rates, ts, axis=0)
    h = int(np.ceil(geometry.height / options.stride))
    w = int(np.ceil(geometry.width / options.stride))
    return DeformationMap(
        width=geometry.width,
        height=geometry.height,
        stride=options.stride,
        values=values.reshape(h, w),
    )


def deformation_map_3dof(
    omega,
    geometry: CameraGeometry,
    options: RegularizerOptions = RegularizerOptions(),
) -> DeformationMap:
    """Deformation map of a rotational warp given its angular velocity."""
    omega = np.asarray(omega, dtype=float)
    model = WarpModel.rotation3dof(*omega)
    return rate_map(model, geometry, options)


def _dead_zone_mean(values: np.ndarray, tau: float) -> float:
    return float(np.mean(np.maximum(0.0, np.abs(values) - tau)))


def reg_geometric(
    model: WarpModel,
    geometry: CameraGeometry,
    options: RegularizerOptions = RegularizerOptions(),
) -> float:
    """Geometric collapse penalty of a warp, dispatched per family.

    Zoom uses the closed form; similarity clips its scale penalty by the
    margin alpha; translation is free.  The remaining families aggregate the
    deformation map with a dead zone of half-width tau, so mild deformation
    (|value| <= tau) costs nothing.
    """
    kind = model.kind
    if kind is WarpKind.TRANSLATION_2D:
        return 0.0
    if kind is WarpKind.ZOOM_1DOF:
        return reg_zoom_1dof(float(model.theta[0]))
    if kind is WarpKind.SIMILARITY_4DOF:
        raw = reg_zoom_1dof(float(model.theta[3]))
        return max(options.alpha, raw) - options.alpha
    if kind in (WarpKind.ROTATION_3DOF, WarpKind.AFFINE_6DOF, WarpKind.HOMOGRAPHY_8DOF):
        dmap = rate_map(model, geometry, options)
        return _dead_zone_mean(dmap.values, options.tau)
    raise ValueError(f"unknown warp kind {kind}")  # pragma: no cover


def _trimmed_mean(values: np.ndarray, trim: float) -> float:
    values = np.sort(np.asarray(values, dtype=float))
    k = int(values.size * trim)
    if values.size - 2 * k <= 0:
        return float(values.mean())
    return float(values[k : values.size - k].mean())


def _event_deformation(window, model, geometry, tn) -> np.ndarray:
    """|det| of the warp's spatial Jacobian at each event, 2-point stencil."""
    h = 0.5
    xy = window.xy()
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    jx = (warp_event(model, geometry, xy + ex, tn) - warp_event(model, geometry, xy - ex, tn)) / (
        2 * h
    )
    jy = (warp_event(model, geometry, xy + ey, tn) - warp_event(model, geometry, xy - ey, tn)) / (
        2 * h
    )
    return np.abs(jx[:, 0] * jy[:, 1] - jx[:, 1] * jy[:, 0])


def _event_divergence(window, model, geometry) -> np.ndarray:
    """Flow divergence sampled at each event's pixel."""
    flow = flow_field(model, geometry).vectors
    div = np.gradient(flow[:, :, 0], axis=1) + np.gradient(flow[:, :, 1], axis=0)
    ix = np.clip(np.rint(window.x).astype(int), 0, geometry.width - 1)
    iy = np.clip(np.rint(window.y).astype(int), 0, geometry.height - 1)
    return div[iy, ix]


def reg_event_based(
    window: EventWindow,
    model: WarpModel,
    geometry: CameraGeometry,
    kind: RegKind,
    options: RegularizerOptions = RegularizerOptions(),
) -> float:
    """Event-based baselines: average per-event quantities on the warped image.

    Each event's quantity (flow divergence, |det J| of the warp, or both) is
    splatted at its warped position with the same Gaussian footprint as the
    image of warped events; per-pixel weighted averages are reduced by a
    trimmed mean over the supported pixels.
    """
    kind = RegKind(kind)
    if kind not in (RegKind.DIVERGENCE, RegKind.DEFORMATION, RegKind.DIV_PLUS_DEF):
        raise ValueError(f"not an event-based regularizer: {kind.value}")
    tn = np.atleast_1d(normalize_time(window, window.t))
    warped = warp_event(model, geometry, window.xy(), tn)
    ones = np.ones(window.n)
    support = splat(warped, ones, geometry)
    mask = support > 0.0
    if not np.any(mask):
        warnings.warn("no warped event lands on the sensor; baseline penalty is 0")
        return 0.0
    total = 0.0
    if kind in (RegKind.DIVERGENCE, RegKind.DIV_PLUS_DEF):
        q = _event_divergence(window, model, geometry)
        avg = splat(warped, ones, geometry, quantities=q)[mask] / support[mask]
        total += _trimmed_mean(avg, options.trim)
    if kind in (RegKind.DEFORMATION, RegKind.DIV_PLUS_DEF):
        q = _event_deformation(window, model, geometry, tn)
        avg = splat(warped, ones, geometry, quantities=q)[mask] / support[mask]
        total += _trimmed_mean(avg, options.trim)
    return total
