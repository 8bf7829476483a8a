"""Image of warped events and the sharpness objectives scored on it."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .events import CameraGeometry, EventWindow, normalize_time
from .warps import WarpModel, warp_event

SIGMA = 1.0
STENCIL_RADIUS = 3  # 7x7 support, +-3 sigma
_GAUSS_NORM = 1.0 / np.sqrt(2.0 * np.pi)


class ObjectiveKind(str, Enum):
    VARIANCE = "variance"
    GRADIENT_MAGNITUDE = "gradmag"


@dataclass(frozen=True)
class Objective:
    """Sharpness functional plus the event weighting it scores."""

    kind: ObjectiveKind = ObjectiveKind.VARIANCE
    use_polarity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ObjectiveKind(self.kind))


@dataclass
class Iwe:
    """Accumulated image of warped events, values[y, x]."""

    values: np.ndarray
    total_mass: float
    empty: bool

    @property
    def shape(self):
        return self.values.shape


def splat(
    positions: np.ndarray,
    weights: np.ndarray,
    geometry: CameraGeometry,
    quantities: np.ndarray | None = None,
) -> np.ndarray:
    """Deposit Gaussian footprints (sigma 1 px, 7x7) at sub-pixel positions.

    Each position contributes weight * N(pixel; position, sigma^2) sampled at
    pixel centers around the rounded position; contributions outside the image
    are dropped.  With `quantities` given, each deposit is additionally scaled
    by the per-position quantity (used by the per-pixel average images).
    """
    w, h = geometry.width, geometry.height
    acc = np.zeros(w * h)
    cx = np.rint(positions[:, 0]).astype(np.int64)
    cy = np.rint(positions[:, 1]).astype(np.int64)
    # separable Gaussian samples for the 7 offsets around each center
    gx = np.empty((2 * STENCIL_RADIUS + 1, positions.shape[0]))
    gy = np.empty_like(gx)
    for k, off in enumerate(range(-STENCIL_RADIUS, STENCIL_RADIUS + 1)):
        dx = cx + off - positions[:, 0]
        dy = cy + off - positions[:, 1]
        gx[k] = _GAUSS_NORM * np.exp(-0.5 * dx * dx)
        gy[k] = _GAUSS_NORM * np.exp(-0.5 * dy * dy)
    scale = weights if quantities is None else weights * quantities
    for ky in range(2 * STENCIL_RADIUS + 1):
        iy = cy + (ky - STENCIL_RADIUS)
        for kx in range(2 * STENCIL_RADIUS + 1):
            ix = cx + (kx - STENCIL_RADIUS)
            val = scale * gx[kx] * gy[ky]
            ok = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
            if not np.any(ok):
                continue
            acc += np.bincount(iy[ok] * w + ix[ok], weights=val[ok], minlength=w * h)
    return acc.reshape(h, w)


def build_iwe(
    window: EventWindow,
    model: WarpModel,
    geometry: CameraGeometry,
    objective: Objective = Objective(),
) -> Iwe:
    """Warp every event to t = 0 and accumulate the Gaussian-splatted image."""
    tn = normalize_time(window, window.t)
    tn = np.atleast_1d(tn)
    warped = warp_event(model, geometry, window.xy(), tn)
    weights = window.p.astype(float) if objective.use_polarity else np.ones(window.n)
    values = splat(warped, weights, geometry)
    total = float(values.sum())
    return Iwe(values=values, total_mass=total, empty=total == 0.0)


def objective_value(iwe: Iwe, objective: Objective) -> float:
    """Score an accumulated image: variance or mean squared gradient magnitude."""
    if objective.kind is ObjectiveKind.VARIANCE:
        return float(np.var(iwe.values))
    if objective.kind is ObjectiveKind.GRADIENT_MAGNITUDE:
        gy, gx = np.gradient(iwe.values)
        return float(np.mean(gx * gx + gy * gy))
    raise ValueError(f"unknown objective kind {objective.kind}")  # pragma: no cover
