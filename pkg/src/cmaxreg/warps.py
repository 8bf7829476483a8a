"""Parametric warp families for event alignment.

Every family exposes the same four views of the motion it models:

- ``warp_event``: transport an event at normalized time t back to t = 0,
- ``trajectory_point``: push a reference-time point forward to time t
  (the exact inverse of ``warp_event``),
- ``incremental_jacobian_det``: determinant of d x(t+dt) / d x(t) along
  the point trajectory, i.e. the local area change between two times,
- ``rate_of_area_change``: time derivative of that determinant at dt = 0.

Positions at the public interface are always raw pixel coordinates.
Internally the planar families (zoom, similarity, affine) act on
coordinates centered on the principal point, while the rotational and
homography families act on calibrated homogeneous coordinates.  Time is
normalized so that one window spans [0, 1]; parameters are rates per
window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .events import CameraGeometry

SINGULAR_EPS = 1e-12
SMALL_ANGLE = 1e-8


class SingularWarpError(ValueError):
    """A warp evaluation hit a singular trajectory matrix or a point at infinity."""


class WarpKind(str, Enum):
    TRANSLATION_2D = "translation2d"
    ZOOM_1DOF = "zoom1dof"
    ROTATION_3DOF = "rotation3dof"
    SIMILARITY_4DOF = "similarity4dof"
    AFFINE_6DOF = "affine6dof"
    HOMOGRAPHY_8DOF = "homography8dof"


DOF_BY_KIND = {
    WarpKind.TRANSLATION_2D: 2,
    WarpKind.ZOOM_1DOF: 1,
    WarpKind.ROTATION_3DOF: 3,
    WarpKind.SIMILARITY_4DOF: 4,
    WarpKind.AFFINE_6DOF: 6,
    WarpKind.HOMOGRAPHY_8DOF: 8,
}


@dataclass(frozen=True)
class WarpModel:
    """A warp family together with its parameter vector."""

    kind: WarpKind
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        kind = WarpKind(self.kind)
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "theta", theta)
        if theta.size != DOF_BY_KIND[kind]:
            raise ValueError(
                f"{kind.value} expects {DOF_BY_KIND[kind]} parameters, got {theta.size}"
            )
        if kind is WarpKind.ZOOM_1DOF and abs(1.0 - theta[0]) < SINGULAR_EPS:
            raise ValueError("zoom rate of exactly 1 collapses the whole window")
        if kind is WarpKind.SIMILARITY_4DOF and abs(1.0 - theta[3]) < SINGULAR_EPS:
            raise ValueError("similarity scale rate of exactly 1 collapses the whole window")

    @property
    def dof(self) -> int:
        return DOF_BY_KIND[self.kind]

    @classmethod
    def translation2d(cls, vx: float, vy: float) -> "WarpModel":
        return cls(WarpKind.TRANSLATION_2D, np.array([vx, vy], dtype=float))

    @classmethod
    def zoom1dof(cls, hz: float) -> "WarpModel":
        return cls(WarpKind.ZOOM_1DOF, np.array([hz], dtype=float))

    @classmethod
    def rotation3dof(cls, wx: float, wy: float, wz: float) -> "WarpModel":
        return cls(WarpKind.ROTATION_3DOF, np.array([wx, wy, wz], dtype=float))

    @classmethod
    def similarity4dof(cls, vx: float, vy: float, wz: float, s: float) -> "WarpModel":
        return cls(WarpKind.SIMILARITY_4DOF, np.array([vx, vy, wz, s], dtype=float))

    @classmethod
    def affine6dof(cls, a11, a12, a21, a22, bx, by) -> "WarpModel":
        return cls(WarpKind.AFFINE_6DOF, np.array([a11, a12, a21, a22, bx, by], dtype=float))

    @classmethod
    def homography8dof(cls, m: np.ndarray) -> "WarpModel":
        """From the first 8 row-major entries of the generator matrix (m33 fixed to 0)."""
        return cls(WarpKind.HOMOGRAPHY_8DOF, np.asarray(m, dtype=float).ravel()[:8])


def so3_exp(phi: np.ndarray) -> np.ndarray:
    """Rotation matrix for a rotation vector, stable for tiny angles."""
    phi = np.asarray(phi, dtype=float)
    angle = float(np.linalg.norm(phi))
    K = np.array(
        [
            [0.0, -phi[2], phi[1]],
            [phi[2], 0.0, -phi[0]],
            [-phi[1], phi[0], 0.0],
        ]
    )
    if angle < SMALL_ANGLE:
        return np.eye(3) + K + 0.5 * (K @ K)
    return (
        np.eye(3)
        + (np.sin(angle) / angle) * K
        + ((1.0 - np.cos(angle)) / angle**2) * (K @ K)
    )


def _broadcast(xy, t):
    """Normalize inputs to (n, 2) positions, (n,) times; remember if scalar."""
    xy = np.asarray(xy, dtype=float)
    single = xy.ndim == 1
    pts = np.atleast_2d(xy)
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        t = np.full(pts.shape[0], float(t))
    if t.shape[0] != pts.shape[0]:
        raise ValueError("positions and times must have matching lengths")
    return pts, t, single


def _rotate_points(points: np.ndarray, omega: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Apply R(omega * scale_i) to each 3-vector points[i] (Rodrigues form)."""
    w = float(np.linalg.norm(omega))
    if w == 0.0:
        return points.copy()
    u = omega / w
    ang = scale * w
    c = np.cos(ang)[:, None]
    s = np.sin(ang)[:, None]
    ux = np.cross(np.broadcast_to(u, points.shape), points)
    ud = points @ u
    return c * points + s * ux + (1.0 - c) * ud[:, None] * u


def _project(h: np.ndarray) -> np.ndarray:
    z = h[:, 2]
    if np.any(np.abs(z) < SINGULAR_EPS):
        raise SingularWarpError("trajectory point at infinity")
    return h[:, :2] / z[:, None]


def _lift(xy: np.ndarray) -> np.ndarray:
    return np.concatenate([xy, np.ones((xy.shape[0], 1))], axis=1)


def _zoom_factor(h: float, t: np.ndarray) -> np.ndarray:
    s = 1.0 - t * h
    if np.any(np.abs(s) < SINGULAR_EPS):
        raise SingularWarpError("zoom warp singular at this time")
    return s


def _sim_parts(model: WarpModel, t: np.ndarray):
    vx, vy, wz, s = model.theta
    beta_inv = _zoom_factor(s, t)  # 1/beta(t); singular when t*s -> 1
    ang = t * wz
    return vx, vy, np.cos(ang), np.sin(ang), beta_inv


def _affine_matrix(model: WarpModel, t: np.ndarray):
    a11, a12, a21, a22, bx, by = model.theta
    A = np.empty((t.shape[0], 2, 2))
    A[:, 0, 0] = 1.0 + t * a11
    A[:, 0, 1] = t * a12
    A[:, 1, 0] = t * a21
    A[:, 1, 1] = 1.0 + t * a22
    b = np.stack([t * bx, t * by], axis=1)
    return A, b


def _homography_generator(model: WarpModel) -> np.ndarray:
    M = np.zeros((3, 3))
    M.flat[:8] = model.theta
    return M


def _homography_matrices(model: WarpModel, t: np.ndarray) -> np.ndarray:
    M = _homography_generator(model)
    return np.eye(3)[None, :, :] + t[:, None, None] * M[None, :, :]


def trajectory_point(model: WarpModel, geometry: CameraGeometry, xy0, t):
    """Forward position at normalized time t of a point that is at xy0 at t = 0."""
    pts, t, single = _broadcast(xy0, t)
    kind = model.kind
    if kind is WarpKind.TRANSLATION_2D:
        out = pts + t[:, None] * model.theta
    elif kind is WarpKind.ZOOM_1DOF:
        xc = geometry.center(pts)
        out = geometry.uncenter(xc / _zoom_factor(model.theta[0], t)[:, None])
    elif kind is WarpKind.ROTATION_3DOF:
        xh = _lift(geometry.calibrate(pts))
        out = geometry.uncalibrate(_project(_rotate_points(xh, model.theta, t)))
    elif kind is WarpKind.SIMILARITY_4DOF:
        vx, vy, c, s, beta_inv = _sim_parts(model, t)
        xc = geometry.center(pts)
        rx = c * xc[:, 0] - s * xc[:, 1]
        ry = s * xc[:, 0] + c * xc[:, 1]
        out = geometry.uncenter(
            np.stack([rx / beta_inv + t * vx, ry / beta_inv + t * vy], axis=1)
        )
    elif kind is WarpKind.AFFINE_6DOF:
        A, b = _affine_matrix(model, t)
        xc = geometry.center(pts)
        out = geometry.uncenter(np.einsum("nij,nj->ni", A, xc) + b)
    elif kind is WarpKind.HOMOGRAPHY_8DOF:
        H = _homography_matrices(model, t)
        xh = _lift(geometry.calibrate(pts))
        out = geometry.uncalibrate(_project(np.einsum("nij,nj->ni", H, xh)))
    else:  # pragma: no cover
        raise ValueError(f"unknown warp kind {kind}")
    return out[0] if single else out


def warp_event(model: WarpModel, geometry: CameraGeometry, xy, t):
    """Position at t = 0 of an event observed at xy at normalized time t."""
    pts, t, single = _broadcast(xy, t)
    kind = model.kind
    if kind is WarpKind.TRANSLATION_2D:
        out = pts - t[:, None] * model.theta
    elif kind is WarpKind.ZOOM_1DOF:
        xc = geometry.center(pts)
        out = geometry.uncenter(xc * _zoom_factor(model.theta[0], t)[:, None])
    elif kind is WarpKind.ROTATION_3DOF:
        xh = _lift(geometry.calibrate(pts))
        out = geometry.uncalibrate(_project(_rotate_points(xh, model.theta, -t)))
    elif kind is WarpKind.SIMILARITY_4DOF:
        vx, vy, c, s, beta_inv = _sim_parts(model, t)
        xc = geometry.center(pts)
        dx = (xc[:, 0] - t * vx) * beta_inv
        dy = (xc[:, 1] - t * vy) * beta_inv
        out = geometry.uncenter(np.stack([c * dx + s * dy, -s * dx + c * dy], axis=1))
    elif kind is WarpKind.AFFINE_6DOF:
        A, b = _affine_matrix(model, t)
        det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
        if np.any(np.abs(det) < SINGULAR_EPS):
            raise SingularWarpError("affine warp singular at this time")
        xc = geometry.center(pts) - b
        inv_x = (A[:, 1, 1] * xc[:, 0] - A[:, 0, 1] * xc[:, 1]) / det
        inv_y = (-A[:, 1, 0] * xc[:, 0] + A[:, 0, 0] * xc[:, 1]) / det
        out = geometry.uncenter(np.stack([inv_x, inv_y], axis=1))
    elif kind is WarpKind.HOMOGRAPHY_8DOF:
        H = _homography_matrices(model, t)
        det = np.linalg.det(H)
        if np.any(np.abs(det) < SINGULAR_EPS):
            raise SingularWarpError("homography warp singular at this time")
        xh = _lift(geometry.calibrate(pts))
        out = geometry.uncalibrate(_project(np.linalg.solve(H, xh[:, :, None])[:, :, 0]))
    else:  # pragma: no cover
        raise ValueError(f"unknown warp kind {kind}")
    return out[0] if single else out


def incremental_jacobian_det(model: WarpModel, geometry: CameraGeometry, xy_t, t, dt):
    """Area scale factor det(d x(t+dt) / d x(t)) at a trajectory point.

    xy_t is the pixel position of the trajectory at time t.  Family-specific
    closed forms are used everywhere; the value is 1 at dt = 0.
    """
    pts, t, single = _broadcast(xy_t, t)
    dt = np.asarray(dt, dtype=float)
    if dt.ndim == 0:
        dt = np.full(t.shape, float(dt))
    kind = model.kind
    if kind is WarpKind.TRANSLATION_2D:
        out = np.ones_like(t)
    elif kind is WarpKind.ZOOM_1DOF:
        h = model.theta[0]
        out = (_zoom_factor(h, t) / _zoom_factor(h, t + dt)) ** 2
    elif kind is WarpKind.ROTATION_3DOF:
        xh = _lift(geometry.calibrate(pts))
        denom = np.empty_like(t)
        for d in np.unique(dt):
            r3 = so3_exp(model.theta * d)[2]
            sel = dt == d
            denom[sel] = xh[sel] @ r3
        if np.any(np.abs(denom) < SINGULAR_EPS):
            raise SingularWarpError("trajectory point at infinity")
        out = denom**-3
    elif kind is WarpKind.SIMILARITY_4DOF:
        s = model.theta[3]
        out = (_zoom_factor(s, t) / _zoom_factor(s, t + dt)) ** 2
    elif kind is WarpKind.AFFINE_6DOF:
        a11, a12, a21, a22 = model.theta[:4]

        def det_a(tt):
            return (1.0 + tt * a11) * (1.0 + tt * a22) - (tt * a12) * (tt * a21)

        d0 = det_a(t)
        d1 = det_a(t + dt)
        if np.any(np.abs(d0) < SINGULAR_EPS):
            raise SingularWarpError("affine warp singular at this time")
        out = np.abs(d1) / np.abs(d0)
    elif kind is WarpKind.HOMOGRAPHY_8DOF:
        M = _homography_generator(model)
        xh = _lift(geometry.calibrate(pts))
        out = np.empty_like(t)
        # group by (t, dt) so map-style calls (shared times) stay vectorized
        for t0, d0 in np.unique(np.stack([t, dt], axis=1), axis=0):
            h0 = np.eye(3) + t0 * M
            h1 = np.eye(3) + (t0 + d0) * M
            if abs(np.linalg.det(h0)) < SINGULAR_EPS:
                raise SingularWarpError("homography warp singular at this time")
            hinc = h1 @ np.linalg.inv(h0)
            sel = (t == t0) & (dt == d0)
            denom = xh[sel] @ hinc[2]
            if np.any(np.abs(denom) < SINGULAR_EPS):
                raise SingularWarpError("trajectory point at infinity")
            out[sel] = np.linalg.det(hinc) / denom**3
    else:  # pragma: no cover
        raise ValueError(f"unknown warp kind {kind}")
    return float(out[0]) if single else out


def rate_of_area_change(model: WarpModel, geometry: CameraGeometry, xy_t, t):
    """d/d(dt) of incremental_jacobian_det at dt = 0 (log-rate of area deformation)."""
    pts, t, single = _broadcast(xy_t, t)
    kind = model.kind
    if kind is WarpKind.TRANSLATION_2D:
        out = np.zeros_like(t)
    elif kind is WarpKind.ZOOM_1DOF:
        h = model.theta[0]
        out = 2.0 * h / _zoom_factor(h, t)
    elif kind is WarpKind.ROTATION_3DOF:
        wx, wy, _ = model.theta
        xc = geometry.calibrate(pts)
        out = 3.0 * (xc[:, 0] * wy - xc[:, 1] * wx)
    elif kind is WarpKind.SIMILARITY_4DOF:
        s = model.theta[3]
        out = 2.0 * s / _zoom_factor(s, t)
    elif kind is WarpKind.AFFINE_6DOF:
        a11, a12, a21, a22 = model.theta[:4]
        A, _ = _affine_matrix(model, t)
        det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
        if np.any(np.abs(det) < SINGULAR_EPS):
            raise SingularWarpError("affine warp singular at this time")
        # d/ds log|det A(s)| = tr(A^{-1} A'), with A' constant here
        out = (
            A[:, 1, 1] * a11 - A[:, 0, 1] * a21 - A[:, 1, 0] * a12 + A[:, 0, 0] * a22
        ) / det
    elif kind is WarpKind.HOMOGRAPHY_8DOF:
        step = 1e-6
        f1 = incremental_jacobian_det(model, geometry, pts, t, step)
        f0 = incremental_jacobian_det(model, geometry, pts, t, -step)
        out = (np.atleast_1d(f1) - np.atleast_1d(f0)) / (2.0 * step)
    else:  # pragma: no cover
        raise ValueError(f"unknown warp kind {kind}")
    return float(out[0]) if single else out


@dataclass
class FlowField:
    """Per-pixel 2D vectors on the sensor grid, vectors[y, x] = (u, v)."""

    width: int
    height: int
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.shape != (self.height, self.width, 2):
            raise ValueError("flow field shape must be (height, width, 2)")


def flow_field(model: WarpModel, geometry: CameraGeometry) -> FlowField:
    """Forward trajectory velocity at t = 0, in pixels per window, at each pixel.

    Evaluated by central differences of trajectory_point with step 1e-4 in
    normalized time; constant-velocity families short-circuit to the exact
    value.
    """
    grid = geometry.pixel_centers()
    if model.kind is WarpKind.TRANSLATION_2D:
        vec = np.broadcast_to(model.theta, grid.shape).copy()
    else:
        step = 1e-4
        fwd = trajectory_point(model, geometry, grid, step)
        back = trajectory_point(model, geometry, grid, -step)
        vec = (fwd - back) / (2.0 * step)
    return FlowField(
        width=geometry.width,
        height=geometry.height,
        vectors=vec.reshape(geometry.height, geometry.width, 2),
    )


def displacement_field(model: WarpModel, geometry: CameraGeometry) -> FlowField:
    """Full-window displacement trajectory_point(x, 1) - x at each pixel."""
    grid = geometry.pixel_centers()
    disp = trajectory_point(model, geometry, grid, 1.0) - grid
    return FlowField(
        width=geometry.width,
        height=geometry.height,
        vectors=disp.reshape(geometry.height, geometry.width, 2),
    )
