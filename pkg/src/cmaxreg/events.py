"""Event stream containers, camera geometry, and text-format ingestion."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EventFormatError(ValueError):
    """Raised when an event text file cannot be parsed."""


@dataclass(frozen=True)
class Event:
    """A single camera event: timestamp in seconds, pixel position, polarity."""

    t: float
    x: float
    y: float
    polarity: int

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.polarity}")


@dataclass(frozen=True)
class CameraGeometry:
    """Pinhole geometry: sensor size, focal lengths and principal point in pixels."""

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("sensor dimensions must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    def center(self, xy: np.ndarray) -> np.ndarray:
        """Pixel coordinates -> coordinates relative to the principal point."""
        return np.asarray(xy, dtype=float) - np.array([self.cx, self.cy])

    def uncenter(self, xy: np.ndarray) -> np.ndarray:
        return np.asarray(xy, dtype=float) + np.array([self.cx, self.cy])

    def calibrate(self, xy: np.ndarray) -> np.ndarray:
        """Pixel coordinates -> calibrated (unit focal length) coordinates."""
        return self.center(xy) / np.array([self.fx, self.fy])

    def uncalibrate(self, xy: np.ndarray) -> np.ndarray:
        return np.asarray(xy, dtype=float) * np.array([self.fx, self.fy]) + np.array(
            [self.cx, self.cy]
        )

    def contains(self, xy: np.ndarray) -> np.ndarray:
        """Boolean mask of positions inside [0, width) x [0, height)."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        return (
            (xy[..., 0] >= 0)
            & (xy[..., 0] < self.width)
            & (xy[..., 1] >= 0)
            & (xy[..., 1] < self.height)
        )

    def pixel_centers(self, stride: int = 1) -> np.ndarray:
        """Sampled pixel-center coordinates as an (n, 2) array, row-major."""
        xs = np.arange(0, self.width, stride, dtype=float)
        ys = np.arange(0, self.height, stride, dtype=float)
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx.ravel(), gy.ravel()], axis=1)


@dataclass
class EventWindow:
    """A time-ordered slice of an event stream, stored as parallel arrays."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.p = np.asarray(self.p, dtype=int)
        n = self.t.size
        if n == 0:
            raise ValueError("event window must contain at least one event")
        if not (self.x.size == n and self.y.size == n and self.p.size == n):
            raise ValueError("event arrays must have equal length")
        if np.any(np.diff(self.t) < 0):
            raise ValueError("event timestamps must be non-decreasing")

    @property
    def n(self) -> int:
        return self.t.size

    @property
    def t_first(self) -> float:
        return float(self.t[0])

    @property
    def t_last(self) -> float:
        return float(self.t[-1])

    @property
    def duration(self) -> float:
        return self.t_last - self.t_first

    def xy(self) -> np.ndarray:
        return np.stack([self.x, self.y], axis=1)

    @classmethod
    def from_events(cls, events: list[Event]) -> "EventWindow":
        events = sorted(events, key=lambda e: e.t)
        return cls(
            t=np.array([e.t for e in events]),
            x=np.array([e.x for e in events]),
            y=np.array([e.y for e in events]),
            p=np.array([e.polarity for e in events]),
        )


def normalize_time(window: EventWindow, t):
    """Map timestamps in [t_first, t_last] onto [0, 1].

    A window of zero duration maps every timestamp to 0.  Timestamps outside
    the window raise ValueError.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < window.t_first) or np.any(t > window.t_last):
        raise ValueError("timestamp outside the event window")
    span = window.duration
    if span == 0.0:
        out = np.zeros_like(t)
    else:
        out = (t - window.t_first) / span
    return float(out) if out.ndim == 0 else out


@dataclass
class IngestReport:
    """Bookkeeping from load_events: rejected lines and input ordering."""

    rejected_out_of_bounds: int = 0
    was_sorted: bool = True
    comments: list[str] = field(default_factory=list)


def load_events(path, geometry: CameraGeometry) -> tuple[EventWindow, IngestReport]:
    """Read an event text file: one `t x y p` record per line.

    t is seconds (decimal), x and y are integer pixels, p is 1, -1 or 0
    (0 is mapped to -1).  Lines starting with `#` and blank lines are
    skipped.  Events outside the sensor bounds are dropped and counted.
    Unsorted input is sorted, recorded in the report.
    """
    ts: list[float] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []
    rejected = 0
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise EventFormatError(
                    f"{path}: line {lineno}: expected 4 fields, got {len(parts)}"
                )
            try:
                t = float(parts[0])
                x = int(parts[1])
                y = int(parts[2])
                p = int(parts[3])
            except ValueError as exc:
                raise EventFormatError(f"{path}: line {lineno}: {exc}") from None
            if p == 0:
                p = -1
            if p not in (-1, 1):
                raise EventFormatError(
                    f"{path}: line {lineno}: polarity must be 1, -1 or 0, got {p}"
                )
            if not (0 <= x < geometry.width and 0 <= y < geometry.height):
                rejected += 1
                continue
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(p)
    if not ts:
        raise EventFormatError(f"{path}: no events")
    t_arr = np.array(ts)
    was_sorted = bool(np.all(np.diff(t_arr) >= 0))
    order = np.argsort(t_arr, kind="stable")
    if was_sorted:
        order = np.arange(t_arr.size)
    window = EventWindow(
        t=t_arr[order],
        x=np.array(xs, dtype=float)[order],
        y=np.array(ys, dtype=float)[order],
        p=np.array(ps)[order],
    )
    return window, IngestReport(rejected_out_of_bounds=rejected, was_sorted=was_sorted)


def write_events(path, window: EventWindow) -> None:
    """Write a window in the `t x y p` text format (positions rounded to pixels)."""
    with open(path, "w") as fh:
        for t, x, y, p in zip(window.t, window.x, window.y, window.p):
            fh.write(f"{t:.9f} {int(round(x))} {int(round(y))} {int(p)}\n")


def slice_by_count(window: EventWindow, n: int) -> list[EventWindow]:
    """Split into consecutive windows of n events; the tail keeps the remainder."""
    if n < 1:
        raise ValueError("window event count must be >= 1")
    out = []
    for start in range(0, window.n, n):
        stop = min(start + n, window.n)
        out.append(
            EventWindow(
                t=window.t[start:stop],
                x=window.x[start:stop],
                y=window.y[start:stop],
                p=window.p[start:stop],
            )
        )
    return out


def slice_by_duration(window: EventWindow, seconds: float) -> list[EventWindow]:
    """Split into fixed-duration windows; empty bins are skipped."""
    if seconds <= 0:
        raise ValueError("window duration must be positive")
    idx = np.floor((window.t - window.t_first) / seconds).astype(int)
    # Fold timestamps landing on the last edge into the final bin; the relative
    # shrink keeps float noise in duration/seconds from minting a phantom bin.
    ratio = window.duration / seconds
    nbins = max(int(np.ceil(ratio * (1.0 - 1e-12))), 1)
    idx = np.minimum(idx, nbins - 1)
    out = []
    for k in range(int(idx.max()) + 1):
        mask = idx == k
        if not np.any(mask):
            continue
        out.append(
            EventWindow(t=window.t[mask], x=window.x[mask], y=window.y[mask], p=window.p[mask])
        )
    return out
