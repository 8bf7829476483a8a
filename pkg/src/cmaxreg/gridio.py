"""Dependency-free exports of 2D grids: binary PGM images and CSV dumps."""

from __future__ import annotations

import numpy as np


def normalize_to_u8(values: np.ndarray) -> np.ndarray:
    """Min-max normalize to the 0..255 range; a flat grid maps to zeros."""
    values = np.asarray(values, dtype=float)
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = (values - lo) / (hi - lo) * 255.0
    return np.rint(scaled).astype(np.uint8)


def write_pgm(path, values: np.ndarray) -> None:
    """Write a grid as an 8-bit binary PGM (P5), min-max normalized."""
    u8 = normalize_to_u8(values)
    h, w = u8.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(u8.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read back a binary PGM written by write_pgm."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{path}: not a binary PGM")
        dims = fh.readline().split()
        w, h = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        if maxval != 255:
            raise ValueError(f"{path}: unsupported max value {maxval}")
        data = np.frombuffer(fh.read(w * h), dtype=np.uint8)
    return data.reshape(h, w)


def write_grid_csv(path, values: np.ndarray) -> None:
    """Write a float grid as CSV, one image row per line, full precision."""
    np.savetxt(path, np.asarray(values, dtype=float), delimiter=",", fmt="%.17g")


def read_grid_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=","))
