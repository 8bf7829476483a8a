"""Figure rendering for CLI artifacts (PNG, Agg backend).

All numeric artifacts are written elsewhere as CSV/PGM; these renderings are
companions for quick visual inspection and are not read back by the library.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_sweep_figure", "save_map_figure", "save_image_figure"]


def save_sweep_figure(rows: np.ndarray, path, param_label: str = "parameter") -> None:
    """Render a 1-D landscape sweep: negative sharpness, penalty, composite.

    ``rows`` is the (n, 4) array produced by ``landscape_sweep``:
    columns (theta, -G, R, composite). Non-finite rows are left as gaps.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise ValueError("sweep rows must be an (n, 4) array")
    th = rows[:, 0]
    fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=120)
    ax.plot(th, rows[:, 1], lw=1.4, label="negative sharpness")
    ax.plot(th, rows[:, 2], lw=1.4, label="collapse penalty")
    ax.plot(th, rows[:, 3], lw=1.8, color="k", label="composite")
    ax.axhline(0.0, color="0.75", lw=0.6, zorder=0)
    ax.set_xlabel(param_label)
    ax.set_ylabel("value")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_map_figure(values: np.ndarray, path, title: str = "") -> None:
    """Render a signed per-pixel map with a diverging colormap centered at 0."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("map values must be a 2-D array")
    lim = float(np.max(np.abs(v))) if v.size else 0.0
    if lim == 0.0:
        lim = 1.0
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=120)
    im = ax.imshow(v, cmap="RdBu_r", vmin=-lim, vmax=lim, origin="upper",
                   interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.85)
    if title:
        ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_image_figure(values: np.ndarray, path, title: str = "") -> None:
    """Render a non-negative intensity image (e.g. an accumulated event image)."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("image values must be a 2-D array")
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=120)
    im = ax.imshow(v, cmap="gray", origin="upper", interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.85)
    if title:
        ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
