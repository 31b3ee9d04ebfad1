"""Matplotlib report figures for the analyze commands (PNG, reproducible bytes)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Circle, Polygon, Rectangle  # noqa: E402

_META = {"Software": None}


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def plot_covers(ifs, path: Path, title: str = "") -> None:
    """Level-1 and level-2 cover polygons of the attractor."""
    from tangent_lens.affine import cover_polys, level_maps

    fig, ax = plt.subplots(figsize=(5, 5))
    for depth, alpha in ((1, 0.25), (2, 0.6)):
        _, A, b = level_maps(ifs, (), depth)
        for poly in cover_polys(ifs, A, b):
            ax.add_patch(Polygon(poly, closed=True, fill=True, alpha=alpha, lw=0.3,
                                 ec="k", fc="tab:blue"))
    (x0, y0), (x1, y1) = ifs.hull_bbox
    pad = 0.05 * max(x1 - x0, y1 - y0)
    ax.set_xlim(x0 - pad, x1 + pad)
    ax.set_ylim(y0 - pad, y1 + pad)
    ax.set_aspect("equal")
    ax.set_title(title or "cylinder covers, levels 1-2")
    _save(fig, path)


def plot_lyapunov(samples: np.ndarray, path: Path, closed_form=None) -> None:
    """Histogram of per-trial exponent estimates."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for k, lab in ((0, "lambda_1"), (1, "lambda_2")):
        ax.hist(samples[:, k], bins=30, alpha=0.6, label=lab)
    if closed_form is not None:
        for v in closed_form:
            ax.axvline(v, color="k", ls="--", lw=1)
    ax.set_xlabel("-(1/n) log alpha_k")
    ax.set_ylabel("trials")
    ax.legend()
    _save(fig, path)


def plot_tangent(rows, sceneries, path: Path) -> None:
    """One panel per scale: construction rectangles and the sampled screen."""
    n = len(sceneries)
    fig, axes = plt.subplots(1, n, figsize=(3 * n, 3.2), squeeze=False)
    for ax, row, ap in zip(axes[0], rows, sceneries):
        ax.add_patch(Circle((0, 0), 1, fill=False, lw=0.8))
        for cx, cy, hw, hh in ap.rectangles:
            ax.add_patch(Rectangle((cx - hw, cy - hh), 2 * hw, 2 * hh, fill=True, alpha=0.3,
                                   lw=0.3, ec="tab:red", fc="tab:red"))
        if ap.sampled_screen is not None:
            p = ap.sampled_screen.points
            ax.plot(p[:, 0], p[:, 1], ",", color="k")
        ax.set_xlim(-1.05, 1.05)
        ax.set_ylim(-1.05, 1.05)
        ax.set_aspect("equal")
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(f"t={row.t:g} n={row.level} {'pattern' if row.pattern else ''}",
                     fontsize=8)
    fig.tight_layout()
    _save(fig, path)
