"""Bit-exact grayscale frames of a zoom, written as binary PPM.

Each frame shows the screen around x at scale t in scene orientation: the
cover parallelograms f_w(bbox) of levels n(x,t) .. n(x,t)+3 are painted on
top of each other, the construction level white and deeper levels darker.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from tangent_lens.affine import IFSSystem
from tangent_lens.screens import Screen

PALETTE = (0, 255, 191, 127, 63)   # background, then levels n .. n+3
LEVELS = 4


def _box_corners(ifs: IFSSystem) -> np.ndarray:
    (x0, y0), (x1, y1) = ifs.bbox
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


def cylinders_in_view(ifs: IFSSystem, center, half: float, level: int,
                      max_count: int = 400_000):
    """(level, A, b) for cylinders of levels level..level+3 whose cover meets
    the square of half-side ``half`` around ``center``."""
    corners = _box_corners(ifs)
    lo = np.asarray(center) - half
    hi = np.asarray(center) + half
    out = []
    stack = [(0, np.eye(2), np.zeros(2))]
    while stack:
        d, A, b = stack.pop()
        pts = corners @ A.T + b
        if (pts.max(axis=0) < lo).any() or (pts.min(axis=0) > hi).any():
            continue
        if d >= level:
            out.append((d, A, b))
            if len(out) > max_count:
                raise RuntimeError("too many cylinders in view")
        if d < level + LEVELS - 1:
            for k in range(ifs.m - 1, -1, -1):
                stack.append((d + 1, A @ ifs.A[k], A @ ifs.b[k] + b))
    out.sort(key=lambda r: r[0])
    return out


def render_frame(ifs: IFSSystem, screen: Screen, size: int = 400,
                 square: bool = True) -> np.ndarray:
    """(size, size) uint8 image of the screen; row 0 is the top."""
    t = screen.radius
    c = screen.center
    u = -1 + (np.arange(size) + 0.5) * (2.0 / size)
    gx, gy = np.meshgrid(u, u[::-1])
    img = np.zeros((size, size), dtype=np.uint8)
    (x0, y0), (x1, y1) = ifs.bbox
    for d, A, b in cylinders_in_view(ifs, c, t, screen.level):
        # pixel (gx, gy) is the scene point c + t (gx, gy); pull it back by f_w
        pts = _box_corners(ifs) @ A.T + b
        pmin = (pts.min(axis=0) - c) / t
        pmax = (pts.max(axis=0) - c) / t
        cols = np.nonzero((u >= pmin[0] - 2.0 / size) & (u <= pmax[0] + 2.0 / size))[0]
        rows = np.nonzero((u[::-1] >= pmin[1] - 2.0 / size) & (u[::-1] <= pmax[1] + 2.0 / size))[0]
        if len(cols) == 0 or len(rows) == 0:
            continue
        r0, r1, c0, c1 = rows[0], rows[-1] + 1, cols[0], cols[-1] + 1
        sx = c[0] + t * gx[r0:r1, c0:c1] - b[0]
        sy = c[1] + t * gy[r0:r1, c0:c1] - b[1]
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        qx = (A[1, 1] * sx - A[0, 1] * sy) / det
        qy = (-A[1, 0] * sx + A[0, 0] * sy) / det
        inside = (qx >= x0) & (qx <= x1) & (qy >= y0) & (qy <= y1)
        img[r0:r1, c0:c1][inside] = PALETTE[1 + d - screen.level]
    if not square:
        img[gx ** 2 + gy ** 2 > 1.0] = PALETTE[0]
    return img


def write_ppm(path: Path | str, img: np.ndarray) -> None:
    """Binary P6 with equal RGB channels."""
    h, w = img.shape
    rgb = np.repeat(img[:, :, None], 3, axis=2)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path: Path | str) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4], dtype=np.uint8).reshape(h, w, 3)
