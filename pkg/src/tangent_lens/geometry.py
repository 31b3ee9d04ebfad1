"""Convex polygon helpers used for outer covers of cylinders."""

from __future__ import annotations

import numpy as np


def convex_hull(points) -> np.ndarray:
    """Counter-clockwise hull vertices (Andrew's monotone chain).

    Degenerate inputs come back as one or two vertices.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 2:
        return pts[[0, -1]]
    return hull


def support(vertices: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """max_v <d, v> for each row d of ``directions``."""
    return (directions @ vertices.T).max(axis=1)


def circumscribe(vertices: np.ndarray, n_dirs: int = 256) -> np.ndarray:
    """Outer polygon bounded by supporting lines in ``n_dirs`` uniform directions."""
    ang = 2 * np.pi * np.arange(n_dirs) / n_dirs
    u = np.column_stack([np.cos(ang), np.sin(ang)])
    h = support(vertices, u)
    u2 = np.roll(u, -1, axis=0)
    h2 = np.roll(h, -1)
    det = u[:, 0] * u2[:, 1] - u[:, 1] * u2[:, 0]
    x = (h * u2[:, 1] - h2 * u[:, 1]) / det
    y = (u[:, 0] * h2 - u2[:, 0] * h) / det
    return convex_hull(np.column_stack([x, y]))


def _edges(polys: np.ndarray):
    a = polys
    b = np.roll(polys, -1, axis=-2)
    return a, b


def _seg_dist(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from points x (..., 2) to segments [a, b] (..., 2), broadcasting."""
    ab = b - a
    ax = x - a
    denom = np.einsum("...i,...i->...", ab, ab)
    s = np.where(denom > 0, np.einsum("...i,...i->...", ax, ab) / np.where(denom > 0, denom, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    d = ax - s[..., None] * ab
    return np.sqrt(np.einsum("...i,...i->...", d, d))


def point_polys_distance(x, polys: np.ndarray) -> np.ndarray:
    """Euclidean distance from point ``x`` to each convex polygon in ``polys``.

    ``polys`` has shape (k, V, 2); vertex order may be clockwise or not. The
    distance is 0 for points inside.
    """
    x = np.asarray(x, dtype=float)
    a, b = _edges(polys)
    cross = (b[..., 0] - a[..., 0]) * (x[1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (x[0] - a[..., 0])
    area = 0.5 * np.abs(np.sum(a[..., 0] * b[..., 1] - b[..., 0] * a[..., 1], axis=-1))
    inside = ((cross >= 0).all(axis=-1) | (cross <= 0).all(axis=-1)) & (area > 0)
    d = _seg_dist(x, a, b).min(axis=-1)
    return np.where(inside, 0.0, d)


def polygons_intersect(p: np.ndarray, q: np.ndarray) -> bool:
    """Separating-axis test for two convex polygons (closed sets)."""
    if len(p) == 1 and len(q) == 1:
        return bool(np.array_equal(p[0], q[0]))
    if len(p) == 1 or len(q) == 1:
        pt, poly = (p[0], q) if len(p) == 1 else (q[0], p)
        return bool(point_polys_distance(pt, poly[None])[0] == 0.0)
    for poly in (p, q):
        if len(poly) < 2:
            continue
        e = np.roll(poly, -1, axis=0) - poly
        normals = np.column_stack([-e[:, 1], e[:, 0]])
        if len(poly) == 2:
            normals = np.vstack([normals, e])
        for nrm in normals:
            if not nrm.any():
                continue
            pp = p @ nrm
            qq = q @ nrm
            if pp.max() < qq.min() or qq.max() < pp.min():
                return False
    return True


def polygon_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Distance between two convex polygons (0 if they meet)."""
    if polygons_intersect(p, q):
        return 0.0
    pa, pb = _edges(q[None])
    d1 = _seg_dist(p[:, None, :], pa, pb).min()
    qa, qb = _edges(p[None])
    d2 = _seg_dist(q[:, None, :], qa, qb).min()
    return float(min(d1, d2))


def inside_convex(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Boolean mask of ``points`` (n, 2) lying in the closed convex polygon."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    cross = ((b[:, 0] - a[:, 0])[None, :] * (points[:, 1:2] - a[None, :, 1])
             - (b[:, 1] - a[:, 1])[None, :] * (points[:, 0:1] - a[None, :, 0]))
    return (cross >= 0).all(axis=1) | (cross <= 0).all(axis=1)
