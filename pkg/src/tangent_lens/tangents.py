"""Tangent approximations: Hausdorff distances, the fibered/segment
classification of rotated screens, and porosity of fiber sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from tangent_lens.affine import Address, IFSSystem, PointCloud
from tangent_lens.screens import (
    ApproxScenery,
    Pattern,
    approx_scenery,
    construction_level,
    detect_pattern,
    epsilon_bound,
)
from tangent_lens.symbolic import DomainError

RATIO_FLOOR = 1e-3     # smallest alpha_2/t still read as "bounded below"
SEGMENT_DROP = 10.0    # ratio decrease needed before calling a segment
POROSITY_GRID = 2.0 ** -10


def _pts(a) -> np.ndarray:
    p = np.asarray(a.points if isinstance(a, PointCloud) else a, dtype=float).reshape(-1, 2)
    if len(p) == 0:
        raise DomainError("Hausdorff distance of an empty cloud")
    return p


def hausdorff_distance(a, b) -> float:
    """Exact Hausdorff distance between two finite planar point sets."""
    pa, pb = _pts(a), _pts(b)
    d_ab = cKDTree(pb).query(pa)[0].max()
    d_ba = cKDTree(pa).query(pb)[0].max()
    return float(max(d_ab, d_ba))


def rectangles_cloud(rects: np.ndarray, res: float = 0.01) -> np.ndarray:
    """Grid points (spacing <= res) of the union of rectangles clipped to B(0,1)."""
    out = []
    for cx, cy, hw, hh in np.asarray(rects).reshape(-1, 4):
        lo = np.maximum([cx - hw, cy - hh], -1.0)
        hi = np.minimum([cx + hw, cy + hh], 1.0)
        if (lo > hi).any():
            continue
        nx = int(math.ceil((hi[0] - lo[0]) / res)) + 1
        ny = int(math.ceil((hi[1] - lo[1]) / res)) + 1
        gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], nx), np.linspace(lo[1], hi[1], ny))
        g = np.column_stack([gx.ravel(), gy.ravel()])
        g = g[np.hypot(g[:, 0], g[:, 1]) <= 1.0]
        near = np.clip(0.0, lo, hi)
        if np.hypot(*near) <= 1.0:
            g = np.vstack([g, near]) if len(g) else near[None]
        if len(g):
            out.append(g)
    return np.concatenate(out) if out else np.zeros((0, 2))


# -- porosity -------------------------------------------------------------------

def _as_intervals(set1d) -> np.ndarray:
    a = np.asarray(set1d, dtype=float)
    if a.ndim == 1:
        a = np.column_stack([a, a])
    a = a[np.argsort(a[:, 0], kind="stable")]
    merged = []
    for lo, hi in a:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return np.array(merged)


def porosity_estimate(set1d, radii, domain: tuple[float, float] | None = None,
                      grid: float = POROSITY_GRID) -> float:
    """Largest alpha on a dyadic grid with a hole B(y, alpha r) in B(x, r) \\ A
    for every probed x in A and every r in ``radii``.

    ``set1d`` is a list of (lo, hi) intervals or of points.  Probe points are
    interval endpoints plus interior points spaced at most min(radii)/4.
    ``domain`` restricts where holes may sit (e.g. the screen [-1, 1]).
    """
    iv = _as_intervals(set1d)
    if len(iv) == 0:
        raise DomainError("porosity of an empty set")
    radii = np.asarray(radii, dtype=float).ravel()
    if len(radii) == 0:
        raise DomainError("no radii to test")
    step = radii.min() / 4
    probes = []
    for lo, hi in iv:
        k = max(1, int(math.ceil((hi - lo) / step)))
        probes.append(np.linspace(lo, hi, k + 1))
    probes = np.unique(np.concatenate(probes))
    gaps_lo = iv[:-1, 1]
    gaps_hi = iv[1:, 0]
    # unbounded complement on both sides
    gaps_lo = np.concatenate([[-np.inf], gaps_lo, [iv[-1, 1]]])
    gaps_hi = np.concatenate([[iv[0, 0]], gaps_hi, [np.inf]])
    if domain is not None:
        gaps_lo = np.maximum(gaps_lo, domain[0])
        gaps_hi = np.minimum(gaps_hi, domain[1])
    best = math.inf
    for r in radii:
        a = np.maximum(gaps_lo[None, :], (probes - r)[:, None])
        b = np.minimum(gaps_hi[None, :], (probes + r)[:, None])
        hole = np.clip(b - a, 0.0, None).max(axis=1) / 2
        best = min(best, float(hole.min() / r))
        if best <= 0:
            return 0.0
    alpha = min(best, 0.5)
    k = math.floor(alpha / grid)
    # holes must avoid A, so equality with the gap is not enough
    if k * grid >= best:
        k -= 1
    return max(0.0, k * grid)


# -- the tangent pipeline ---------------------------------------------------------

@dataclass
class TraceRow:
    t: float
    level: int
    ratio: float
    log_ratio: float
    pattern: bool
    d_hausdorff: float
    max_height: float
    epsilon: float
    n_rectangles: int
    vertical_extent: float


@dataclass
class TangentApprox:
    kind: str                            # "Fibered" | "Segment" | "Undetermined"
    fiber_set: list = field(default_factory=list)
    segment: tuple | None = None
    scale_trace: list = field(default_factory=list)
    porosity_est: float | None = None
    perfect_heuristic: bool | None = None
    final: ApproxScenery | None = None
    final_pattern: Pattern | None = None
    D: float | None = None
    error: str | None = None
    sceneries: list = field(default_factory=list)


def _perfect(intervals, resolution: float) -> bool:
    """No interval sits more than 10x its own length (at least the working
    resolution) away from the rest.  A heuristic for 'no isolated points'."""
    if len(intervals) <= 1:
        return len(intervals) == 1
    iv = np.asarray(intervals)
    for k, (lo, hi) in enumerate(iv):
        others = np.delete(iv, k, axis=0)
        gap = np.maximum(0.0, np.maximum(others[:, 0] - hi, lo - others[:, 1])).min()
        if gap > 10 * max(hi - lo, resolution):
            return False
    return True


def scale_row(ifs, address, t, K, samples=2000, seed=0, stream=0, eps=None, res=0.01):
    """Screen, approximative scenery and pattern verdict at one scale."""
    if eps is None:
        eps = epsilon_bound(ifs, K)
    screen = construction_level(ifs, address, t)
    ap = approx_scenery(ifs, address, t, K, samples=samples, seed=seed, stream=stream,
                        screen=screen)
    pat = detect_pattern(ap, eps)
    P = rectangles_cloud(ap.rectangles, res)
    M = ap.sampled_screen.points
    dh = hausdorff_distance(P, M) if len(P) else float("inf")
    log_ratio = screen.log_alpha2 - math.log(t)
    row = TraceRow(t, screen.level, math.exp(log_ratio), log_ratio, pat.is_pattern, dh,
                   ap.max_height, eps, len(ap.words), float(np.ptp(M[:, 1])))
    return row, ap, pat


def modified_tangent(ifs: IFSSystem, address: Address, scales, K: int = 3,
                     samples: int = 2000, seed: int = 0, stream: int = 0,
                     min_scale: float | None = None, res: float = 0.01) -> TangentApprox:
    """Classify the rotated screens at decreasing scales.

    If the last scale is not a pattern and ``min_scale`` is given, further
    scales t/10, t/100, ... down to ``min_scale`` are tried until one is.
    """
    scales = [float(s) for s in scales]
    if not scales:
        raise DomainError("no scales given")
    if any(s <= 0 for s in scales) or any(b >= a for a, b in zip(scales, scales[1:])):
        raise DomainError("scales must be positive and strictly decreasing")
    eps = epsilon_bound(ifs, K)
    rows, ap, pat = [], None, None
    out = TangentApprox("Undetermined", scale_trace=rows)
    todo = list(scales)
    k = 0
    while k < len(todo):
        t = todo[k]
        try:
            row, ap, pat = scale_row(ifs, address, t, K, samples, seed, stream + k, eps, res)
        except DomainError as exc:
            out.error = f"screens: {exc}"
            return out
        rows.append(row)
        out.sceneries.append(ap)
        k += 1
        if k == len(todo) and not pat.is_pattern and min_scale is not None:
            nxt = t / 10
            if nxt >= min_scale * (1 - 1e-9):
                todo.append(nxt)
    out.final, out.final_pattern = ap, pat
    ratios = np.array([r.ratio for r in rows])
    out.D = min(1.0 / ratios.min(), 1.0 / RATIO_FLOOR) if ratios.min() > 0 else 1.0 / RATIO_FLOOR
    if len(rows) < 2:
        return out
    if ratios.min() >= RATIO_FLOOR and pat.is_pattern:
        out.kind = "Fibered"
        out.fiber_set = [(max(a, -1.0), min(b, 1.0)) for a, b in pat.intervals]
        out.perfect_heuristic = _perfect(out.fiber_set, res)
        lens = [b - a for a, b in out.fiber_set]
        r_min = max(4 * max(lens), 4 * res)
        if r_min < 1.0:
            radii = np.geomspace(r_min, 1.0, 12)
            out.porosity_est = porosity_estimate(out.fiber_set, radii, domain=(-1.0, 1.0))
        return out
    falling = np.all(np.diff(ratios) <= 0) and ratios[0] >= SEGMENT_DROP * ratios[-1]
    M = ap.sampled_screen.points
    if falling and rows[-1].vertical_extent <= 2 * eps:
        out.kind = "Segment"
        out.segment = (float(M[:, 0].min()), float(M[:, 0].max()))
    return out
