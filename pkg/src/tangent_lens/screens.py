"""Zooming into the attractor: construction levels, sceneries, approximative
sceneries built from construction rectangles, and pattern detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tangent_lens import geometry
from tangent_lens.affine import (
    Address,
    IFSSystem,
    PointCloud,
    apply_words,
    ball_meets,
    compose_along,
)
from tangent_lens.spectral import SingularFrame, singular_frame
from tangent_lens.symbolic import BernoulliWeights, DomainError, Word, make_rng, sample_words


class ScreenError(DomainError):
    """Raised when the two-sided intersection test cannot decide a screen."""

    def __init__(self, msg: str, word: Word = (), t: float = float("nan")):
        super().__init__(msg)
        self.word = word
        self.t = t


@dataclass(frozen=True, eq=False)
class Screen:
    center: np.ndarray
    radius: float
    level: int
    word: Word
    rotation: np.ndarray
    address: Address
    frame: SingularFrame | None = None

    def to_screen(self, pts: np.ndarray) -> np.ndarray:
        """Z then O: scene points to rotated screen coordinates."""
        return ((np.asarray(pts) - self.center) / self.radius) @ self.rotation.T

    @property
    def alpha2(self) -> float:
        return 1.0 if self.frame is None else self.frame.alpha2

    @property
    def log_alpha2(self) -> float:
        return 0.0 if self.frame is None else self.frame.log_alpha2


def construction_level(ifs: IFSSystem, address: Address, t: float,
                       max_level: int = 2000, meet_depth: int = 24) -> Screen:
    """Largest n such that B(x, t) meets only the level-n cylinder of x.

    Level n is unique iff level n-1 is unique and no sibling of the address
    at level n meets the ball, so only siblings need testing.
    """
    if not t > 0:
        raise DomainError("radius must be positive")
    x = address.point(ifs)
    letters = address.letters(max_level + 1)
    A = np.eye(2)
    b = np.zeros(2)
    n = 0
    while n < max_level:
        nxt = letters[n]
        hit = False
        for k in range(1, ifs.m + 1):
            if k == nxt:
                continue
            res = ball_meets(ifs, A @ ifs.A[k - 1], A @ ifs.b[k - 1] + b, x, t,
                             max_depth=meet_depth)
            if res is None:
                raise ScreenError(f"cannot decide whether B(x, {t:g}) meets cylinder "
                                  f"{letters[:n] + (k,)} at refinement depth {meet_depth}",
                                  letters[:n] + (k,), t)
            if res:
                hit = True
                break
        if hit:
            break
        b = A @ ifs.b[nxt - 1] + b
        A = A @ ifs.A[nxt - 1]
        n += 1
    word = letters[:n]
    if n == 0:
        return Screen(x, float(t), 0, (), np.eye(2), address, None)
    fr = singular_frame(ifs, word)
    return Screen(x, float(t), n, word, fr.rotation, address, fr)


def epsilon_bound(ifs: IFSSystem, K: int) -> float:
    """L * delta^-1 * alpha_hi^K with the certified delta lower bound."""
    if K < 0:
        raise DomainError("K must be >= 0")
    d = ifs.delta_lb
    if d is None:
        raise DomainError("no certified separation constant for this system")
    return ifs.L_est / d * ifs.alpha_hi ** K


# -- sampling -------------------------------------------------------------------

def _local_leaves(ifs: IFSSystem, A, b, x, t, leaf_scale: float, max_leaves: int = 20000):
    """Cylinders under f=(A, b) whose cover meets B(x, t), refined until they are
    small or lie inside the ball.  Returns (words-as-lists, A stack, b stack)."""
    hull = ifs.hull
    out_w, out_A, out_b = [], [], []
    stack = [((), A, b)]
    while stack:
        w, A0, b0 = stack.pop()
        poly = hull @ A0.T + b0
        if geometry.point_polys_distance(x, poly[None])[0] > t:
            continue
        far = np.hypot(*(poly - x).T).max()
        diam = np.hypot(*(poly.max(axis=0) - poly.min(axis=0)))
        if far <= t or diam <= leaf_scale * t or len(out_w) + len(stack) >= max_leaves:
            out_w.append(w)
            out_A.append(A0)
            out_b.append(b0)
            continue
        for k in range(ifs.m, 0, -1):
            stack.append((w + (k,), A0 @ ifs.A[k - 1], A0 @ ifs.b[k - 1] + b0))
    return out_w, np.array(out_A), np.array(out_b)


@dataclass
class SceneryCloud(PointCloud):
    screen: Screen | None = None


def scenery(ifs: IFSSystem, address: Address, t: float, samples: int = 2000,
            rotate: bool = True, seed: int = 0, stream: int = 0,
            screen: Screen | None = None, weights: BernoulliWeights | None = None,
            leaf_scale: float = 0.25, budget_factor: int = 20) -> SceneryCloud:
    """Attractor points of B(x, t) mapped to the unit ball (rotated if asked).

    Points are f_{u v}(anchor) for leaf cylinders u near the ball and random
    continuations v, so each one lies exactly on the attractor.
    """
    if samples < 1:
        raise DomainError("samples must be positive")
    screen = screen or construction_level(ifs, address, t)
    f = compose_along(ifs, screen.word)
    x = screen.center
    words, LA, Lb = _local_leaves(ifs, f.matrix, f.translation, x, t, leaf_scale)
    # leaves are small relative to t, so picking them uniformly spreads the
    # samples evenly over the screen
    weights = weights or BernoulliWeights.uniform(ifs.m)
    cont = max(8, math.ceil(math.log(1e-3 * leaf_scale) / math.log(ifs.alpha_hi)))
    rng = make_rng(seed, stream, 0x5CE)
    got = []
    n_got = 0
    drawn = 0
    batch = max(256, samples)
    while n_got < samples and drawn < budget_factor * samples:
        leaf = rng.integers(0, len(words), size=batch)
        tails = sample_words(weights, cont, batch, rng)
        pts = apply_words(ifs, tails, ifs.anchor)
        pts = np.einsum("nij,nj->ni", LA[leaf], pts) + Lb[leaf]
        z = (pts - x) / t
        keep = np.hypot(z[:, 0], z[:, 1]) <= 1.0
        got.append(z[keep])
        n_got += int(keep.sum())
        drawn += batch
    # x itself lies on the attractor and maps to the origin
    z = np.vstack([[0.0, 0.0], np.concatenate(got)])[:samples]
    partial = len(z) < samples
    if rotate:
        z = z @ screen.rotation.T
    z = np.clip(z, -1.0, 1.0)
    return SceneryCloud(z, frame="screen" if rotate else "zoom", partial=partial, screen=screen)


# -- approximative sceneries -------------------------------------------------

@dataclass
class ApproxScenery:
    rectangles: np.ndarray       # (k, 4): center x, center y, half-width, half-height
    words: list
    K: int
    screen: Screen
    sampled_screen: PointCloud | None = None
    epsilon: float | None = None

    @property
    def heights(self) -> np.ndarray:
        return 2 * self.rectangles[:, 3]

    @property
    def max_height(self) -> float:
        return float(self.heights.max()) if len(self.rectangles) else 0.0

    def boxes(self) -> np.ndarray:
        """(k, 2, 2) lower-left / upper-right corners."""
        r = self.rectangles
        lo = r[:, :2] - r[:, 2:]
        hi = r[:, :2] + r[:, 2:]
        return np.stack([lo, hi], axis=1)


def construction_rectangles(ifs: IFSSystem, screen: Screen, words, A, b) -> np.ndarray:
    """R_{i|t}(j) in rotated screen coordinates as (cx, cy, hw, hh) rows."""
    polys = np.einsum("nij,vj->nvi", A, ifs.hull) + b[:, None, :]
    s = screen.to_screen(polys.reshape(-1, 2)).reshape(polys.shape)
    lo = s.min(axis=1)
    hi = s.max(axis=1)
    return np.hstack([(lo + hi) / 2, (hi - lo) / 2])


def approx_scenery(ifs: IFSSystem, address: Address, t: float, K: int,
                   samples: int = 2000, seed: int = 0, stream: int = 0,
                   screen: Screen | None = None, with_samples: bool = True,
                   meet_depth: int = 12) -> ApproxScenery:
    """Level-(n+K) construction rectangles whose cylinder meets B(x, t).

    A cylinder counts when the two-sided test says it meets the ball or
    cannot rule it out, so the result over-approximates.
    """
    if K < 0:
        raise DomainError("K must be >= 0")
    screen = screen or construction_level(ifs, address, t)
    x = screen.center
    f = compose_along(ifs, screen.word)
    hull = ifs.hull
    kept_w, kept_A, kept_b = [], [], []
    stack = [((), f.matrix, f.translation)]
    while stack:
        w, A0, b0 = stack.pop()
        poly = hull @ A0.T + b0
        if geometry.point_polys_distance(x, poly[None])[0] > t:
            continue
        if len(w) == K:
            if ball_meets(ifs, A0, b0, x, t, max_depth=meet_depth, budget=[4000]) is not False:
                kept_w.append(w)
                kept_A.append(A0)
                kept_b.append(b0)
            continue
        for k in range(ifs.m, 0, -1):
            stack.append((w + (k,), A0 @ ifs.A[k - 1], A0 @ ifs.b[k - 1] + b0))
    if kept_w:
        rects = construction_rectangles(ifs, screen, kept_w, np.array(kept_A), np.array(kept_b))
    else:
        rects = np.zeros((0, 4))
    cloud = None
    if with_samples:
        cloud = scenery(ifs, address, t, samples=samples, rotate=True, seed=seed,
                        stream=stream, screen=screen)
    try:
        eps = epsilon_bound(ifs, K)
    except DomainError:
        eps = None
    return ApproxScenery(rects, kept_w, K, screen, cloud, eps)


# -- patterns -------------------------------------------------------------------

@dataclass
class Pattern:
    is_pattern: bool
    intervals: list
    epsilon_used: float
    witness: dict | None = None
    slack: float = 0.05


def _merge(iv: np.ndarray):
    """Merge closed intervals (rows lo, hi); returns merged list and group ids."""
    order = np.argsort(iv[:, 0], kind="stable")
    groups = np.empty(len(iv), dtype=int)
    merged = []
    for k in order:
        lo, hi = iv[k]
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
        groups[k] = len(merged) - 1
    return merged, groups


def _x_cover_gap(segs: np.ndarray, a: float, b: float, tol: float = 0.0):
    """First point of [a, b] not covered by the union of segs, or None."""
    if a >= b:
        return None
    segs = segs[np.argsort(segs[:, 0], kind="stable")]
    reach = a
    for lo, hi in segs:
        if lo > reach + tol:
            return reach, min(lo, b)
        reach = max(reach, hi)
        if reach >= b:
            return None
    return (reach, b) if reach < b else None


def detect_pattern(geometry_in, epsilon: float, span_slack: float = 0.05) -> Pattern:
    """Decide whether the geometry is an epsilon-pattern of the unit ball.

    Rectangles (an ApproxScenery, or an (k, 4) array of cx, cy, hw, hh) are
    clipped to the ball; point clouds are bucketed in height at resolution
    ``span_slack``.  Each merged height interval must be shorter than
    ``epsilon`` and its pieces must span the chord at its mid-height up to
    ``span_slack`` at both ends.
    """
    if isinstance(geometry_in, ApproxScenery):
        geometry_in = geometry_in.rectangles
    if isinstance(geometry_in, PointCloud):
        return _pattern_cloud(np.asarray(geometry_in.points), epsilon, span_slack)
    rects = np.asarray(geometry_in, dtype=float).reshape(-1, 4)
    lo = rects[:, :2] - rects[:, 2:]
    hi = rects[:, :2] + rects[:, 2:]
    # clip each rectangle to the ball: y-range and the x-range it can reach
    ylo = np.maximum(lo[:, 1], -1.0)
    yhi = np.minimum(hi[:, 1], 1.0)
    ynear = np.where((ylo <= 0) & (yhi >= 0), 0.0, np.minimum(np.abs(ylo), np.abs(yhi)))
    half = np.sqrt(np.maximum(0.0, 1.0 - ynear ** 2))
    xlo = np.maximum(lo[:, 0], -half)
    xhi = np.minimum(hi[:, 0], half)
    inside = (ylo <= yhi) & (xlo <= xhi) & (np.hypot(np.clip(0, xlo, xhi), ynear) <= 1.0)
    ylo, yhi, xlo, xhi = ylo[inside], yhi[inside], xlo[inside], xhi[inside]
    if len(ylo) == 0:
        return Pattern(True, [], epsilon, None, span_slack)
    merged, groups = _merge(np.column_stack([ylo, yhi]))
    intervals = [(float(a), float(b)) for a, b in merged]
    # spanning is checked first: a short piece is the more telling witness
    for g, (a, b) in enumerate(intervals):
        ym = (a + b) / 2
        c = math.sqrt(max(0.0, 1.0 - ym * ym))
        gap = _x_cover_gap(np.column_stack([xlo[groups == g], xhi[groups == g]]),
                           -c + span_slack, c - span_slack)
        if gap is not None:
            return Pattern(False, intervals, epsilon,
                           {"reason": "does not span the screen", "interval": (a, b),
                            "uncovered": (float(gap[0]), float(gap[1])), "height": ym},
                           span_slack)
    for a, b in intervals:
        if b - a >= epsilon:
            return Pattern(False, intervals, epsilon,
                           {"reason": "interval too long", "interval": (a, b), "length": b - a},
                           span_slack)
    return Pattern(True, intervals, epsilon, None, span_slack)


def _pattern_cloud(pts: np.ndarray, epsilon: float, slack: float) -> Pattern:
    if len(pts) == 0:
        return Pattern(True, [], epsilon, None, slack)
    bins = np.floor(pts[:, 1] / slack).astype(np.int64)
    ub = np.unique(bins)
    runs = np.split(ub, np.nonzero(np.diff(ub) > 1)[0] + 1)
    intervals = []
    for run in runs:
        sel = np.isin(bins, run)
        ys = pts[sel, 1]
        intervals.append((float(ys.min()), float(ys.max()), sel))
    out = [(a, b) for a, b, _ in intervals]
    for a, b, sel in intervals:
        ym = (a + b) / 2
        c = math.sqrt(max(0.0, 1.0 - ym * ym))
        xs = np.sort(pts[sel, 0])
        segs = np.column_stack([xs - slack, xs + slack])
        gap = _x_cover_gap(segs, -c + slack, c - slack)
        if gap is not None:
            return Pattern(False, out, epsilon,
                           {"reason": "does not span the screen", "interval": (a, b),
                            "uncovered": (float(gap[0]), float(gap[1])), "height": ym}, slack)
    for a, b in out:
        if b - a >= epsilon:
            return Pattern(False, out, epsilon,
                           {"reason": "interval too long", "interval": (a, b), "length": b - a}, slack)
    return Pattern(True, out, epsilon, None, slack)
