"""Planar affine maps, compositions along words, attractor covers and sampling.

Covers of a cylinder E_w are images f_w(P) of one fixed convex polygon P that
contains the attractor.  P comes from iterating the hull operator
X -> conv(f_1(X) u ... u f_m(X)) starting at a certified bounding box, so every
cover is an outer bound.  Points f_w(q) with q a fixed point of a short word are
exact attractor points and give inner evidence.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from tangent_lens import geometry
from tangent_lens.linalg2 import frame_of
from tangent_lens.symbolic import (
    BernoulliWeights,
    DomainError,
    Word,
    check_word,
    make_rng,
    sample_words,
    words_of_length,
)
from tangent_lens._parallel import parallel_map

CHUNK = 4096


class ContractivityError(DomainError):
    pass


@dataclass(frozen=True, eq=False)
class AffineMap2:
    """x -> matrix @ x + translation."""

    matrix: np.ndarray
    translation: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float).reshape(2, 2)
        b = np.array(self.translation, dtype=float).reshape(2)
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise DomainError("non-finite map entries")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "translation", b)
        if self.check:
            if abs(np.linalg.det(a)) <= 1e-14:
                raise DomainError("singular matrix")
            if np.linalg.svd(a, compute_uv=False)[0] >= 1 - 1e-12:
                raise ContractivityError("not contractive: operator norm >= 1")

    @classmethod
    def identity(cls) -> "AffineMap2":
        return cls(np.eye(2), np.zeros(2), check=False)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T + self.translation

    def compose(self, other: "AffineMap2") -> "AffineMap2":
        """self o other."""
        return AffineMap2(self.matrix @ other.matrix,
                          self.matrix @ other.translation + self.translation, check=False)

    def fixed_point(self) -> np.ndarray:
        return np.linalg.solve(np.eye(2) - self.matrix, self.translation)

    def __eq__(self, other):
        if not isinstance(other, AffineMap2):
            return NotImplemented
        return (np.array_equal(self.matrix, other.matrix)
                and np.array_equal(self.translation, other.translation))

    __hash__ = None


@dataclass
class PointCloud:
    points: np.ndarray
    frame: str = "scene"
    partial: bool = False

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class Address:
    """An eventually periodic infinite word ``prefix . tail tail tail ...``."""

    prefix: Word
    tail: int

    def letters(self, n: int) -> Word:
        if n <= len(self.prefix):
            return self.prefix[:n]
        return self.prefix + (self.tail,) * (n - len(self.prefix))

    def point(self, ifs: "IFSSystem") -> np.ndarray:
        return canonical_project(ifs, self.prefix, self.tail)[0]


@dataclass(frozen=True)
class SeparationResult:
    status: str  # "certified" | "violated" | "undecided"
    delta_lb: float | None = None
    witness: tuple | None = None
    depth: int = 1


class IFSSystem:
    """A finite family of contractive invertible planar affine maps.

    Derived constants (covers, separation bound, L) are computed lazily and
    cached; the object is otherwise immutable.
    """

    HULL_ITERATIONS = 200
    BBOX_ITERATIONS = 60
    BBOX_MAX_ITERATIONS = 2000
    MAX_HULL_VERTICES = 512

    def __init__(self, maps: Sequence[AffineMap2], name: str = ""):
        maps = tuple(maps)
        if len(maps) < 2:
            raise DomainError("an IFS needs at least two maps")
        self.maps = maps
        self.name = name
        self.A = np.stack([f.matrix for f in maps])
        self.b = np.stack([f.translation for f in maps])
        self.A.setflags(write=False)
        self.b.setflags(write=False)
        sv = np.linalg.svd(self.A, compute_uv=False)
        self.alpha_hi = float(sv[:, 0].max())
        self.alpha_lo = float(sv[:, 1].min())
        self.log_abs_det = np.log(np.abs(np.linalg.det(self.A)))

    @property
    def m(self) -> int:
        return len(self.maps)

    def __repr__(self):
        return f"IFSSystem(name={self.name!r}, m={self.m})"

    @property
    def is_diagonal(self) -> bool:
        off = np.abs(self.A[:, 0, 1]) + np.abs(self.A[:, 1, 0])
        return bool((off <= 1e-12).all())

    # -- outer bounds -----------------------------------------------------
    @cached_property
    def bbox(self) -> np.ndarray:
        """[[xmin, ymin], [xmax, ymax]] by interval iteration of the maps."""
        norms = np.linalg.svd(self.A, compute_uv=False)[:, 0]
        r0 = float((np.linalg.norm(self.b, axis=1) / (1 - norms)).max())
        c = np.zeros(2)
        hw = np.full(2, r0)
        # at least BBOX_ITERATIONS steps, then on until the box stops moving
        for k in range(self.BBOX_MAX_ITERATIONS):
            cs = np.einsum("kij,j->ki", self.A, c) + self.b
            hws = np.abs(self.A) @ hw
            lo = (cs - hws).min(axis=0)
            hi = (cs + hws).max(axis=0)
            c2, hw2 = (lo + hi) / 2, (hi - lo) / 2
            done = np.array_equal(c2, c) and np.array_equal(hw2, hw)
            c, hw = c2, hw2
            if done and k >= self.BBOX_ITERATIONS:
                break
        hw = hw + 1e-14 * (hw.max() + np.abs(c).max())  # absorb rounding
        return np.array([c - hw, c + hw])

    @cached_property
    def hull(self) -> np.ndarray:
        """Convex polygon containing the attractor (converged hull iteration)."""
        lo, hi = self.bbox
        v = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
        diam = float(np.hypot(*(hi - lo))) or 1.0
        tol = 1e-14 * diam
        for _ in range(self.HULL_ITERATIONS):
            imgs = (np.einsum("kij,vj->kvi", self.A, v) + self.b[:, None, :]).reshape(-1, 2)
            new = _simplify(geometry.convex_hull(imgs), tol)
            if len(new) > self.MAX_HULL_VERTICES:
                new = geometry.circumscribe(new, self.MAX_HULL_VERTICES)
            if new.shape == v.shape and np.abs(new - v).max() <= tol:
                v = new
                break
            v = new
        return v

    @cached_property
    def hull_bbox(self) -> np.ndarray:
        return np.array([self.hull.min(axis=0), self.hull.max(axis=0)])

    @cached_property
    def diameter(self) -> float:
        h = self.hull
        d = h[:, None, :] - h[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    @cached_property
    def exact_points(self) -> np.ndarray:
        """Fixed points of all f_w with |w| <= 2; each lies in the attractor."""
        pts = []
        for k in (1, 2):
            for w in words_of_length(self.m, k):
                pts.append(compose_along(self, w).fixed_point())
        return np.array(pts)

    @cached_property
    def anchor(self) -> np.ndarray:
        return self.maps[0].fixed_point()

    # -- separation and L -------------------------------------------------
    @cached_property
    def separation(self) -> SeparationResult:
        res = None
        for depth in (1, 2, 3):
            res = strong_separation(self, depth)
            if res.status != "undecided":
                return res
        return res

    @property
    def delta_lb(self) -> float | None:
        s = self.separation
        return s.delta_lb if s.status == "certified" else None

    @cached_property
    def L_est(self) -> int:
        return estimate_L(self)


def _simplify(v: np.ndarray, tol: float) -> np.ndarray:
    """Drop hull vertices within ``tol`` of the chord through their neighbours."""
    changed = True
    while changed and len(v) > 3:
        changed = False
        prev = np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0)
        d = geometry._seg_dist(v, prev, nxt)
        i = int(np.argmin(d))
        if d[i] <= tol:
            v = np.delete(v, i, axis=0)
            changed = True
    return v


# -- compositions ----------------------------------------------------------

def compose_along(ifs: IFSSystem, word: Sequence[int]) -> AffineMap2:
    """f_w = f_{w1} o ... o f_{wn}; the identity for the empty word."""
    word = check_word(word, ifs.m)
    a = np.eye(2)
    b = np.zeros(2)
    for letter in word:
        b = a @ ifs.b[letter - 1] + b
        a = a @ ifs.A[letter - 1]
    return AffineMap2(a, b, check=False)


def canonical_project(ifs: IFSSystem, prefix: Sequence[int], tail: int):
    """pi(prefix . tail^inf) and its error radius (0: the value is exact)."""
    prefix = check_word(prefix, ifs.m)
    check_word((tail,), ifs.m)
    fix = ifs.maps[tail - 1].fixed_point()
    if not np.isfinite(fix).all():
        raise ArithmeticError("ill-conditioned fixed point")
    return compose_along(ifs, prefix)(fix), 0.0


def apply_words(ifs: IFSSystem, words: np.ndarray, point) -> np.ndarray:
    """f_w(point) for every row w of a (n, k) letter array."""
    n, k = words.shape
    p = np.broadcast_to(np.asarray(point, dtype=float), (n, 2)).copy()
    for j in range(k - 1, -1, -1):
        idx = words[:, j] - 1
        p = np.einsum("nij,nj->ni", ifs.A[idx], p) + ifs.b[idx]
    return p


def attractor_sample(ifs: IFSSystem, depth: int, count: int, seed: int = 0,
                     stream: int = 0, weights: BernoulliWeights | None = None,
                     threads: int = 1) -> PointCloud:
    """``count`` points f_w(anchor) for random words w of length ``depth``.

    Work is split in fixed chunks, each with its own RNG stream, so the output
    does not depend on ``threads``.
    """
    if depth < 1 or count < 1:
        raise DomainError("depth and count must be positive")
    weights = weights or BernoulliWeights.uniform(ifs.m)
    sizes = [min(CHUNK, count - s) for s in range(0, count, CHUNK)]

    def work(job):
        c, size = job
        rng = make_rng(seed, stream, c)
        return apply_words(ifs, sample_words(weights, depth, size, rng), ifs.anchor)

    parts = parallel_map(work, list(enumerate(sizes)), threads)
    return PointCloud(np.concatenate(parts), frame="scene")


# -- covers -------------------------------------------------------------------

@dataclass
class CylinderCover:
    word: Word
    frame: np.ndarray          # rows are the frame axes
    lo: np.ndarray             # rectangle in frame coordinates
    hi: np.ndarray
    subrects: list = field(default_factory=list)  # (word, lo, hi)

    @property
    def h(self) -> float:
        return float(self.hi[0] - self.lo[0])

    @property
    def v(self) -> float:
        return float(self.hi[1] - self.lo[1])


def singular_basis(ifs: IFSSystem, word: Sequence[int]) -> np.ndarray:
    """Orthogonal matrix taking theta1(word), theta2(word) to e1, e2."""
    if len(word) == 0:
        return np.eye(2)
    _, t1, t2, _, _, _ = frame_of(compose_along(ifs, word).matrix)
    return np.vstack([t1, t2])


def rect_in_frame(ifs: IFSSystem, f: AffineMap2, frame: np.ndarray):
    pts = f(ifs.hull) @ frame.T
    return pts.min(axis=0), pts.max(axis=0)


def cylinder_cover(ifs: IFSSystem, word: Sequence[int], depth: int = 0,
                   frame: str | np.ndarray = "singular") -> CylinderCover:
    """Rectangle containing E_word with sides along the chosen frame.

    ``frame`` is "singular" (theta1, theta2 of the word), "axis", or an
    explicit orthogonal matrix.  ``depth`` more levels give sub-rectangles.
    """
    word = check_word(word, ifs.m)
    if isinstance(frame, str):
        frame = singular_basis(ifs, word) if frame == "singular" else np.eye(2)
    frame = np.asarray(frame, dtype=float)
    f = compose_along(ifs, word)
    lo, hi = rect_in_frame(ifs, f, frame)
    subs = []
    for j in words_of_length(ifs.m, depth) if depth > 0 else ():
        g = f.compose(compose_along(ifs, j))
        slo, shi = rect_in_frame(ifs, g, frame)
        subs.append((word + j, slo, shi))
    return CylinderCover(word, frame, lo, hi, subs)


def level_maps(ifs: IFSSystem, prefix: Sequence[int], depth: int):
    """(words, A, b) for all extensions prefix.u, |u| = depth, lexicographic."""
    f = compose_along(ifs, prefix)
    words = [tuple(prefix)]
    A = f.matrix[None]
    b = f.translation[None]
    for _ in range(depth):
        A2 = np.einsum("nij,kjl->nkil", A, ifs.A).reshape(-1, 2, 2)
        b2 = (np.einsum("nij,kj->nki", A, ifs.b) + b[:, None, :]).reshape(-1, 2)
        words = [w + (a,) for w in words for a in range(1, ifs.m + 1)]
        A, b = A2, b2
    return words, A, b


def cover_polys(ifs: IFSSystem, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("nij,vj->nvi", A, ifs.hull) + b[:, None, :]


def strong_separation(ifs: IFSSystem, depth: int = 1) -> SeparationResult:
    """Two-sided separation test on covers of the level-``depth`` cylinders."""
    if depth < 1:
        raise DomainError("depth must be >= 1")
    words, A, b = level_maps(ifs, (), depth)
    polys = cover_polys(ifs, A, b)
    first = np.array([w[0] for w in words])
    lo = polys.min(axis=1)
    hi = polys.max(axis=1)
    ii, jj = np.nonzero(first[:, None] < first[None, :])
    gap = np.maximum(0, np.maximum(lo[ii] - hi[jj], lo[jj] - hi[ii]))
    box_d = np.hypot(gap[:, 0], gap[:, 1])
    order = np.argsort(box_d, kind="stable")
    best = math.inf
    best_pair = None
    overlapping = []
    for k in order:
        if box_d[k] > best:
            break
        i, j = ii[k], jj[k]
        d = geometry.polygon_distance(polys[i], polys[j])
        if d == 0.0:
            overlapping.append((i, j))
        if d < best:
            best, best_pair = d, (words[i], words[j])
    if best > 0:
        return SeparationResult("certified", best, best_pair, depth)
    q = ifs.exact_points
    scale = ifs.alpha_hi ** depth * max(ifs.diameter, 1e-300)
    for i, j in overlapping:
        pi = q @ A[i].T + b[i]
        pj = q @ A[j].T + b[j]
        dmin = np.sqrt(((pi[:, None, :] - pj[None, :, :]) ** 2).sum(-1)).min()
        if dmin <= 1e-12 * max(scale, 1.0) or dmin <= 1e-12:
            return SeparationResult("violated", None, (words[i], words[j]), depth)
    return SeparationResult("undecided", None, None, depth)


def ball_meets(ifs: IFSSystem, A: np.ndarray, b: np.ndarray, x, t: float,
               max_depth: int = 24, budget: list | None = None) -> bool | None:
    """Does B(x, t) meet f(E) for f = (A, b)?  None when undecided.

    Outer covers f(P) refute, exact points f(q) confirm; otherwise refine.
    """
    x = np.asarray(x, dtype=float)
    if budget is None:
        budget = [20000]
    stack = [(A, b, 0)]
    undecided = False
    while stack:
        A0, b0, d = stack.pop()
        budget[0] -= 1
        poly = ifs.hull @ A0.T + b0
        if geometry.point_polys_distance(x, poly[None])[0] > t:
            continue
        pts = ifs.exact_points @ A0.T + b0
        if (np.hypot(*(pts - x).T) <= t).any():
            return True
        if d >= max_depth or budget[0] <= 0:
            undecided = True
            continue
        for k in range(ifs.m - 1, -1, -1):
            stack.append((A0 @ ifs.A[k], A0 @ ifs.b[k] + b0, d + 1))
    return None if undecided else False


def estimate_L(ifs: IFSSystem, seed: int = 0) -> int:
    """Smallest integer L with E in B(c, L), diam E <= L and a ball of radius
    1/L inside the sampled convex hull (grid search at 1/64 of the diameter)."""
    cloud = attractor_sample(ifs, 30, 20000, seed=seed, stream=0xA11).points
    c = cloud.mean(axis=0)
    R = float(np.hypot(*(cloud - c).T).max())
    hull = geometry.convex_hull(cloud)
    if len(hull) < 3:
        raise DomainError("attractor appears to lie in a line")
    lo, hi = hull.min(axis=0), hull.max(axis=0)
    diam = float(np.hypot(*(hi - lo)))
    step = diam / 64
    gx = np.arange(lo[0], hi[0] + step / 2, step)
    gy = np.arange(lo[1], hi[1] + step / 2, step)
    grid = np.array(np.meshgrid(gx, gy)).reshape(2, -1).T
    grid = grid[geometry.inside_convex(grid, hull)]
    if len(grid) == 0:
        raise DomainError("attractor hull too thin for the inscribed-ball search")
    a = hull
    nb = np.roll(hull, -1, axis=0)
    d = geometry._seg_dist(grid[:, None, :], a[None], nb[None]).min(axis=1)
    r_in = float(d.max())
    if r_in <= 0:
        raise DomainError("attractor appears to lie in a line")
    return max(1, math.ceil(R), math.ceil(1.0 / r_in), math.ceil(_diam(hull)))


def _diam(v: np.ndarray) -> float:
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def snap_to_attractor(ifs: IFSSystem, point, depth: int = 40):
    """Nearest point pi(w . 1^inf) with |w| = depth, by best-first search.

    Returns (Address, distance).  Ties go to the lexicographically first word.
    """
    x = np.asarray(point, dtype=float)
    hull = ifs.hull
    anchor = ifs.anchor
    best_d = float(np.hypot(*(anchor - x)))
    best_w: Word = ()
    heap = [(0.0, (), np.eye(2), np.zeros(2))]
    while heap:
        lb, w, A, b = heapq.heappop(heap)
        if lb > best_d:
            break
        if len(w) == depth:
            continue
        for k in range(1, ifs.m + 1):
            A2 = A @ ifs.A[k - 1]
            b2 = A @ ifs.b[k - 1] + b
            cand = float(np.hypot(*(A2 @ anchor + b2 - x)))
            w2 = w + (k,)
            if cand < best_d or (cand == best_d and w2 + (1,) * (depth - len(w2)) < best_w):
                best_d, best_w = cand, w2
            d = float(geometry.point_polys_distance(x, (hull @ A2.T + b2)[None])[0])
            if d <= best_d:
                heapq.heappush(heap, (d, w2, A2, b2))
    best_w = best_w + (1,) * (depth - len(best_w))
    return Address(best_w, 1), best_d
