"""Checkers for the hypotheses of the tangent dichotomy and related sufficient
conditions.  Every checker returns a ConditionReport; "pass" and "fail" carry
evidence, "undecided" carries the exhausted budget."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from tangent_lens import geometry
from tangent_lens.affine import IFSSystem, attractor_sample, level_maps
from tangent_lens.linalg2 import batched_s1
from tangent_lens.spectral import carpet_lyapunov, singular_frame
from tangent_lens.symbolic import BernoulliWeights, DomainError, words_of_length

PASS, FAIL, UNDECIDED = "pass", "fail", "undecided"


@dataclass
class ConditionReport:
    name: str
    verdict: str
    witness: object = None
    parameters: dict = field(default_factory=dict)
    label: str = ""
    details: list = field(default_factory=list)  # sub-reports

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "witness": _plain(self.witness),
            "parameters": _plain(self.parameters),
            "label": self.label,
            "details": [d.as_dict() for d in self.details],
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Fraction):
        return float(obj)
    return obj


# -- separation / line -----------------------------------------------------------

def check_separation(ifs: IFSSystem) -> ConditionReport:
    s = ifs.separation
    verdict = {"certified": PASS, "violated": FAIL}.get(s.status, UNDECIDED)
    wit = {"delta_lb": s.delta_lb, "closest_pair": s.witness} if verdict == PASS else \
        {"pair": s.witness}
    return ConditionReport("separation", verdict, wit, {"depth": s.depth})


def not_on_a_line(ifs: IFSSystem, seed: int = 0) -> ConditionReport:
    """Smallest principal width of a depth-30 sample against delta_lb / 4."""
    pts = attractor_sample(ifs, 30, 20000, seed=seed, stream=0x11E).points
    c = pts - pts.mean(axis=0)
    w, v = np.linalg.eigh(c.T @ c)
    minor = v[:, 0]
    spread = float(np.ptp(c @ minor))
    d = ifs.delta_lb
    if d is None:
        return ConditionReport("not_on_a_line", UNDECIDED, {"spread": spread},
                               {"reason": "no separation certificate"})
    verdict = PASS if spread > d / 4 else FAIL
    return ConditionReport("not_on_a_line", verdict,
                           {"spread": spread, "direction": minor, "threshold": d / 4},
                           {"samples": 20000, "depth": 30})


# -- projections ---------------------------------------------------------------------

def _union_gap(iv: np.ndarray):
    """First gap of a union of closed intervals, or None if it is one interval."""
    iv = iv[np.argsort(iv[:, 0], kind="stable")]
    reach = iv[0, 1]
    for lo, hi in iv[1:]:
        if lo > reach:
            return float(reach), float(lo)
        reach = max(reach, hi)
    return None


def check_projection_sufficient(ifs: IFSSystem, n_dirs: int = 360, depth: int = 0,
                                weights: BernoulliWeights | None = None) -> ConditionReport:
    """Is the projection of the union of f_i(X) an interval in every direction?

    X is the convex hull of the attractor (refined through ``depth`` levels).
    Diagonal systems only need the axis that the Lyapunov sums single out.
    """
    if n_dirs < 1:
        raise DomainError("n_dirs must be >= 1")
    words, A, b = level_maps(ifs, (), depth)
    X = geometry.convex_hull(np.concatenate([ifs.hull @ a.T + c for a, c in zip(A, b)]))
    polys = np.einsum("kij,vj->kvi", ifs.A, X) + ifs.b[:, None, :]
    params = {"depth": depth}
    if ifs.is_diagonal:
        lam_h, lam_v = carpet_lyapunov(ifs, weights or BernoulliWeights.uniform(ifs.m))
        if lam_v > lam_h:
            dirs = np.array([[1.0, 0.0]])
        elif lam_h > lam_v:
            dirs = np.array([[0.0, 1.0]])
        else:
            dirs = np.eye(2)
        params["shortcut"] = "carpet axis"
    else:
        ang = np.arange(n_dirs) * (math.pi / n_dirs)
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
        params["n_dirs"] = n_dirs
    params["directions"] = len(dirs)
    for d in dirs:
        proj = polys @ d
        gap = _union_gap(np.column_stack([proj.min(axis=1), proj.max(axis=1)]))
        if gap is not None:
            return ConditionReport("projection", FAIL, {"direction": d, "gap": gap}, params,
                                   "sufficient condition")
    return ConditionReport("projection", PASS, {"directions_checked": len(dirs)}, params,
                           "sufficient condition")


# -- pinching / twisting ------------------------------------------------------------

def _log_gaps(A: np.ndarray) -> np.ndarray:
    """log alpha_1 - log alpha_2 for a stack of matrices."""
    s = np.abs(A).max(axis=(1, 2))
    An = A / s[:, None, None]
    return 2 * np.log(batched_s1(An)) - np.log(np.abs(np.linalg.det(An)))


def check_pinching(ifs: IFSSystem, C: float = 1e6, max_len: int = 40,
                   exhaustive_len: int = 6, beam: int = 64,
                   margin: float = 1e-9) -> ConditionReport:
    """Look for a word with alpha_1 > C alpha_2.

    Exhaustive up to ``exhaustive_len`` (capped at 2e5 words per length), then
    a beam over the best log-ratios.  Ratios within ``margin`` (relative, in
    log space) of C are not accepted, so float noise cannot pass equality.
    The shortest witness wins, lexicographically smallest among equals.
    """
    if not C > 1:
        raise DomainError("C must exceed 1")
    target = math.log(C) * (1 + margin) + margin
    params = {"C": C, "max_len": max_len, "exhaustive_len": exhaustive_len, "beam": beam}

    def report(word, gap):
        return ConditionReport("pinching", PASS, {"word": word, "log_ratio": gap,
                                                  "ratio": math.exp(gap)}, params)

    k = 1
    while k <= min(exhaustive_len, max_len) and ifs.m ** k <= 200_000:
        words, A, _ = level_maps(ifs, (), k)
        gaps = _log_gaps(A)
        hits = np.nonzero(gaps > target)[0]
        if len(hits):
            i = hits[0]  # words are lexicographic
            return report(words[i], float(gaps[i]))
        k += 1
    frontier = [(w,) for w in range(1, ifs.m + 1)]
    for length in range(1, max_len + 1):
        cand = [w + (a,) for w in frontier for a in range(1, ifs.m + 1)] if length > 1 else frontier
        A = np.array([_prod(ifs, w) for w in cand])
        gaps = _log_gaps(A)
        if length >= k:
            hits = [i for i in np.nonzero(gaps > target)[0]]
            if hits:
                i = min(hits, key=lambda j: cand[j])
                return report(cand[i], float(gaps[i]))
        order = np.lexsort((np.arange(len(cand)), -gaps))[:beam]
        frontier = [cand[i] for i in sorted(order)]
    return ConditionReport("pinching", FAIL, {"best_log_ratio": float(gaps.max()),
                                              "searched_to": max_len}, params)


def _prod(ifs: IFSSystem, word) -> np.ndarray:
    M = np.eye(2)
    for a in word:
        M = M @ ifs.A[a - 1]
        M = M / np.abs(M).max()
    return M


def check_twisting(ifs: IFSSystem, v=(1.0, 0.0), targets=((1.0, 0.0), (0.0, 1.0)),
                   max_len: int = 6, threshold: float = 1e-9) -> ConditionReport:
    """Shortest (then lexicographically first) word w with A_w v off every target."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise DomainError("v must be nonzero")
    T = np.asarray(targets, dtype=float).reshape(-1, 2)
    params = {"v": v, "targets": T, "max_len": max_len, "threshold": threshold}
    if len(T) == 0:
        return ConditionReport("twisting", PASS, {"word": ()}, params, "vacuous")
    T = T / np.hypot(T[:, 0], T[:, 1])[:, None]
    for k in range(1, max_len + 1):
        if ifs.m ** k > 2_000_000:
            break
        words, A, _ = level_maps(ifs, (), k)
        img = A @ v
        img = img / np.hypot(img[:, 0], img[:, 1])[:, None]
        cross = np.abs(img[:, None, 0] * T[None, :, 1] - img[:, None, 1] * T[None, :, 0])
        ang = np.arcsin(np.clip(cross, 0.0, 1.0))
        ok = np.nonzero((ang > threshold).all(axis=1))[0]
        if len(ok):
            i = ok[0]
            return ConditionReport("twisting", PASS,
                                   {"word": words[i], "image": img[i],
                                    "min_angle": float(ang[i].min())}, params)
    return ConditionReport("twisting", FAIL, {"searched_to": max_len}, params)


# -- carpets ---------------------------------------------------------------------------

def _carpet_rects(ifs: IFSSystem):
    if not ifs.is_diagonal:
        raise DomainError("not a diagonal carpet")
    def q(v):
        # shortest decimal repr: recovers the literal a config was written with
        return Fraction(repr(float(v)))

    rects = []
    for A, b in zip(ifs.A, ifs.b):
        xs = sorted([q(b[0]), q(b[0]) + q(A[0, 0])])
        ys = sorted([q(b[1]), q(b[1]) + q(A[1, 1])])
        if xs[0] < 0 or ys[0] < 0 or xs[1] > 1 or ys[1] > 1:
            raise DomainError("maps do not send the unit square into itself")
        rects.append((xs, ys))
    return rects


def _cover_sweep(intervals, need: int = 2):
    """First point of [0, 1] covered by fewer than ``need`` closed intervals."""
    pts = sorted({Fraction(0), Fraction(1)} | {e for iv in intervals for e in iv
                                               if 0 <= e <= 1})
    def count(c):
        return sum(1 for lo, hi in intervals if lo <= c <= hi)
    for a, b in zip(pts, pts[1:]):
        if count(a) < need:
            return a
        mid = (a + b) / 2
        if count(mid) < need:
            return mid
    if count(pts[-1]) < need:
        return pts[-1]
    return None


def check_carpet(ifs: IFSSystem, weights: BernoulliWeights) -> ConditionReport:
    """The three carpet conditions: disjoint level-1 rectangles, every vertical
    line meets at least two of them, and the horizontal Lyapunov sum is the
    smaller one."""
    rects = _carpet_rects(ifs)
    subs = []
    # (1) disjoint closed rectangles
    clash = None
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            (x0, y0), (x1, y1) = rects[i], rects[j]
            if x0[0] <= x1[1] and x1[0] <= x0[1] and y0[0] <= y1[1] and y1[0] <= y0[1]:
                clash = (i + 1, j + 1)
                break
        if clash:
            break
    subs.append(ConditionReport("carpet_disjoint", FAIL if clash else PASS,
                                {"pair": clash} if clash else {"rectangles": len(rects)}))
    # (2) double cover of [0, 1] by x-extents
    c = _cover_sweep([r[0] for r in rects], 2)
    if c is None:
        subs.append(ConditionReport("carpet_double_cover", PASS, {"sweep": "complete"}))
    else:
        lo = max([e for r in rects for e in r[0] if e <= c] + [Fraction(0)])
        hi = min([e for r in rects for e in r[0] if e > c] + [Fraction(1)])
        subs.append(ConditionReport("carpet_double_cover", FAIL,
                                    {"c": float(c), "band": (float(lo), float(hi))}))
    # (3) Lyapunov sums
    lam_h, lam_v = carpet_lyapunov(ifs, weights)
    subs.append(ConditionReport("carpet_lyapunov", PASS if lam_h < lam_v else FAIL,
                                {"horizontal": lam_h, "vertical": lam_v}))
    verdict = PASS if all(s.passed for s in subs) else FAIL
    return ConditionReport("carpet", verdict, {s.name: s.verdict for s in subs},
                           {"weights": list(weights.as_array())}, details=subs)


def check_lyapunov_distinct(ifs: IFSSystem, weights: BernoulliWeights) -> ConditionReport:
    """Exact sums for carpets; otherwise pinching plus twisting."""
    if ifs.is_diagonal:
        lam_h, lam_v = carpet_lyapunov(ifs, weights)
        verdict = PASS if lam_h != lam_v else FAIL
        return ConditionReport("lyapunov_distinct", verdict,
                               {"horizontal": lam_h, "vertical": lam_v}, {}, "carpet sums")
    p = check_pinching(ifs)
    t = check_twisting(ifs)
    verdict = PASS if p.passed and t.passed else UNDECIDED
    return ConditionReport("lyapunov_distinct", verdict, {"pinching": p.verdict,
                                                          "twisting": t.verdict},
                           {}, "pinching and twisting", details=[p, t])


# -- line condition ------------------------------------------------------------------

def check_line_condition(ifs: IFSSystem, region, N: int = 1, depth: int = 4,
                         tol: float = 1e-12) -> ConditionReport:
    """Finite-depth heuristic for the line condition inside ``region``.

    For every word w with N < |w| <= depth whose cover lies in the region,
    with u = w minus its last N letters, every line in direction theta_2(u)
    through the cover of E_w must cross the cover of some E_{u a} with a
    different from the letter following u.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if depth < N + 1:
        raise DomainError("depth must be at least N + 1")
    (x0, y0), (x1, y1) = np.asarray(region, dtype=float).reshape(2, 2)
    hull = ifs.hull
    params = {"N": N, "depth": depth, "region": [[x0, y0], [x1, y1]]}
    checked = 0
    for n in range(N + 1, depth + 1):
        words, A, b = level_maps(ifs, (), n)
        polys = np.einsum("kij,vj->kvi", A, hull) + b[:, None, :]
        inside = ((polys[..., 0] >= x0 - tol) & (polys[..., 0] <= x1 + tol)
                  & (polys[..., 1] >= y0 - tol) & (polys[..., 1] <= y1 + tol)).all(axis=1)
        frames = {}
        for k in np.nonzero(inside)[0]:
            w = words[k]
            u = w[:n - N]
            if u not in frames:
                d = singular_frame(ifs, u).theta2
                normal = np.array([-d[1], d[0]])
                sib = []
                for a in range(1, ifs.m + 1):
                    _, As, bs = level_maps(ifs, u + (a,), 0)
                    sp = (hull @ As[0].T + bs[0]) @ normal
                    sib.append((a, sp.min(), sp.max()))
                frames[u] = (d, normal, sib)
            d, normal, sib = frames[u]
            proj = polys[k] @ normal
            nxt = w[n - N]
            others = np.array([(lo, hi) for a, lo, hi in sib if a != nxt])
            gap = _uncovered(others, proj.min(), proj.max(), tol)
            checked += 1
            if gap is not None:
                return ConditionReport("line_condition", FAIL,
                                       {"word": w, "direction": d, "uncovered": gap,
                                        "line_point": float(sum(gap) / 2) * normal},
                                       params, "heuristic at depth")
    params["words_checked"] = checked
    return ConditionReport("line_condition", PASS, {"words_checked": checked}, params,
                           "heuristic at depth")


def _uncovered(iv: np.ndarray, a: float, b: float, tol: float):
    if len(iv) == 0:
        return (float(a), float(b))
    iv = iv[np.argsort(iv[:, 0], kind="stable")]
    reach = a
    for lo, hi in iv:
        if lo > reach + tol:
            return (float(reach), float(min(lo, b)))
        reach = max(reach, hi)
        if reach >= b - tol:
            return None
    return (float(reach), float(b)) if reach < b - tol else None


# -- measure bound ---------------------------------------------------------------------

def forbidden_measure_bound(weights: BernoulliWeights | float, m: int, K: int, k: int) -> float:
    """(1 - p_min)^k * 4 m^K."""
    if k < 0 or K < 0:
        raise DomainError("k and K must be >= 0")
    p_min = weights.p_min if isinstance(weights, BernoulliWeights) else float(weights)
    return (1.0 - p_min) ** k * 4.0 * m ** K


def forbidden_tail_estimate(p_min: float, m: int, K: int, N: int) -> float:
    """N (1 - p_min) 4 m^K / p_min: the blocked geometric sum over k >= 1."""
    return N * (1.0 - p_min) * 4.0 * m ** K / p_min
