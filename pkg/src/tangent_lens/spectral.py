"""Singular values and directions of matrix products along words.

Products are accumulated as a renormalised 2x2 matrix plus a running log
scale, so words of length 10^4 neither underflow nor lose the small singular
value: log alpha_2 is recovered from log|det A_w| - log alpha_1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from tangent_lens.affine import Address, IFSSystem
from tangent_lens.linalg2 import batched_s1, frame_of
from tangent_lens.symbolic import (
    BernoulliWeights,
    DomainError,
    check_word,
    make_rng,
    sample_words,
)
from tangent_lens._parallel import parallel_map


@dataclass(frozen=True, eq=False)
class SingularFrame:
    log_alpha1: float
    log_alpha2: float
    theta1: np.ndarray
    theta2: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    word_len: int
    tie: bool = False

    @property
    def alpha1(self) -> float:
        return math.exp(self.log_alpha1)

    @property
    def alpha2(self) -> float:
        return math.exp(self.log_alpha2)

    @property
    def rotation(self) -> np.ndarray:
        """Orthogonal matrix sending theta1 -> e1 and theta2 -> e2."""
        return np.vstack([self.theta1, self.theta2])


class FrameAccumulator:
    """Running product A_{w1} ... A_{wn} with log-domain scale."""

    def __init__(self, ifs: IFSSystem):
        self.ifs = ifs
        self.M = np.eye(2)
        self.log_scale = 0.0
        self.log_det = 0.0
        self.n = 0

    def push(self, letter: int) -> None:
        M = self.M @ self.ifs.A[letter - 1]
        s = float(np.abs(M).max())
        self.M = M / s
        self.log_scale += math.log(s)
        self.log_det += float(self.ifs.log_abs_det[letter - 1])
        self.n += 1

    def frame(self) -> SingularFrame:
        if self.n == 0:
            raise DomainError("singular frame of the empty word")
        s1, t1, t2, e1, e2, tie = frame_of(self.M)
        la1 = self.log_scale + math.log(s1)
        la2 = la1 if tie else min(self.log_det - la1, la1)
        return SingularFrame(la1, la2, t1, t2, e1, e2, self.n, tie)


def singular_frame(ifs: IFSSystem, word: Sequence[int]) -> SingularFrame:
    word = check_word(word, ifs.m)
    if not word:
        raise DomainError("singular frame of the empty word")
    acc = FrameAccumulator(ifs)
    for a in word:
        acc.push(a)
    return acc.frame()


def log_gap_sequence(ifs: IFSSystem, word: Sequence[int]) -> np.ndarray:
    """log alpha_1(w|n) - log alpha_2(w|n) for n = 1..len(word)."""
    acc = FrameAccumulator(ifs)
    out = np.empty(len(word))
    for k, a in enumerate(word):
        acc.push(a)
        f = acc.frame()
        out[k] = f.log_alpha1 - f.log_alpha2
    return out


@dataclass
class LyapunovEstimate:
    lambda1: float
    lambda2: float
    se1: float
    se2: float
    n: int
    trials: int
    samples: np.ndarray  # (trials, 2)


def _log_alphas(ifs: IFSSystem, words: np.ndarray) -> np.ndarray:
    """(log alpha_1, log alpha_2) for every row of a letter array."""
    count, n = words.shape
    M = np.broadcast_to(np.eye(2), (count, 2, 2)).copy()
    log_scale = np.zeros(count)
    for k in range(n):
        M = M @ ifs.A[words[:, k] - 1]
        s = np.abs(M).max(axis=(1, 2))
        M /= s[:, None, None]
        log_scale += np.log(s)
    la1 = log_scale + np.log(batched_s1(M))
    log_det = ifs.log_abs_det[words - 1].sum(axis=1)
    la2 = np.minimum(log_det - la1, la1)
    return np.column_stack([la1, la2])


def lyapunov_estimate(ifs: IFSSystem, weights: BernoulliWeights, n: int, trials: int,
                      seed: int = 0, stream: int = 0, threads: int = 1,
                      chunk: int = 50) -> LyapunovEstimate:
    """Monte Carlo estimate of (lambda_1, lambda_2) from ``trials`` words of length n.

    Trial k draws its word from stream (stream, k); chunks only group trials
    for vectorisation, so results do not depend on ``threads`` or ``chunk``.
    """
    if n < 10 or trials < 2:
        raise DomainError("need n >= 10 and trials >= 2")
    if weights.m != ifs.m:
        raise DomainError("weights and IFS disagree on m")

    def work(ks):
        words = np.vstack([sample_words(weights, n, 1, make_rng(seed, stream, k)) for k in ks])
        return _log_alphas(ifs, words)

    groups = [list(range(s, min(s + chunk, trials))) for s in range(0, trials, chunk)]
    logs = np.vstack(parallel_map(work, groups, threads))
    lam = -logs / n
    mean = lam.mean(axis=0)
    se = lam.std(axis=0, ddof=1) / math.sqrt(trials)
    return LyapunovEstimate(float(mean[0]), float(mean[1]), float(se[0]), float(se[1]),
                            n, trials, lam)


def carpet_lyapunov(ifs: IFSSystem, weights: BernoulliWeights) -> tuple[float, float]:
    """(-sum p_i log h_i, -sum p_i log v_i) for a diagonal system."""
    if not ifs.is_diagonal:
        raise DomainError("carpet_lyapunov needs diagonal matrices")
    p = weights.as_array()
    h = np.abs(ifs.A[:, 0, 0])
    v = np.abs(ifs.A[:, 1, 1])
    return float(-(p * np.log(h)).sum()), float(-(p * np.log(v)).sum())


@dataclass
class OseledetsResult:
    theta_bar: np.ndarray
    angles: np.ndarray        # theta_n between theta_2(w|n) and theta_2(w|n+1)
    log_ratio: np.ndarray     # log alpha_2(w|n) - log alpha_1(w|n), n = 1..
    stop_n: int | None
    converged: bool


def _fold(angle: float) -> float:
    if angle > math.pi / 2:
        angle -= math.pi
    elif angle < -math.pi / 2:
        angle += math.pi
    return angle


def oseledets_direction(ifs: IFSSystem, word: Address | Iterable[int], tol: float = 1e-9,
                        max_len: int = 10_000, window: int = 10,
                        run_to_end: bool = False) -> OseledetsResult:
    """Follow theta_1(w|n) along growing prefixes until it settles.

    Stops once the last ``window`` increments are below ``tol`` and the
    increment bound (alpha_hi/alpha_lo) * alpha_2/alpha_1 has fallen below
    ``tol`` and kept decreasing across the window.
    """
    if isinstance(word, Address):
        letters = iter(word.letters(max_len))
    else:
        letters = iter(word)
    c = math.log(ifs.alpha_hi / ifs.alpha_lo)
    acc = FrameAccumulator(ifs)
    angles, ratios = [], []
    prev = None
    stop = None
    for k, a in enumerate(letters):
        if k >= max_len:
            break
        acc.push(a)
        f = acc.frame()
        ratios.append(f.log_alpha2 - f.log_alpha1)
        if prev is not None:
            th = math.atan2(float(prev.theta2 @ f.theta1), float(prev.theta2 @ f.theta2))
            angles.append(_fold(th))
        prev = f
        if stop is None and len(angles) >= window:
            recent = np.abs(angles[-window:])
            bound_now = c + ratios[-1]
            bound_then = c + ratios[-window]
            if (recent < tol).all() and bound_now < math.log(tol) and bound_now < bound_then:
                stop = acc.n
                theta_bar = f.theta1
                if not run_to_end:
                    break
    if prev is None:
        raise DomainError("empty word stream")
    if stop is None:
        theta_bar = prev.theta1
    return OseledetsResult(theta_bar, np.array(angles), np.array(ratios), stop, stop is not None)
