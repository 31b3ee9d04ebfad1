"""Finite words over {1..m}, cylinders and Bernoulli measures on code space.

Words are plain tuples of 1-based letters; the empty tuple is the empty word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

Word = tuple[int, ...]


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


def check_word(word: Sequence[int], m: int) -> Word:
    word = tuple(int(a) for a in word)
    for a in word:
        if not 1 <= a <= m:
            raise DomainError(f"letter {a} outside alphabet 1..{m}")
    return word


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream...)``.

    Streams are independent of each other and of the order in which they are
    created, so parallel work can own one stream per task.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class BernoulliWeights:
    p: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(Fraction(x)) if isinstance(x, str) else float(x) for x in self.p)
        object.__setattr__(self, "p", p)
        if len(p) < 2:
            raise DomainError("need at least two weights")
        if any(not math.isfinite(x) or x <= 0 for x in p):
            raise DomainError("weights must be finite and strictly positive")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {math.fsum(p)!r}, not 1")

    @classmethod
    def uniform(cls, m: int) -> "BernoulliWeights":
        return cls(tuple([1.0 / m] * m))

    @property
    def m(self) -> int:
        return len(self.p)

    @property
    def p_min(self) -> float:
        return min(self.p)

    @property
    def p_max(self) -> float:
        return max(self.p)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)


def cylinder_measure(word: Sequence[int], weights: BernoulliWeights) -> float:
    """nu_p([word]): the product of the letter weights (1 for the empty word)."""
    word = check_word(word, weights.m)
    return math.prod(weights.p[a - 1] for a in word)


def sample_words(weights: BernoulliWeights, length: int, count: int,
                 rng: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. words as a (count, length) array of 1-based letters."""
    cdf = np.cumsum(weights.as_array())
    cdf[-1] = 1.0
    u = rng.random((count, length))
    return np.searchsorted(cdf, u, side="right").astype(np.int64) + 1


def sample_word(weights: BernoulliWeights, length: int, seed: int = 0,
                stream: int = 0) -> Word:
    if length < 1:
        raise DomainError("length must be positive")
    letters = sample_words(weights, length, 1, make_rng(seed, stream))[0]
    return tuple(int(a) for a in letters)


def incomparable(a: Sequence[int], b: Sequence[int]) -> bool:
    """True iff the cylinders [a] and [b] are disjoint, i.e. neither is a prefix."""
    n = min(len(a), len(b))
    return tuple(a[:n]) != tuple(b[:n])


def words_of_length(m: int, k: int):
    """All words of length k in lexicographic order."""
    if k == 0:
        yield ()
        return
    for w in words_of_length(m, k - 1):
        for a in range(1, m + 1):
            yield w + (a,)
