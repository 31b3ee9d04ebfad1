"""Closed-form singular value decomposition of 2x2 real matrices."""

from __future__ import annotations

import math

import numpy as np

TIE_RTOL = 1e-12


def _canon(v: np.ndarray) -> np.ndarray:
    # first nonzero coordinate positive
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        return -v
    return v


def perp(v: np.ndarray) -> np.ndarray:
    return _canon(np.array([-v[1], v[0]]))


def singular_values(m: np.ndarray) -> tuple[float, float]:
    """(s1, s2) from the two-angle form; s2 loses relative accuracy when s2 << s1."""
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    q = math.hypot((a + d) / 2, (c - b) / 2)
    r = math.hypot((a - d) / 2, (c + b) / 2)
    return q + r, abs(q - r)


def batched_s1(m: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a (..., 2, 2) stack."""
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    return np.hypot((a + d) / 2, (c - b) / 2) + np.hypot((a - d) / 2, (c + b) / 2)


def left_direction(m: np.ndarray) -> tuple[np.ndarray, bool]:
    """Dominant left singular vector of ``m`` and whether s1 == s2 (tie).

    On a tie the canonical basis vector (1, 0) is returned.
    """
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    q = math.hypot((a + d) / 2, (c - b) / 2)
    r = math.hypot((a - d) / 2, (c + b) / 2)
    if r <= TIE_RTOL * q:
        return np.array([1.0, 0.0]), True
    p11 = a * a + b * b
    p22 = c * c + d * d
    p12 = a * c + b * d
    if p12 == 0.0:
        u = np.array([1.0, 0.0]) if p11 >= p22 else np.array([0.0, 1.0])
    else:
        phi = 0.5 * math.atan2(2 * p12, p11 - p22)
        u = np.array([math.cos(phi), math.sin(phi)])
    return _canon(u), False


def frame_of(m: np.ndarray):
    """(s1, theta1, theta2, eta1, eta2, tie) for a nonzero 2x2 matrix."""
    u1, tie = left_direction(m)
    s1, _ = singular_values(m)
    if tie:
        e1 = np.array([1.0, 0.0])
        e2 = np.array([0.0, 1.0])
        return s1, e1, e2, e1.copy(), e2.copy(), True
    w = m.T @ u1
    v1 = _canon(w / np.hypot(w[0], w[1]))
    return s1, u1, perp(u1), v1, perp(v1), False
