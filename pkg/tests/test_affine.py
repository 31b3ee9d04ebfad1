import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangent_lens.affine import (
    AffineMap2,
    Address,
    ContractivityError,
    IFSSystem,
    attractor_sample,
    ball_meets,
    canonical_project,
    compose_along,
    cylinder_cover,
    level_maps,
    snap_to_attractor,
    strong_separation,
)
from tangent_lens.symbolic import DomainError

from conftest import ZOOM_POINT, four_map_carpet, rotor_system


def test_compose_along(carpet, rotor):
    f = compose_along(carpet, ())
    assert np.array_equal(f.matrix, np.eye(2)) and np.array_equal(f.translation, [0, 0])
    f = compose_along(carpet, (1, 2))
    assert np.allclose(f.matrix, np.diag([0.14, 0.12]), atol=1e-15)
    assert np.allclose(f.translation, [0.06, 0.0], atol=1e-15)
    g = compose_along(rotor, (9, 9))
    c, s = math.cos(2.0), math.sin(2.0)
    assert np.allclose(g.matrix, 0.04 * np.array([[c, -s], [s, c]]), atol=1e-15)


def test_canonical_project(carpet):
    assert np.allclose(canonical_project(carpet, (), 1)[0], [0, 0])
    assert np.allclose(canonical_project(carpet, (), 4)[0], [4 / 9, 4 / 7], atol=1e-14)
    assert np.allclose(canonical_project(carpet, (2,), 1)[0], [0.3, 0.0], atol=1e-15)


def test_map_validation():
    with pytest.raises(ContractivityError, match="not contractive"):
        AffineMap2([[1.2, 0], [0, 0.5]], [0, 0])
    with pytest.raises(DomainError, match="singular"):
        AffineMap2([[0.5, 0.5], [0.5, 0.5]], [0, 0])
    with pytest.raises(DomainError):
        AffineMap2([[np.nan, 0], [0, 0.5]], [0, 0])


def test_attractor_sample_in_unit_square(carpet):
    a = attractor_sample(carpet, 30, 10 ** 4, seed=1)
    assert (a.points >= -1e-6).all() and (a.points <= 1 + 1e-6).all()
    b = attractor_sample(carpet, 30, 10 ** 4, seed=1, threads=4)
    assert np.array_equal(a.points, b.points)


def test_cylinder_cover(carpet):
    c = cylinder_cover(carpet, (1,), frame="axis")
    assert np.allclose(c.lo, [0, 0]) and np.allclose(c.hi, [0.2, 0.4])
    c = cylinder_cover(carpet, (1, 2), depth=1, frame="axis")
    assert np.allclose([c.lo, c.hi], [[0.06, 0], [0.2, 0.12]], atol=1e-12)
    # the refined sub-rectangle under letter 1 has height 0.048
    sub = {w: (lo, hi) for w, lo, hi in c.subrects}
    lo, hi = sub[(1, 2, 1)]
    assert hi[1] - lo[1] == pytest.approx(0.048, abs=1e-12)
    whole = cylinder_cover(carpet, (), frame="axis")
    assert np.allclose([whole.lo, whole.hi], [[0, 0], [1, 1]], atol=1e-12)


def test_strong_separation_values(carpet, cantor):
    s = strong_separation(carpet, 1)
    assert s.status == "certified" and s.delta_lb >= 0.1 - 1e-12
    s = strong_separation(cantor, 1)
    assert s.status == "certified" and s.delta_lb >= 1 / 3 - 1e-12
    twin = IFSSystem([AffineMap2(0.5 * np.eye(2), [0, 0]), AffineMap2(0.5 * np.eye(2), [0, 0])])
    assert strong_separation(twin, 1).status == "violated"


def test_L_est_contract(carpet):
    L = carpet.L_est
    pts = attractor_sample(carpet, 30, 5000, seed=4).points
    c = pts.mean(axis=0)
    assert np.hypot(*(pts - c).T).max() <= L
    assert carpet.diameter <= L


def test_ball_meets_two_sided(carpet):
    words, A, b = level_maps(carpet, (), 1)
    # E_2 sits 0.3 to the right of the origin
    assert ball_meets(carpet, A[1], b[1], [0, 0], 0.31) is True
    assert ball_meets(carpet, A[1], b[1], [0, 0], 0.29) is False


def test_snap_to_attractor_close():
    ifs = four_map_carpet()
    addr, d = snap_to_attractor(ifs, ZOOM_POINT)
    assert d < 1e-6
    assert len(addr.prefix) == 40
    assert np.hypot(*(addr.point(ifs) - ZOOM_POINT)) == pytest.approx(d)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=1, max_size=12), st.integers(1, 9))
def test_projection_is_fixed_by_shift(prefix, tail):
    # pi(a w) = f_a(pi(w))
    ifs = rotor_system()
    x = Address(tuple(prefix), tail).point(ifs)
    y = Address(tuple(prefix[1:]), tail).point(ifs)
    a = prefix[0] - 1
    assert np.allclose(ifs.A[a] @ y + ifs.b[a], x, atol=1e-13)
