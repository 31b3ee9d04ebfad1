import math

import numpy as np
import pytest

from tangent_lens.affine import AffineMap2, IFSSystem
from tangent_lens.symbolic import BernoulliWeights

ZOOM_POINT = (0.453846, 0.486659)


def four_map_carpet():
    return IFSSystem([
        AffineMap2(np.diag([0.2, 0.4]), [0.0, 0.0]),
        AffineMap2(np.diag([0.7, 0.3]), [0.3, 0.0]),
        AffineMap2(np.diag([0.7, 0.2]), [0.0, 0.8]),
        AffineMap2(np.diag([0.1, 0.3]), [0.4, 0.4]),
    ], "carpet")


def rotor_system(theta=1.0):
    quarter = np.array([[0.0, -1.0], [1.0, 0.0]])
    long_ = (np.diag([0.5, 0.05]), np.array([0.4, -0.4]))
    short = (np.diag([0.2, 0.05]), np.array([0.8, 0.0]))
    maps = []
    for A, b in (long_, short):
        for i in range(4):
            R = np.linalg.matrix_power(quarter, i)
            maps.append(AffineMap2(R @ A, R @ b))
    c, s = math.cos(theta), math.sin(theta)
    maps.append(AffineMap2(0.2 * np.array([[c, -s], [s, c]]), [0.0, 0.0]))
    return IFSSystem(maps, "rotor")


def product_cantor():
    A = np.diag([1 / 3, 1 / 4])
    return IFSSystem([AffineMap2(A, t) for t in [(0, 0), (2 / 3, 0), (0, 0.75), (2 / 3, 0.75)]],
                     "cantor")


def halves():
    return IFSSystem([AffineMap2(0.5 * np.eye(2), [0, 0]), AffineMap2(0.5 * np.eye(2), [0.5, 0]),
                      AffineMap2(0.5 * np.eye(2), [0, 0.5])], "halves")


P_CARPET = BernoulliWeights(("1/6", "1/3", "1/3", "1/6"))


@pytest.fixture(scope="session")
def carpet():
    return four_map_carpet()


@pytest.fixture(scope="session")
def rotor():
    return rotor_system()


@pytest.fixture(scope="session")
def cantor():
    return product_cantor()


@pytest.fixture(scope="session")
def p_carpet():
    return P_CARPET
