import math

import numpy as np
import pytest

from ellipsolve import Profile

SQ = math.sqrt(math.pi / 2.0)
B0 = math.sqrt(2.0 / math.pi)

QUARTIC_TERMS = [((0, 0, 0), 2.0 * SQ), ((0, 0, 2), 1.5 * SQ), ((0, 0, 4), 1.5 * SQ)]
SHIFTED_TERMS = [((0, 0, 0), 1.0), ((2, 0, 0), 1.0)]
AXIAL_TERMS = [((2, 0, 0), 1.0), ((0, 2, 0), 1.0), ((0, 0, 2), 2.0)]
MIXED_TERMS = [((0, 0, 0), 1.0), ((2, 0, 0), 0.3), ((1, 1, 0), 0.2), ((0, 1, 1), 0.1)]

PROFILE_TERMS = {
    "coulomb": [((0, 0, 0), 1.0)],
    "shifted": SHIFTED_TERMS,
    "axial": AXIAL_TERMS,
    "quartic": QUARTIC_TERMS,
    "mixed": MIXED_TERMS,
}


def random_rotation(rng):
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1
    return Q


def random_spd(rng, spread=1.0):
    lam = np.exp(rng.uniform(-spread, spread, 3))
    Q = random_rotation(rng)
    return Q @ np.diag(lam) @ Q.T


@pytest.fixture(scope="session")
def coulomb():
    return Profile.coulomb()


@pytest.fixture(scope="session")
def shifted():
    return Profile.from_polynomial(SHIFTED_TERMS)


@pytest.fixture(scope="session")
def axial():
    return Profile.from_polynomial(AXIAL_TERMS)


@pytest.fixture(scope="session")
def quartic():
    return Profile.from_polynomial(QUARTIC_TERMS)


@pytest.fixture(scope="session")
def mixed():
    return Profile.from_polynomial(MIXED_TERMS)


@pytest.fixture(scope="session")
def quartic_result(quartic):
    from ellipsolve import continuation_solve

    return continuation_solve(quartic)


@pytest.fixture(scope="session")
def shifted_solution(shifted):
    from ellipsolve import solve_equilibrium

    return solve_equilibrium(shifted)
