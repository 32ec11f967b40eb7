import numpy as np
import pytest

from glmmr.physics import BX, BZ, PRS, PSI, RHO, UX, UZ, to_conserved

GAMMA = 5.0 / 3.0


def random_primitive(rng, n, *, rho=(0.1, 5.0), p=(0.05, 5.0), u=2.0, b=2.0, psi=1.0):
    w = np.empty((9, n))
    w[RHO] = rng.uniform(*rho, n)
    w[PRS] = rng.uniform(*p, n)
    w[UX:UZ + 1] = rng.uniform(-u, u, (3, n))
    w[BX:BZ + 1] = rng.uniform(-b, b, (3, n))
    w[PSI] = rng.uniform(-psi, psi, n)
    return w


def random_conserved(rng, n, **kw):
    return to_conserved(random_primitive(rng, n, **kw), GAMMA)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def gamma():
    return GAMMA


@pytest.fixture
def random_pairs(rng):
    """Callable returning ``(qL, qR)`` arrays of admissible conserved states."""
    def make(n, **kw):
        return random_conserved(rng, n, **kw), random_conserved(rng, n, **kw)
    return make


@pytest.fixture
def brio_wu():
    w = np.zeros((9, 2))
    w[RHO] = (1.0, 0.125)
    w[PRS] = (1.0, 0.1)
    w[BX] = 0.75
    w[BX + 1] = (1.0, -1.0)
    q = to_conserved(w, GAMMA)
    return q[:, 0], q[:, 1]
