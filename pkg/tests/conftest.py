import random

import pytest

from crisischain import bilinear, ibsc
from crisischain.pairing import ss512_engine


class SeqRng:
    """Deterministic rng stub: pops pre-seeded scalar draws, then falls back
    to a seeded PRNG (so tests can force only the draws they care about)."""

    def __init__(self, forced=(), seed=0):
        self.forced = list(forced)
        self.fallback = random.Random(seed)

    def randrange(self, a, b=None):
        if self.forced:
            return self.forced.pop(0)
        return self.fallback.randrange(a, b)

    def randbytes(self, n):
        return self.fallback.randbytes(n)


@pytest.fixture(scope="session")
def toy11():
    return bilinear.toy_engine(11, 23, 2)


@pytest.fixture(scope="session")
def toy():
    return bilinear.toy_engine()


@pytest.fixture(scope="session")
def prod():
    return ss512_engine()


@pytest.fixture(scope="session")
def prod_setup(prod):
    params, master = ibsc.setup(prod, random.Random(0xC0FFEE))
    return params, master


@pytest.fixture(scope="session")
def toy_setup(toy):
    params, master = ibsc.setup(toy, random.Random(0xBEEF))
    return params, master


@pytest.fixture
def ctx():
    return ibsc.EventContext(b"ev-1234", 28.468, -16.254)
