import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from pcfbounds.groundsem import ERR, SubDist

settings.register_profile(
    "default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

F = Fraction

GEOMETRIC = r"(fix (\f: nat -> nat. \y: nat. if coin(1/2) then y else f y)) 0"
OMEGA = r"fix (\x: nat. x)"
COIN_OR_OMEGA = r"if coin(1/2) then 0 else fix (\x: nat. x)"

# generators take a seeded Random; hypothesis picks (and shrinks) the seed
rngs = st.integers(0, 2**32 - 1).map(random.Random)


@st.composite
def subdists(draw, support=(0, 1, 2), with_err=True, den=16):
    keys = list(support) + ([ERR] if with_err else [])
    cuts = sorted(draw(st.integers(0, den)) for _ in keys)
    masses, prev = {}, 0
    for key, c in zip(keys, cuts):
        masses[key] = F(c - prev, den)
        prev = c
    return SubDist.of(masses)


@pytest.fixture
def rng():
    return random.Random(20261019)
