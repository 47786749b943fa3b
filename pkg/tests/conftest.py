import random

import pytest

from livelockfree.networks import directed_cycle, fixtures, random_allowed_network
from livelockfree.topology import Multigraph


@pytest.fixture
def cycle3():
    return directed_cycle(3)


@pytest.fixture
def fork():
    """Router 0 with two inputs (from 1 and 2) and two outputs (to 1 and 2)."""
    return Multigraph.from_pairs(3, [(0, 1), (0, 2), (1, 0), (2, 0)])


@pytest.fixture(scope="session")
def fixture_networks():
    return fixtures()


def random_networks(count, seed=0, **kw):
    rng = random.Random(seed)
    return [random_allowed_network(rng, **kw) for _ in range(count)]
