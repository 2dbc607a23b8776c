import math

import pytest

from ldplab import Potential, validate_spec

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


@pytest.fixture(scope="session")
def fs2():
    """Full shift on two symbols."""
    return validate_spec([[1, 1], [1, 1]])


@pytest.fixture(scope="session")
def gm():
    """Golden-mean shift: the pair 11 is forbidden."""
    return validate_spec([[1, 1], [1, 0]])


def bernoulli_potential(spec, p):
    """Memory-1 potential with value log p on symbol 0 and log (1-p) on symbol 1."""
    return Potential(1, {(0,): math.log(p), (1,): math.log(1 - p)})
