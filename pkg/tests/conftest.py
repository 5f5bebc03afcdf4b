import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_ternary(rng, n, count=None):
    shape = (n, n) if count is None else (count, n, n)
    return rng.choice(np.array([0, 0, 1, -1], dtype=np.int8), size=shape)
