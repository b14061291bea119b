import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from autoik import bench


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def named_robots():
    return bench.named_robots()


def rand_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)
