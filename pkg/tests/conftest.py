import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pqaka import sim
from pqaka.rng import SeededRandom


@pytest.fixture
def world():
    return sim.make_world("test", seed=0)


@pytest.fixture
def rng():
    return SeededRandom(1)
