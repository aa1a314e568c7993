import time
import warnings

import numpy as np
import pytest
from hypothesis import settings

from zelf.continuation import default_schedule, sweep

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


class TimedSweep:
    def __init__(self, cs, a_tilde, schedule):
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.result = sweep(cs, a_tilde, schedule)
        self.seconds = time.perf_counter() - t0


@pytest.fixture(scope="session")
def sweep_2x1():
    """Full 2x1 sweep, a~=0.05, default 400-point schedule 1e5 -> 2."""
    return TimedSweep("2x1", 0.05, default_schedule("2x1"))


@pytest.fixture(scope="session")
def sweep_1x2():
    """Full 1x2 sweep, a~=0.05, 400-point schedule 1e5 -> 1000."""
    return TimedSweep("1x2", 0.05, np.geomspace(1e5, 1000.0, 400))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def interior_points(rng, cs, n, margin=0.98):
    r = rng.uniform(-1, 1, n) * cs.half_width * margin
    z = rng.uniform(-1, 1, n) * cs.half_height * margin
    return r, z
