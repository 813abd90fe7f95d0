"""Shared test configuration.

BLAS thread pools are pinned to one thread before numpy loads so the timing
benchmarks measure single-threaded behavior and results do not depend on the
machine's core count.
"""

import os

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=30)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
