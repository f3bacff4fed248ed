from pathlib import Path

import numpy as np
import pytest

from cdrpll.core import LoopParams, RlcFilter

DATA = Path(__file__).parent / "data"


@pytest.fixture
def params():
    return LoopParams()


@pytest.fixture
def filt():
    return RlcFilter()


def random_filters(n, seed=2024):
    """Log-uniform RLC values spanning over- and under-damped filters."""
    rng = np.random.default_rng(seed)
    r = 10 ** rng.uniform(-1, 4, n)
    l = 10 ** rng.uniform(-9, -3, n)
    c = 10 ** rng.uniform(-15, -9, n)
    return [RlcFilter(float(a), float(b), float(d)) for a, b, d in zip(r, l, c)]
