import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Law and fit invariants run at least this many randomized cases each.
PROPERTY_CASES = 1000

settings.register_profile(
    "default",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

BASE_GRID = 1000.0 * 2.0 ** np.arange(7)


@pytest.fixture
def base_grid():
    return BASE_GRID.copy()
