import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# oracles.py lives next to the test files, not in the package
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "research",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("research")


@pytest.fixture
def rng():
    return np.random.default_rng(0)
