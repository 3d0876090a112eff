"""
Shared pytest fixtures
"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config.settings import settings


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(settings.SEED)
