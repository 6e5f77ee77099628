# tests/conftest.py

import numpy as np
import pytest

from app.infrastructure.repositories.enskog.ensemble_binary_repository import EnsembleBinaryRepository


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def repository():
    return EnsembleBinaryRepository()
