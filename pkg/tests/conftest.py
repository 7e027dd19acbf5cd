# tests/conftest.py
import numpy as np
import pytest

from decomp.cp import cp_reconstruct
from decomp.models import CpModel


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in ("TENSORKIT_MEMORY_BUDGET", "TENSORKIT_DEFAULT_SEED", "TENSORKIT_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


def low_rank_cp(shape, rank, seed=0):
    """Random exact rank-``rank`` tensor with well-separated components."""
    rng = np.random.default_rng(seed)
    factors = [rng.standard_normal((extent, rank)) for extent in shape]
    weights = np.linspace(2.0, 1.0, rank)
    model = CpModel(weights=weights, factors=tuple(factors))
    return cp_reconstruct(model), model


@pytest.fixture
def rank3_tensor():
    tensor, _ = low_rank_cp((10, 10, 10), 3, seed=7)
    return tensor


@pytest.fixture
def make_low_rank():
    return low_rank_cp
