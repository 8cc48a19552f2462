"""Shared fixtures and the ``--runslow`` gate for long acceptance runs."""

import numpy as np
import pytest

from src.model import ModelConfig, build_model


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-minute acceptance run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_model():
    """Two layers of two 6x6 heads with rank-2 adapters."""
    return build_model(ModelConfig(layers=2, heads=2, d=6, k=6, seed=3), r0=2, adapter_seed=3)


@pytest.fixture
def small_batch(rng):
    return rng.standard_normal((10, 6)), rng.standard_normal((10, 6))
