import os
import sys

import numpy as np
import pytest

# Modules under src/ import each other flat
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"))

from ring import RingSpec  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale test, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def z2():
    return RingSpec.zmod(2, 1)


@pytest.fixture
def z4():
    return RingSpec.zmod(2, 2)


@pytest.fixture
def z8():
    return RingSpec.zmod(2, 3)


@pytest.fixture
def z9():
    return RingSpec.zmod(3, 2)


@pytest.fixture
def f4():
    return RingSpec.poly(4, 1)


@pytest.fixture
def f2t2():
    return RingSpec.poly(2, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
