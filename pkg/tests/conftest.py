import numpy as np
import pytest

from irs_isac.protocol import SystemConfig, build_plan
from irs_isac.channels import realize

ACCEPTANCE_LINES = []


def crand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cfg():
    return SystemConfig(M=4, L=8)


@pytest.fixture
def plan(cfg):
    return build_plan(cfg)


@pytest.fixture
def chans(cfg, rng):
    return realize(cfg, rng)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
