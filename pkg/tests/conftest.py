from __future__ import annotations

import pytest
from hypothesis import settings

from bqkit.fixtures import load_theory

settings.register_profile("deterministic", derandomize=True, max_examples=60)
settings.load_profile("deterministic")


@pytest.fixture(scope="session")
def elevator():
    return load_theory("elevator2")


@pytest.fixture(scope="session")
def elevator_unground():
    return load_theory("elevator2", ground=False)


@pytest.fixture(scope="session")
def gridworld():
    return load_theory("gridworld3")


@pytest.fixture(scope="session")
def tiny():
    return load_theory("tiny")


@pytest.fixture(scope="session")
def nontight_pair():
    return load_theory("nontight_pair")
