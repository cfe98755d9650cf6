import numpy as np
import pytest

from vsearch.synth import GeneratorConfig, generate_world
from vsearch.synth.mining import split_log_by_user


@pytest.fixture(scope="session")
def small_world():
    return generate_world(GeneratorConfig(seed=5, queries=1200, users=100))


@pytest.fixture(scope="session")
def small_split(small_world):
    return split_log_by_user(small_world.log)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0)
