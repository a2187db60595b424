import numpy as np
import pytest

from crossframe import ArchSpec, SampleConfig, embed_prompt, init_weights
from crossframe.fixtures import moving_square_conditions


@pytest.fixture(scope="session")
def small_arch():
    return ArchSpec(latent_size=8)


@pytest.fixture(scope="session")
def small_weights(small_arch):
    return init_weights(1, small_arch)


@pytest.fixture(scope="session")
def tau():
    return embed_prompt("a small test prompt", 7)


@pytest.fixture
def small_cfg():
    return SampleConfig(frames=3, height=16, width=16, sample_count=4, smoother=None, seed=5)


def small_conditions(frames: int, hw: int = 8) -> np.ndarray:
    return moving_square_conditions(frames, hw, hw)
