"""
Shared fixtures: seeded random generators and a scratch output directory.
"""

import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def output_dir(tmp_path) -> str:
    return str(tmp_path / 'out')


def random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)
