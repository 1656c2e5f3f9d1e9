import numpy as np
import pytest

from ncfbm.matrix_model import (MatrixEnsembleConfig, MatrixPath,
                                dyadic_times, sample_fbm_path,
                                sample_matrix_path)


@pytest.fixture(scope="session")
def path_small():
    """d=8, level 8, H=0.35: cheap enough for identity checks."""
    return sample_matrix_path(MatrixEnsembleConfig(8, 8, 0.35, 11))


@pytest.fixture(scope="session")
def path_young():
    return sample_matrix_path(MatrixEnsembleConfig(16, 10, 0.75, 5))


@pytest.fixture(scope="session")
def scalar_path():
    """1x1 matrix path at H=0.75; scalars commute, so classical calculus applies."""
    times = dyadic_times(10)
    x = sample_fbm_path(0.75, times, seed=3)[0]
    return MatrixPath(times, x[:, None, None], level=10, H=0.75)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def sym(rng, d):
    A = rng.standard_normal((d, d))
    return A + A.T
