import numpy as np
import pytest

from ppgssl.data.synthetic import SyntheticConfig, synthesize_dataset


@pytest.fixture(scope="session")
def small_dataset():
    """Three 120 s subjects with the studied activities, labels at 4 Hz."""
    cfg = SyntheticConfig(
        n_subjects=3,
        duration_s=120.0,
        activity_schedule=((1, 24.0), (2, 24.0), (3, 24.0), (4, 24.0), (7, 24.0)),
        seed=11,
    )
    return synthesize_dataset(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
