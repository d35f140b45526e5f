from pathlib import Path

import numpy as np
import pytest

from fl_emph.config import TrainConfig
from fl_emph.data import synth_example

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fixture_path():
    return REPO_ROOT / "configs" / "multipers_example.json"


@pytest.fixture
def small_two_class():
    return synth_example("two-class", per_class=10, noise=0.3, seed=3)


@pytest.fixture
def tiny_config():
    return TrainConfig(
        epochs=3,
        learning_rate=0.01,
        modes=[1, 5],
        resolution=4,
        bandwidth=0.2,
        hidden_widths=[6],
        seed=0,
        folds=2,
        log_every_n_epochs=1,
    )
