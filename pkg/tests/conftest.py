import sys
from pathlib import Path

import numpy as np
import pytest

SRC_DIR = Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(SRC_DIR))

from codedmrpt.linalg.types import Dataset  # noqa: E402

ROOT_DIR = Path(__file__).resolve().parents[1]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def gaussian_data() -> Dataset:
    return Dataset.from_points(np.random.default_rng(7).standard_normal((400, 16)))
