import sys
from pathlib import Path

import numpy as np
import pytest

_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(_ROOT / "src"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)
