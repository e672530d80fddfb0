import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from funquant import EllipticalModel, ScaleMixture


@pytest.fixture(scope="session")
def gaussian_425() -> EllipticalModel:
    return EllipticalModel(
        mu=np.zeros(3), lam=np.array([4.0, 1.0, 0.25]), mixture=ScaleMixture.gaussian()
    )


@pytest.fixture(scope="session")
def t5_425() -> EllipticalModel:
    return EllipticalModel(
        mu=np.zeros(3), lam=np.array([4.0, 1.0, 0.25]), mixture=ScaleMixture.student_t(5.0)
    )
