import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tvreg import epanechnikov


@pytest.fixture(scope="session")
def epan_kernel():
    return epanechnikov()
