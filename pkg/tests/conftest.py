import pytest

from photocount import FptLaw

REFERENCE = (1.0, 1.0, 1.0)


@pytest.fixture
def reference_law():
    return FptLaw(*REFERENCE)
