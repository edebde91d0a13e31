import numpy as np
import pytest

from mfconc.models import two_state_example

M2 = np.array([[0.7, 0.3], [0.4, 0.6]])


@pytest.fixture
def fk2():
    """The two-state Feynman-Kac model used throughout the checks."""
    return two_state_example()
