import math
import os
import sys

import pytest
from hypothesis import settings, strategies as st

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

angles = st.floats(-math.pi, math.pi, allow_nan=False, allow_infinity=False)
wide_angles = st.floats(-20.0, 20.0, allow_nan=False, allow_infinity=False)
momenta = st.floats(-math.pi, math.pi, allow_nan=False, allow_infinity=False)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
