import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from colorsparrow import LinearImage  # noqa: E402

CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20130501)


@pytest.fixture
def textured(rng):
    """A 24 x 32 image with smooth gradients and blobs, no pixel below 0.05."""
    y, x = np.mgrid[0:24, 0:32] / 10.0
    base = np.stack([0.5 + 0.3 * np.sin(x + 0.3 * c) * np.cos(y - 0.2 * c)
                     for c in range(3)], axis=-1)
    base += 0.1 * rng.random(base.shape)
    return LinearImage(np.clip(base, 0.05, 1.0))


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome for the terminal summary."""
    def record(name, ok, detail=""):
        if ok is None:
            CRITERIA[name] = ("SKIP", detail)
            pytest.skip(detail)
        CRITERIA[name] = ("PASS" if ok else "FAIL", detail)
        assert ok, f"{name}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, (status, detail) in CRITERIA.items():
        terminalreporter.write_line(f"{status:4}  {name}  {detail}")
