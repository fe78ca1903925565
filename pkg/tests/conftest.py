import numpy as np
import pytest

from rdswarm.core import RandomSource

ACCEPTANCE_LINES = []


class FixedSource(RandomSource):
    """Random source returning pinned values, for hand-checked steps."""

    def __init__(self, uniform=0.5, normal=1.0):
        super().__init__(0)
        self.u = uniform
        self.z = normal

    def uniform(self, size=None):
        return self.u if size is None else np.full(size, self.u, dtype=float)

    def normal(self, size=None):
        return self.z if size is None else np.full(size, self.z, dtype=float)


@pytest.fixture
def fixed_source():
    return FixedSource


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
