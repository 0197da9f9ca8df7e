import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dtsmc.chain import SemiMarkovKernel  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def alternating():
    """a -> b after 1 step, b -> a after 2 steps; deterministic, period 3."""
    return SemiMarkovKernel.from_entries("ab", 2, [("a", "b", 1, 1.0), ("b", "a", 2, 1.0)])


@pytest.fixture
def two_state():
    """a -> b after 1 or 2 steps with probability 1/2 each, b -> a after 1 step."""
    return SemiMarkovKernel.from_entries(
        "ab", 2, [("a", "b", 1, 0.5), ("a", "b", 2, 0.5), ("b", "a", 1, 1.0)]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
