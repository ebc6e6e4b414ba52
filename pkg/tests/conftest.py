from __future__ import annotations

import math

import numpy as np
import pytest

from wanderlab.denjoy import GapLaw, build_denjoy

GOLDEN = (math.sqrt(5) - 1) / 2


@pytest.fixture(scope="session")
def golden_denjoy():
    return build_denjoy(GOLDEN, GapLaw(0.5))


@pytest.fixture(scope="session")
def small_denjoy():
    return build_denjoy(GOLDEN, GapLaw(0.5), i_max=2000)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)``; printed in the terminal summary."""

    def record(number: int, passed: bool, detail: str):
        ACCEPTANCE[number] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'pass' if passed else 'fail'} ({detail})")
