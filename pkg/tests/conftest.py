import random

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from binspeed.config import BinConfig, Tail

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@st.composite
def configs(draw, max_bins=6, tails=(Tail.FLAT, Tail.INFINITE)):
    counts = draw(st.lists(st.integers(1, 5), max_size=max_bins))
    offset = draw(st.integers(-5, 5))
    tail = draw(st.sampled_from(tails))
    return BinConfig(tuple(counts), offset, tail)


@pytest.fixture
def rnd():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
