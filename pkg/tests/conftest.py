from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from kurasync.model import OscillatorSystem

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def random_system(rng: np.random.Generator, n: int, uniform: bool = False, normalized: bool = True) -> OscillatorSystem:
    d = rng.uniform(0.5, 2.0, n)
    omega = rng.normal(0.0, 1.0, n)
    if normalized:
        omega -= omega.sum() / d.sum() * d
    if uniform:
        coupling = rng.uniform(0.5, 3.0) * (np.ones((n, n)) - np.eye(n))
    else:
        upper = np.triu(rng.normal(1.0, 1.0, (n, n)), k=1)
        coupling = upper + upper.T
    return OscillatorSystem(d=d, omega=omega, coupling=coupling)


@st.composite
def systems(draw, min_n: int = 2, max_n: int = 8, normalized: bool = True):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_system(np.random.default_rng(seed), n, normalized=normalized)


def phases(n: int):
    return st.lists(st.floats(-50, 50, allow_nan=False), min_size=n, max_size=n).map(np.array)
