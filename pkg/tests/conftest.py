import random

import pytest

from specsched.fading import FadingParams
from specsched.model import ModelConfig, SystemState
from specsched.occupancy import OccupancyParams, Phase

BELIEF_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

_acceptance_lines: list[str] = []


def make_cfg(N=2, K=2, m=3, p=0.9, r=0.1, u=1, c_idle=1.0, c_busy=2.0, beta=0.9):
    return ModelConfig(N, K, beta, m, FadingParams(p, r), OccupancyParams(u, c_idle, c_busy))


def random_state(rng: random.Random, N: int, t: int, max_age=10, require_idle=False):
    while True:
        phases = [rng.choice((Phase.IDLE, Phase.BUSY)) for _ in range(N)]
        if not require_idle or Phase.IDLE in phases:
            break
    ages = [rng.randint(0, max_age) for _ in range(N)]
    beliefs = [rng.choice(BELIEF_GRID) for _ in range(N)]
    return SystemState.build(phases, ages, beliefs, t)


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def record(name: str, ok: bool, detail: str = ""):
        _acceptance_lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
