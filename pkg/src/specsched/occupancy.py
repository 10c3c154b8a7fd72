"""Age-based primary-user occupancy process.

Each channel alternates idle/busy at mini-slot boundaries.  A channel that
has spent ``x`` mini-slots in its phase stays one more with probability
``1 / (x**u + C)``.  Age counts the preceding mini-slots in the current
phase, so a channel that has just switched has age 0.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np


class Phase(enum.IntEnum):
    IDLE = 0
    BUSY = 1


@dataclass(frozen=True)
class OccupancyParams:
    u: int
    c_idle: float
    c_busy: float

    def __post_init__(self):
        if int(self.u) != self.u or self.u < 1:
            raise ValueError(f"u must be a positive integer, got {self.u}")
        if self.c_idle <= 0 or self.c_busy <= 0:
            raise ValueError("c_idle and c_busy must be positive")


class OccupancyState(NamedTuple):
    phase: Phase
    age: int


def idle_persistence(x: int, params: OccupancyParams) -> float:
    """Pr(still idle next mini-slot | idle for ``x`` mini-slots)."""
    if x < 1:
        raise ValueError(f"persistence is defined for x >= 1, got {x}")
    return 1.0 / (x**params.u + params.c_idle)


def busy_persistence(x: int, params: OccupancyParams) -> float:
    if x < 1:
        raise ValueError(f"persistence is defined for x >= 1, got {x}")
    return 1.0 / (x**params.u + params.c_busy)


def persistence(phase: Phase, x: int, params: OccupancyParams) -> float:
    if phase == Phase.IDLE:
        return idle_persistence(x, params)
    return busy_persistence(x, params)


def k0_distribution(x: int, K: int, params: OccupancyParams) -> np.ndarray:
    """Distribution of the last idle mini-slot before the PU returns.

    ``out[z - 1]`` is Pr(k0 = z) for a channel idle at mini-slot 1 with idle
    age ``x``.  Mass on ``K`` means the channel stayed idle all slot.
    """
    if x < 0 or K < 1:
        raise ValueError("need x >= 0 and K >= 1")
    probs = np.empty(K)
    survive = 1.0
    for z in range(1, K):
        stay = idle_persistence(x + z, params)
        probs[z - 1] = survive * (1.0 - stay)
        survive *= stay
    probs[K - 1] = survive
    return probs


def step(
    occ: OccupancyState, params: OccupancyParams, rng: np.random.Generator
) -> OccupancyState:
    phase, age = occ
    if rng.random() < persistence(phase, age + 1, params):
        return OccupancyState(phase, age + 1)
    return OccupancyState(Phase(1 - phase), 0)


def transitions(occ: OccupancyState, params: OccupancyParams):
    """The two one-mini-slot successors of ``occ`` with their probabilities."""
    phase, age = occ
    stay = persistence(phase, age + 1, params)
    return (
        (OccupancyState(phase, age + 1), stay),
        (OccupancyState(Phase(1 - phase), 0), 1.0 - stay),
    )


@lru_cache(maxsize=None)
def _k_step(occ: OccupancyState, steps: int, params: OccupancyParams):
    dist = {occ: 1.0}
    for _ in range(steps):
        nxt = defaultdict(float)
        for state, prob in dist.items():
            for succ, q in transitions(state, params):
                if q > 0.0:
                    nxt[succ] += prob * q
        dist = nxt
    return tuple(dist.items())


def k_step_distribution(
    occ: OccupancyState, steps: int, params: OccupancyParams
) -> dict[OccupancyState, float]:
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    occ = OccupancyState(Phase(occ[0]), int(occ[1]))
    return dict(_k_step(occ, steps, params))


def post_return_distribution(
    x: int, k0: int, K: int, params: OccupancyParams
) -> dict[OccupancyState, float]:
    """Occupancy of the scheduled channel at the next slot start, given k0."""
    if not 1 <= k0 <= K:
        raise ValueError(f"k0 must lie in 1..{K}, got {k0}")
    if k0 == K:
        stay = idle_persistence(x + K, params)
        out = {OccupancyState(Phase.IDLE, x + K): stay}
        if stay < 1.0:
            out[OccupancyState(Phase.BUSY, 0)] = 1.0 - stay
        return out
    return k_step_distribution(OccupancyState(Phase.BUSY, 0), K - k0, params)


def conditional_idle_curve(
    params: OccupancyParams, phase: Phase, x_max: int
) -> list[tuple[int, float]]:
    """Pr(idle now | history of age x in ``phase``) for x = 1..x_max."""
    if x_max < 1:
        raise ValueError("x_max must be >= 1")
    if phase == Phase.IDLE:
        return [(x, idle_persistence(x, params)) for x in range(1, x_max + 1)]
    return [(x, 1.0 - busy_persistence(x, params)) for x in range(1, x_max + 1)]


def insignificance_threshold(values, level: float = 1e-2) -> int:
    """Smallest x such that every later successive difference is below ``level``.

    ``values[i]`` is the curve at x = i + 1.  Returns ``len(values)`` when the
    series never settles.
    """
    diffs = np.abs(np.diff(np.asarray(values, dtype=float)))
    x0 = len(values)
    for i in range(len(diffs) - 1, -1, -1):
        if diffs[i] >= level:
            break
        x0 = i + 1
    return x0
