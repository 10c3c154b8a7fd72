"""Two-state Markov fading chain and belief propagation.

A belief is kept symbolically as ``(origin, steps)``: the numeric value is
``T^steps`` applied to the origin's base probability.  This makes beliefs
exact, hashable memoization keys.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np


class Origin(enum.IntEnum):
    GOOD = 0  # last feedback was good -> base value p
    BAD = 1  # last feedback was bad -> base value r
    ANCHOR = 2  # arbitrary initial belief


class FadingState(enum.IntEnum):
    BAD = 0
    GOOD = 1


@dataclass(frozen=True)
class FadingParams:
    """Transition probabilities of the fading chain.

    ``p`` is Pr(good | good), ``r`` is Pr(good | bad), both per mini-slot.
    The closed interval is accepted here so degenerate chains can be
    simulated; experiment configs enforce ``0 < r <= p < 1``.
    """

    p: float
    r: float

    def __post_init__(self):
        if not (0.0 <= self.r <= self.p <= 1.0):
            raise ValueError(f"need 0 <= r <= p <= 1, got p={self.p}, r={self.r}")

    @property
    def delta(self) -> float:
        return self.p - self.r


class Belief(NamedTuple):
    origin: Origin
    steps: int = 0
    anchor: float = 0.0  # only meaningful for Origin.ANCHOR

    @classmethod
    def from_value(cls, value: float) -> "Belief":
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"belief must lie in [0, 1], got {value}")
        return cls(Origin.ANCHOR, 0, float(value))

    def base(self, params: FadingParams) -> float:
        if self.origin == Origin.GOOD:
            return params.p
        if self.origin == Origin.BAD:
            return params.r
        return self.anchor

    def value(self, params: FadingParams) -> float:
        return _closed_form(self.base(params), self.steps, params.p, params.r)


@lru_cache(maxsize=None)
def _closed_form(gamma: float, steps: int, p: float, r: float) -> float:
    if steps == 0:
        return gamma
    delta = p - r
    if delta == 1.0:
        return gamma
    dl = delta**steps
    return dl * gamma + r * (1.0 - dl) / (1.0 - delta)


def evolve(gamma: float, steps: int, params: FadingParams) -> float:
    """Numeric ``T^steps(gamma)``."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    return _closed_form(float(gamma), int(steps), params.p, params.r)


def one_step(belief: Belief, params: FadingParams) -> Belief:
    return belief._replace(steps=belief.steps + 1)


def propagate(belief: Belief, steps: int, params: FadingParams) -> Belief:
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    return belief._replace(steps=belief.steps + steps)


def steady_state(params: FadingParams) -> float:
    return params.r / (1.0 - params.p + params.r)


def posterior_from_feedback(f: int, params: FadingParams) -> Belief:
    if f not in (0, 1):
        raise ValueError(f"feedback must be 0 or 1, got {f!r}")
    return Belief(Origin.GOOD if f else Origin.BAD, 0)


def sample_fading_step(
    state: FadingState, params: FadingParams, rng: np.random.Generator
) -> FadingState:
    stay_good = params.p if state == FadingState.GOOD else params.r
    return FadingState.GOOD if rng.random() < stay_good else FadingState.BAD
