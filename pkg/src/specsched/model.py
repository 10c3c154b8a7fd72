"""System state, rewards and the exact one-control-slot transition kernel."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

from .fading import Belief, FadingParams, Origin, evolve
from .occupancy import (
    OccupancyParams,
    OccupancyState,
    Phase,
    idle_persistence,
    k0_distribution,
    k_step_distribution,
    post_return_distribution,
)

Action = Optional[int]  # channel index (0-based) or None for no-op
NOOP: Action = None


class Mode(str, enum.Enum):
    ORIGINAL = "original"
    GENIE = "genie"


class InvalidAction(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    n_channels: int
    minislots: int
    beta: float
    horizon: int
    fading: FadingParams
    occupancy: OccupancyParams

    def __post_init__(self):
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        if self.minislots < 1:
            raise ValueError("minislots must be >= 1")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def K(self) -> int:
        return self.minislots


class Channel(NamedTuple):
    occ: OccupancyState
    belief: Belief


class SystemState(NamedTuple):
    channels: tuple[Channel, ...]
    t: int

    @classmethod
    def build(cls, phases, ages, beliefs, t: int) -> "SystemState":
        """Convenience constructor from per-channel phases, ages and beliefs.

        Beliefs may be given as floats (anchors) or :class:`Belief` values.
        """
        if not len(phases) == len(ages) == len(beliefs):
            raise ValueError("phases, ages and beliefs must have equal length")
        chans = []
        for ph, age, b in zip(phases, ages, beliefs):
            if age < 0:
                raise ValueError("ages must be nonnegative")
            if not isinstance(b, Belief):
                b = Belief.from_value(b)
            chans.append(Channel(OccupancyState(Phase(ph), int(age)), b))
        return cls(tuple(chans), int(t))

    def idle_channels(self) -> list[int]:
        return [n for n, ch in enumerate(self.channels) if ch.occ.phase == Phase.IDLE]


class SlotKernel(NamedTuple):
    branches: tuple[tuple[float, SystemState], ...]
    mode: Mode


def action_set(state: SystemState) -> list[Action]:
    idle = state.idle_channels()
    return idle if idle else [NOOP]


def _check_action(state: SystemState, a: Action) -> None:
    if a is None:
        if state.idle_channels():
            raise InvalidAction("no-op is only allowed when every channel is busy")
        return
    if not 0 <= a < len(state.channels):
        raise InvalidAction(f"channel index {a} out of range")
    if state.channels[a].occ.phase != Phase.IDLE:
        raise InvalidAction(f"channel {a} is busy and cannot be scheduled")


def immediate_reward(state: SystemState, a: Action, cfg: ModelConfig) -> float:
    """Expected number of successful SU packets in the current control slot.

    Weighted-sum form: ``sum_z Pr(k0 = z) * sum_{k<=z} T^{k-1}(belief)``.
    """
    if a is None:
        return 0.0
    _check_action(state, a)
    return _weighted_reward(state.channels[a], cfg.minislots, cfg.fading, cfg.occupancy)


@lru_cache(maxsize=None)
def _weighted_reward(ch: Channel, K: int, fading: FadingParams, occ: OccupancyParams):
    pz = k0_distribution(ch.occ.age, K, occ)
    gamma = ch.belief.value(fading)
    total, partial = 0.0, 0.0
    for z in range(1, K + 1):
        partial += evolve(gamma, z - 1, fading)
        total += pz[z - 1] * partial
    return total


def survival_form_reward(state: SystemState, a: Action, cfg: ModelConfig) -> float:
    """Same reward as a sum over mini-slots of Pr(idle so far) * Pr(good)."""
    if a is None:
        return 0.0
    _check_action(state, a)
    ch = state.channels[a]
    gamma = ch.belief.value(cfg.fading)
    total, still_idle = gamma, 1.0
    for k in range(2, cfg.minislots + 1):
        still_idle *= idle_persistence(ch.occ.age + k - 1, cfg.occupancy)
        total += still_idle * evolve(gamma, k - 1, cfg.fading)
    return total


def _feedback_branches(belief: Belief, k0: int, cfg: ModelConfig):
    """(prob, next belief) pairs for one channel's feedback at mini-slot k0."""
    good = evolve(belief.value(cfg.fading), k0 - 1, cfg.fading)
    rest = cfg.minislots - k0
    out = []
    if good > 0.0:
        out.append((good, Belief(Origin.GOOD, rest)))
    if good < 1.0:
        out.append((1.0 - good, Belief(Origin.BAD, rest)))
    return out


def _product(factors):
    """Cartesian product of per-channel (prob, item) lists."""
    combos = [(1.0, ())]
    for options in factors:
        combos = [
            (prob * q, items + (item,)) for prob, items in combos for q, item in options
        ]
    return combos


def slot_kernel(
    state: SystemState, a: Action, cfg: ModelConfig, mode: Mode = Mode.ORIGINAL
) -> SlotKernel:
    """Exact distribution over next slot-start states after taking ``a``."""
    _check_action(state, a)
    return _slot_kernel(state, a, cfg, Mode(mode))


def _channel_options(occ_opts, belief_opts):
    return [(qo * qb, Channel(o, b)) for qo, o in occ_opts for qb, b in belief_opts]


@lru_cache(maxsize=1 << 18)
def _slot_kernel(state: SystemState, a: Action, cfg: ModelConfig, mode: Mode):
    K = cfg.minislots
    t_next = state.t - 1
    merged: dict[SystemState, float] = defaultdict(float)

    def unscheduled(ch, feedback_at=None):
        occ = [(q, o) for o, q in k_step_distribution(ch.occ, K, cfg.occupancy).items()]
        if feedback_at is None:
            beliefs = [(1.0, ch.belief._replace(steps=ch.belief.steps + K))]
        else:
            beliefs = _feedback_branches(ch.belief, feedback_at, cfg)
        return _channel_options(occ, beliefs)

    if a is None:
        for q, chans in _product(unscheduled(ch) for ch in state.channels):
            merged[SystemState(chans, t_next)] += q
    else:
        x = state.channels[a].occ.age
        pz = k0_distribution(x, K, cfg.occupancy)
        for z in range(1, K + 1):
            w = pz[z - 1]
            if w <= 0.0:
                continue
            per_channel = []
            for n, ch in enumerate(state.channels):
                if n == a:
                    dist = post_return_distribution(x, z, K, cfg.occupancy)
                    per_channel.append(_channel_options(
                        [(q, o) for o, q in dist.items()],
                        _feedback_branches(ch.belief, z, cfg),
                    ))
                elif mode == Mode.GENIE:
                    per_channel.append(unscheduled(ch, feedback_at=z))
                else:
                    per_channel.append(unscheduled(ch))
            for q, chans in _product(per_channel):
                merged[SystemState(chans, t_next)] += w * q
    branches = tuple((q, s) for s, q in merged.items() if q > 0.0)
    return SlotKernel(branches, mode)


def discounted_recursion(
    state: SystemState,
    a: Action,
    cfg: ModelConfig,
    mode: Mode,
    continuation: Callable[[SystemState], float],
) -> float:
    reward = immediate_reward(state, a, cfg)
    if state.t <= 1 or cfg.beta == 0.0:
        return reward
    kernel = slot_kernel(state, a, cfg, mode)
    return reward + cfg.beta * sum(q * continuation(s) for q, s in kernel.branches)
