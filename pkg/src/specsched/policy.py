"""Finite-horizon solvers: optimal backward induction, greedy, randomized."""

from __future__ import annotations

import enum
from functools import lru_cache
from dataclasses import dataclass, field

from .model import (
    NOOP,
    Action,
    Mode,
    ModelConfig,
    SystemState,
    action_set,
    immediate_reward,
    slot_kernel,
)

# Action values closer than this count as ties; the lowest channel index wins.
TIE_TOL = 1e-12

# Reachable-state cap for the exact solvers.
MAX_STATES = 2_000_000


class InstanceTooLarge(RuntimeError):
    pass


class PolicyKind(str, enum.Enum):
    OPTIMAL = "optimal"
    GREEDY = "greedy"
    RANDOMIZED = "random"


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind = PolicyKind.OPTIMAL
    mode: Mode = Mode.ORIGINAL


@dataclass
class ValueTable:
    """Memoized ``state -> (value, best action)``; the slot index lives in the state."""

    entries: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, state):
        return state in self.entries

    def value(self, state: SystemState) -> float:
        return self.entries[state][0]

    def action(self, state: SystemState) -> Action:
        return self.entries[state][1]


def pick_best(values: list[tuple[Action, float]]) -> tuple[Action, float]:
    """Max over ``(action, value)`` pairs with lowest-index tie-breaking."""
    best = max(v for _, v in values)
    for a, v in values:
        if v >= best - TIE_TOL:
            return a, best
    raise AssertionError("unreachable")


def _continuation(state, a, cfg, mode, value_of):
    kernel = slot_kernel(state, a, cfg, mode)
    return sum(q * value_of(s) for q, s in kernel.branches)


def action_values(state: SystemState, cfg: ModelConfig, table: ValueTable,
                  mode: Mode = Mode.ORIGINAL) -> dict:
    """Value of each action at ``state``, continuing optimally per ``table``.

    ``table`` must come from a solve whose reachable set covers the successors
    of ``state`` (true for the solve's own initial state).
    """
    out = {}
    for a in action_set(state):
        v = immediate_reward(state, a, cfg)
        if state.t > 1 and cfg.beta > 0.0:
            v += cfg.beta * _continuation(state, a, cfg, Mode(mode), table.value)
        out[a] = v
    return out


def solve_optimal(
    cfg: ModelConfig,
    initial: SystemState,
    mode: Mode = Mode.ORIGINAL,
    max_states: int | None = None,
) -> tuple[float, ValueTable]:
    """Backward induction over the states reachable from ``initial``."""
    max_states = MAX_STATES if max_states is None else max_states
    if initial.t != cfg.horizon:
        raise ValueError(f"initial slot index {initial.t} != horizon {cfg.horizon}")
    mode = Mode(mode)
    table = ValueTable()
    memo = table.entries

    def value_of(state: SystemState) -> float:
        hit = memo.get(state)
        if hit is not None:
            return hit[0]
        if len(memo) >= max_states:
            raise InstanceTooLarge(f"more than {max_states} reachable states")
        scored = []
        for a in action_set(state):
            v = immediate_reward(state, a, cfg)
            if state.t > 1 and cfg.beta > 0.0:
                v += cfg.beta * _continuation(state, a, cfg, mode, value_of)
            scored.append((a, v))
        a, v = pick_best(scored)
        memo[state] = (v, a)
        return v

    return value_of(initial), table



@lru_cache(maxsize=64)
def solve_cached(cfg: ModelConfig, initial: SystemState, mode: Mode = Mode.ORIGINAL):
    """``solve_optimal`` memoized per instance; callers must not mutate the table."""
    return solve_optimal(cfg, initial, Mode(mode))


def greedy_action(state: SystemState, cfg: ModelConfig) -> Action:
    actions = action_set(state)
    if actions == [NOOP]:
        return NOOP
    return pick_best([(a, immediate_reward(state, a, cfg)) for a in actions])[0]


def random_policy_distribution(state: SystemState) -> dict[Action, float]:
    actions = action_set(state)
    return {a: 1.0 / len(actions) for a in actions}


def evaluate_policy(spec: PolicySpec, cfg: ModelConfig, initial: SystemState) -> float:
    """Exact expected discounted reward of ``spec`` from ``initial``."""
    return _evaluate(spec, cfg, initial)[0]


def _evaluate(spec: PolicySpec, cfg: ModelConfig, initial: SystemState,
              max_states: int | None = None):
    max_states = MAX_STATES if max_states is None else max_states
    if initial.t != cfg.horizon:
        raise ValueError(f"initial slot index {initial.t} != horizon {cfg.horizon}")
    kind, mode = PolicyKind(spec.kind), Mode(spec.mode)
    if kind == PolicyKind.OPTIMAL:
        value, table = solve_optimal(cfg, initial, mode, max_states)
        return value, table.entries
    memo: dict[SystemState, float] = {}

    def action_value(state, a):
        v = immediate_reward(state, a, cfg)
        if state.t > 1 and cfg.beta > 0.0:
            v += cfg.beta * _continuation(state, a, cfg, mode, value_of)
        return v

    def value_of(state: SystemState) -> float:
        hit = memo.get(state)
        if hit is not None:
            return hit
        if len(memo) >= max_states:
            raise InstanceTooLarge(f"more than {max_states} reachable states")
        if kind == PolicyKind.GREEDY:
            v = action_value(state, greedy_action(state, cfg))
        else:
            v = sum(w * action_value(state, a)
                    for a, w in random_policy_distribution(state).items())
        memo[state] = v
        return v

    return value_of(initial), memo
