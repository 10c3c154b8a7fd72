"""Seeded Monte Carlo simulation of ground-truth trajectories.

Trajectories are generated in fixed blocks of ``BLOCK`` rows.  Block ``b``
draws its uniforms from ``default_rng([seed, b])``, so trajectory ``i`` is a
function of ``(seed, i)`` alone: results do not depend on how many
trajectories are requested alongside it or on how blocks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .fading import Belief, FadingState, Origin
from .model import Channel, Mode, ModelConfig, SystemState
from .occupancy import OccupancyState, Phase, busy_persistence, idle_persistence
from .policy import PolicyKind, PolicySpec, greedy_action, solve_cached

BLOCK = 4096


@dataclass(frozen=True)
class SimConfig:
    n_trajectories: int
    seed: int
    cfg: ModelConfig
    initial: SystemState
    spec: PolicySpec = PolicySpec()

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.initial.t != self.cfg.horizon:
            raise ValueError("initial slot index must equal the horizon")


@dataclass
class SimResult:
    mean: float
    std_error: float
    n: int
    degenerate: bool = False  # single sample: std_error is not an estimate
    scheduled: list[int] = field(default_factory=list)  # per slot, first slot first
    collisions: list[int] = field(default_factory=list)  # PU returned mid-slot
    idle_slots: list[int] = field(default_factory=list)  # no channel idle: no-op

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n": self.n,
            "degenerate": self.degenerate,
            "scheduled": self.scheduled,
            "collisions": self.collisions,
            "noop": self.idle_slots,
        }


def draws_per_trajectory(cfg: ModelConfig) -> int:
    N, K = cfg.n_channels, cfg.minislots
    return N + cfg.horizon * (2 * N * K + 1)


def reward_bound(cfg: ModelConfig) -> float:
    return cfg.minislots * sum(cfg.beta**s for s in range(cfg.horizon))


def sample_initial_truth(initial: SystemState, cfg: ModelConfig, rng: np.random.Generator):
    """Draw true fading states from the beliefs; occupancy is observed exactly."""
    fading = [
        FadingState.GOOD if rng.random() < ch.belief.value(cfg.fading) else FadingState.BAD
        for ch in initial.channels
    ]
    return fading, [ch.occ for ch in initial.channels]


def _stay_table(cfg: ModelConfig, max_age: int) -> np.ndarray:
    tab = np.ones((2, max_age + 2))
    for x in range(1, max_age + 2):
        tab[Phase.IDLE, x] = idle_persistence(x, cfg.occupancy)
        tab[Phase.BUSY, x] = busy_persistence(x, cfg.occupancy)
    return tab


class _Runner:
    """Holds per-configuration tables shared by every block."""

    def __init__(self, sim: SimConfig):
        self.sim = sim
        cfg = sim.cfg
        self.cfg = cfg
        self.kind = PolicyKind(sim.spec.kind)
        self.mode = Mode(sim.spec.mode)
        self.N, self.K, self.m = cfg.n_channels, cfg.minislots, cfg.horizon
        self.D = draws_per_trajectory(cfg)
        max_age = max(ch.occ.age for ch in sim.initial.channels) + self.m * self.K
        self.stay_tab = _stay_table(cfg, max_age)
        # anchors are coded 2, 3, ...; feedback origins are 0 (good) and 1 (bad)
        self.anchors = sorted({ch.belief.anchor for ch in sim.initial.channels
                               if ch.belief.origin == Origin.ANCHOR})
        self.table = None
        if self.kind == PolicyKind.OPTIMAL:
            self.table = solve_cached(cfg, sim.initial, self.mode)[1]
        self.decisions: dict[tuple, int] = {}

    def _encode_belief(self, b: Belief) -> tuple[int, int]:
        if b.origin == Origin.ANCHOR:
            return 2 + self.anchors.index(b.anchor), b.steps
        return int(b.origin), b.steps

    def _decode(self, row, t: int) -> SystemState:
        N = self.N
        chans = []
        for n in range(N):
            code, steps = int(row[2 * N + n]), int(row[3 * N + n])
            if code >= 2:
                belief = Belief(Origin.ANCHOR, steps, self.anchors[code - 2])
            else:
                belief = Belief(Origin(code), steps)
            chans.append(Channel(OccupancyState(Phase(int(row[n])), int(row[N + n])), belief))
        return SystemState(tuple(chans), t)

    def _decide(self, row, t: int) -> int:
        key = (t,) + tuple(int(v) for v in row)
        hit = self.decisions.get(key)
        if hit is not None:
            return hit
        state = self._decode(row, t)
        if self.kind == PolicyKind.OPTIMAL:
            if state not in self.table:
                raise KeyError("simulated state missing from the value table")
            a = self.table.action(state)
        else:
            a = greedy_action(state, self.cfg)
        self.decisions[key] = hit = -1 if a is None else a
        return hit

    def _actions(self, phase, age, origin, steps, u_pol, t):
        obs = np.concatenate([phase, age, origin, steps], axis=1)
        uniq, inv = np.unique(obs, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        if self.kind == PolicyKind.RANDOMIZED:
            idle = uniq[:, :self.N] == Phase.IDLE
            n_idle = idle.sum(axis=1)[inv]
            pick = np.minimum((u_pol * n_idle).astype(np.int64), np.maximum(n_idle - 1, 0))
            # position of the pick-th idle channel in each row
            rank = np.cumsum(idle[inv], axis=1) - 1
            hit = idle[inv] & (rank == pick[:, None])
            return np.where(n_idle > 0, hit.argmax(axis=1), -1).astype(np.int64)
        per_row = np.array([self._decide(row, t) for row in uniq], dtype=np.int64)
        return per_row[inv]

    def run(self, u: np.ndarray):
        """Simulate rows of ``u``; returns per-trajectory rewards and counters."""
        cfg, N, K, m = self.cfg, self.N, self.K, self.m
        n = u.shape[0]
        init = self.sim.initial
        values = np.array([ch.belief.value(cfg.fading) for ch in init.channels])
        fad = (u[:, :N] < values).astype(np.int8)
        phase = np.tile(np.array([ch.occ.phase for ch in init.channels], dtype=np.int8), (n, 1))
        age = np.tile(np.array([ch.occ.age for ch in init.channels], dtype=np.int64), (n, 1))
        codes = [self._encode_belief(ch.belief) for ch in init.channels]
        origin = np.tile(np.array([c for c, _ in codes], dtype=np.int64), (n, 1))
        steps = np.tile(np.array([s for _, s in codes], dtype=np.int64), (n, 1))

        total = np.zeros(n)
        scheduled, collisions, noops = [], [], []
        rows = np.arange(n)
        width = 2 * N * K + 1
        for s in range(m):
            t = m - s
            base = N + s * width
            action = self._actions(phase, age, origin, steps, u[:, base], t)
            slot_u = np.ascontiguousarray(u[:, base + 1:base + width])
            reward, k0, fb = _kernels.simulate_slot(
                fad, phase, age, action, slot_u, K, cfg.fading.p, cfg.fading.r,
                self.stay_tab, self.mode == Mode.GENIE,
            )
            assert np.all(reward <= K)
            total += cfg.beta**s * reward

            sched = action >= 0
            steps += K
            if self.mode == Mode.GENIE:
                origin[sched] = 1 - fb[sched]
                steps[sched] = (K - k0[sched])[:, None]
            else:
                r_s, a_s = rows[sched], action[sched]
                origin[r_s, a_s] = 1 - fb[r_s, a_s]
                steps[r_s, a_s] = K - k0[sched]
            scheduled.append(int(sched.sum()))
            collisions.append(int((sched & (k0 < K)).sum()))
            noops.append(int((~sched).sum()))
        return total, scheduled, collisions, noops


def _block_uniforms(seed: int, block: int, D: int) -> np.ndarray:
    return np.random.default_rng([seed, block]).random((BLOCK, D))


def run_trajectory(sim: SimConfig, index: int) -> float:
    """Discounted reward of trajectory ``index``; a pure function of (seed, index)."""
    runner = _Runner(sim)
    block, row = divmod(index, BLOCK)
    u = _block_uniforms(sim.seed, block, runner.D)[row:row + 1]
    return float(runner.run(u)[0][0])


def trajectory_rewards(sim: SimConfig) -> np.ndarray:
    runner = _Runner(sim)
    return _collect(sim, runner)[0]


def _collect(sim: SimConfig, runner: _Runner):
    n = sim.n_trajectories
    parts = []
    counters = np.zeros((3, sim.cfg.horizon), dtype=np.int64)
    for block in range(math.ceil(n / BLOCK)):
        take = min(BLOCK, n - block * BLOCK)
        u = _block_uniforms(sim.seed, block, runner.D)[:take]
        rewards, sched, coll, noop = runner.run(u)
        parts.append(rewards)
        counters += np.array([sched, coll, noop])
    return np.concatenate(parts), counters


def estimate(sim: SimConfig) -> SimResult:
    runner = _Runner(sim)
    rewards, counters = _collect(sim, runner)
    n = rewards.size
    mean = float(rewards.mean())
    if n == 1:
        se, degenerate = 0.0, True
    else:
        se, degenerate = float(rewards.std(ddof=1) / math.sqrt(n)), False
    return SimResult(
        mean=mean,
        std_error=se,
        n=n,
        degenerate=degenerate,
        scheduled=counters[0].tolist(),
        collisions=counters[1].tolist(),
        idle_slots=counters[2].tolist(),
    )
