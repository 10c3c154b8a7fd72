"""Brute-force ground truth for tiny instances.

Enumerates every mini-slot-level joint trajectory of the *true* fading and
occupancy states.  The hidden fading state is tracked as a distribution
conditioned on the observable history (actions, feedback sequences, the
collision mini-slot and slot-start occupancies), so the optimal value is a
maximum over information sets, not a hindsight bound.

Nothing here goes through the belief algebra, the slot kernel or the DP
solver; only the persistence functions and the raw ``p``/``r`` are shared.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

from .model import Mode, ModelConfig, SystemState
from .occupancy import Phase, busy_persistence, idle_persistence
from .policy import InstanceTooLarge, PolicyKind, PolicySpec, TIE_TOL

MAX_BRANCHES = 10**7

GOOD, BAD = 1, 0
IDLE, BUSY = int(Phase.IDLE), int(Phase.BUSY)


@dataclass
class OracleResult:
    value: float
    mass: float  # total probability reaching the end of the horizon
    branches: int


class _Enumerator:
    def __init__(self, cfg: ModelConfig, mode: Mode, kind: PolicyKind):
        self.cfg = cfg
        self.mode = Mode(mode)
        self.kind = PolicyKind(kind)
        self.K = cfg.minislots
        self.N = cfg.n_channels
        self.branches = 0
        self.memo = {}
        self._occ_cache = {}
        self._fad_cache = {}

    def _tick(self, n=1):
        self.branches += n
        if self.branches > MAX_BRANCHES:
            raise InstanceTooLarge(f"oracle enumeration exceeded {MAX_BRANCHES} branches")

    def _occupancy_paths(self, occ):
        hit = self._occ_cache.get(occ)
        if hit is None:
            hit = self._occ_cache[occ] = self.occupancy_paths(occ)
        return hit

    def _fading_paths(self, start):
        hit = self._fad_cache.get(start)
        if hit is None:
            hit = self._fad_cache[start] = self.fading_paths(start)
        return hit

    def occupancy_paths(self, occ):
        """All K-step paths of one channel: list of (prob, [states at 1..K+1])."""
        paths = [(1.0, [occ])]
        occ_params = self.cfg.occupancy
        for _ in range(self.K):
            nxt = []
            for prob, path in paths:
                phase, age = path[-1]
                if phase == IDLE:
                    stay = idle_persistence(age + 1, occ_params)
                else:
                    stay = busy_persistence(age + 1, occ_params)
                nxt.append((prob * stay, path + [(phase, age + 1)]))
                nxt.append((prob * (1.0 - stay), path + [(1 - phase, 0)]))
            paths = [(q, pth) for q, pth in nxt if q > 0.0]
        return paths

    def fading_paths(self, start):
        """All K-step paths of one channel from a known true state."""
        p, r = self.cfg.fading.p, self.cfg.fading.r
        paths = [(1.0, [start])]
        for _ in range(self.K):
            nxt = []
            for prob, path in paths:
                g = p if path[-1] == GOOD else r
                nxt.append((prob * g, path + [GOOD]))
                nxt.append((prob * (1.0 - g), path + [BAD]))
            paths = [(q, pth) for q, pth in nxt if q > 0.0]
        return paths

    def expand(self, occs, particles, a, last):
        """Enumerate one control slot.

        Returns (expected reward, mass, {observation: (prob, {next truth: prob})}).
        Observations are not grouped in the final slot (``last``).
        """
        K, N = self.K, self.N
        # occupancy: group joint paths by (k0, next occupancies)
        per_channel = [self._occupancy_paths(o) for o in occs]
        occ_groups = defaultdict(float)
        self._tick(math.prod(len(paths) for paths in per_channel))
        for combo in itertools.product(*per_channel):
            prob = 1.0
            for q, _ in combo:
                prob *= q
            k0 = 0
            if a is not None:
                path = combo[a][1]
                assert path[0][0] == IDLE
                k0 = 1
                while k0 < K and path[k0][0] == IDLE:
                    k0 += 1
            nxt = tuple(path[-1] for _, path in combo)
            occ_groups[(k0, nxt)] += prob

        observed = []
        if a is not None:
            observed = list(range(N)) if self.mode == Mode.GENIE else [a]
        k0_mass = defaultdict(float)
        for (k0, _), w_occ in occ_groups.items():
            k0_mass[k0] += w_occ

        reward, mass = 0.0, 0.0
        out = {}
        if last:
            # only the scheduled channel's path pays; the rest marginalize to 1
            marginal = defaultdict(float)
            for truth, w_truth in particles.items():
                marginal[truth[a] if a is not None else GOOD] += w_truth
            for start, w_start in marginal.items():
                for q, path in self._fading_paths(start):
                    self._tick(len(k0_mass))
                    for k0, w_occ in k0_mass.items():
                        w = w_start * q * w_occ
                        mass += w
                        if a is not None:
                            reward += w * path[:k0].count(GOOD)
            return reward, mass, out
        for truth, w_truth in particles.items():
            chan_paths = [self._fading_paths(s) for s in truth]
            for combo in itertools.product(*chan_paths):
                w_fad = w_truth
                for q, _ in combo:
                    w_fad *= q
                nxt_truth = tuple(path[-1] for _, path in combo)
                # per collision mini-slot: packets delivered and what the server sees
                per_k0 = {}
                for k0 in k0_mass:
                    got = 0 if a is None else combo[a][1][:k0].count(GOOD)
                    seen = tuple(tuple(combo[n][1][:k0]) for n in observed)
                    per_k0[k0] = (got, seen)
                self._tick(len(occ_groups))
                for (k0, nxt_occ), w_occ in occ_groups.items():
                    w = w_fad * w_occ
                    got, seen = per_k0[k0]
                    mass += w
                    reward += w * got
                    key = (k0, nxt_occ, seen)
                    entry = out.get(key)
                    if entry is None:
                        entry = out[key] = [0.0, defaultdict(float)]
                    entry[0] += w
                    entry[1][nxt_truth] += w
        return reward, mass, out

    def value(self, t, occs, particles):
        """Returns (value, leaf mass) for normalized ``particles``."""
        # information states with equal conditional truth laws share a value
        key = (t, occs, tuple(sorted((s, round(q, 13)) for s, q in particles.items())))
        hit = self.memo.get(key)
        if hit is None:
            hit = self.memo[key] = self._value(t, occs, particles)
        return hit

    def _value(self, t, occs, particles):
        idle = [n for n, (ph, _) in enumerate(occs) if ph == IDLE]
        actions = idle if idle else [None]
        last = t <= 1 or self.cfg.beta == 0.0
        if self.kind == PolicyKind.GREEDY and len(actions) > 1:
            # the greedy choice needs only each action's immediate reward
            rewards = [self.expand(occs, particles, a, True)[0] for a in actions]
            best = max(rewards)
            actions = [next(a for a, rw in zip(actions, rewards) if rw >= best - TIE_TOL)]
        scored = {a: self.expand(occs, particles, a, last) for a in actions}

        def action_value(a):
            reward, mass, groups = scored[a]
            if last:
                return reward, mass
            future, mass = 0.0, 0.0
            for (_, nxt_occ, _), (prob, truth_mass) in groups.items():
                cond = {s: q / prob for s, q in truth_mass.items()}
                v, m = self.value(t - 1, nxt_occ, cond)
                future += prob * v
                mass += prob * m
            return reward + self.cfg.beta * future, mass

        if actions == [None]:
            return action_value(None)
        if self.kind == PolicyKind.RANDOMIZED:
            vals = [action_value(a) for a in actions]
            n = len(vals)
            return sum(v for v, _ in vals) / n, sum(m for _, m in vals) / n
        if self.kind == PolicyKind.GREEDY:
            return action_value(actions[0])
        vals = [action_value(a) for a in actions]
        best = max(v for v, _ in vals)
        return next(vm for vm in vals if vm[0] >= best - TIE_TOL)


def _initial_particles(initial: SystemState, cfg: ModelConfig):
    """Joint distribution of the true fading states given the initial beliefs."""
    marg = [ch.belief.value(cfg.fading) for ch in initial.channels]
    out = {}
    for truth in itertools.product((GOOD, BAD), repeat=len(marg)):
        w = 1.0
        for s, g in zip(truth, marg):
            w *= g if s == GOOD else 1.0 - g
        if w > 0.0:
            out[truth] = w
    return out


def enumerate_oracle(
    cfg: ModelConfig,
    initial: SystemState,
    mode: Mode = Mode.ORIGINAL,
    spec: PolicySpec | None = None,
) -> OracleResult:
    kind = PolicyKind.OPTIMAL if spec is None else PolicyKind(spec.kind)
    if initial.t != cfg.horizon:
        raise ValueError(f"initial slot index {initial.t} != horizon {cfg.horizon}")
    enum_ = _Enumerator(cfg, mode, kind)
    occs = tuple((int(ch.occ.phase), ch.occ.age) for ch in initial.channels)
    value, mass = enum_.value(initial.t, occs, _initial_particles(initial, cfg))
    return OracleResult(value, mass, enum_.branches)


def oracle_value(
    cfg: ModelConfig,
    initial: SystemState,
    mode: Mode = Mode.ORIGINAL,
    spec: PolicySpec | None = None,
) -> float:
    return enumerate_oracle(cfg, initial, mode, spec).value
