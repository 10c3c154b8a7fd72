#!/usr/bin/env python
"""Time the numba and numpy slot kernels on the same batch.

Also runs a full ``estimate`` under each backend in a subprocess, since the
backend is chosen once at import time from SPECSCHED_NUMBA.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from specsched import _kernels
from specsched import experiments as E
from specsched.sim import _stay_table


def make_batch(n, N, K, seed=0):
    rng = np.random.default_rng(seed)
    cfg = E.table2_config(1)
    phase = rng.integers(0, 2, (n, N)).astype(np.int8)
    age = rng.integers(0, 10, (n, N)).astype(np.int64)
    fad = rng.integers(0, 2, (n, N)).astype(np.int8)
    idle = phase == 0
    action = np.where(idle.any(axis=1), idle.argmax(axis=1), -1).astype(np.int64)
    u = rng.random((n, 2 * N * K))
    return fad, phase, age, action, u, K, cfg.fading.p, cfg.fading.r, _stay_table(cfg, 10 + K)


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        fresh = [a.copy() if isinstance(a, np.ndarray) else a for a in args]
        t0 = time.perf_counter()
        fn(*fresh, False)
        times.append(time.perf_counter() - t0)
    return min(times)


ESTIMATE_SNIPPET = """
import time
from specsched import experiments as E
from specsched.policy import PolicySpec, PolicyKind
from specsched.sim import SimConfig, estimate
cfg = E.table2_config(1)
s = E.both_idle(**E.TABLE2_INITIAL, horizon=6)
sim = SimConfig({n}, 0, cfg, s, PolicySpec(PolicyKind.GREEDY))
estimate(SimConfig(10, 0, cfg, s, sim.spec))
t0 = time.perf_counter()
r = estimate(sim)
print(time.perf_counter() - t0, r.mean)
"""


def time_estimate(flag, n):
    env = dict(os.environ, SPECSCHED_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", ESTIMATE_SNIPPET.format(n=n)],
                         env=env, check=True, capture_output=True, text=True).stdout.split()
    return float(out[0]), float(out[1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=200_000)
    ap.add_argument("--channels", type=int, default=2)
    ap.add_argument("--minislots", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--trajectories", type=int, default=100_000)
    args = ap.parse_args()

    batch = make_batch(args.rows, args.channels, args.minislots)
    print(f"slot kernel, {args.rows} rows, N={args.channels}, K={args.minislots}")
    t_np = best_of(_kernels.simulate_slot_numpy, batch, args.repeat)
    print(f"  numpy  {t_np * 1e3:8.2f} ms")
    if _kernels.HAVE_NUMBA:
        _kernels.simulate_slot_numba(*[a.copy() if isinstance(a, np.ndarray) else a for a in batch], False)
        t_nb = best_of(_kernels.simulate_slot_numba, batch, args.repeat)
        print(f"  numba  {t_nb * 1e3:8.2f} ms  ({t_np / t_nb:.1f}x)")
    else:
        print("  numba  unavailable")

    print(f"estimate, greedy, {args.trajectories} trajectories")
    for flag, label in (("0", "numpy"), ("1", "numba")):
        secs, mean = time_estimate(flag, args.trajectories)
        print(f"  {label}  {secs:8.3f} s  mean {mean:.12f}")


if __name__ == "__main__":
    main()
