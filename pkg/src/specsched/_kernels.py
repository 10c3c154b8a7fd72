"""Mini-slot simulation kernels.

``simulate_slot`` advances a batch of trajectories through one control slot.
The numba version is used when numba imports and ``SPECSCHED_NUMBA`` is not
set to ``0``; the numpy version is a vectorized drop-in with identical
results for identical uniforms.

``stay_tab[phase, x]`` holds the persistence probability for age ``x``; it
is filled from the occupancy model so both kernels compare against the same
doubles.

Uniform layout per slot (columns of ``u``): for mini-slot transition ``j``
and channel ``n``, occupancy draw at ``2 * (j * N + n)`` and fading draw at
``2 * (j * N + n) + 1``.
"""

from __future__ import annotations

import os

import numpy as np

IDLE, BUSY = 0, 1
NO_FEEDBACK = -1


def _numba_requested() -> bool:
    return os.environ.get("SPECSCHED_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


def simulate_slot_numpy(fad, phase, age, action, u, K, p, r, stay_tab, genie):
    """Vectorized slot update; mutates ``fad``, ``phase`` and ``age`` in place.

    Returns ``(reward, k0, feedback)``: packets delivered per trajectory, the
    last mini-slot with feedback (0 for no-op) and the last feedback value per
    channel (``NO_FEEDBACK`` where none was observed).
    """
    n, N = fad.shape
    rows = np.arange(n)
    scheduled = action >= 0
    a = np.where(scheduled, action, 0)
    if np.any(phase[rows[scheduled], a[scheduled]] != IDLE):
        raise AssertionError("scheduled a busy channel")
    reward = np.zeros(n)
    k0 = np.zeros(n, dtype=np.int64)
    feedback = np.full((n, N), NO_FEEDBACK, dtype=np.int8)
    sending = scheduled.copy()
    for j in range(K):
        # mini-slot j + 1: transmit while the PU has not returned
        reward += np.where(sending, fad[rows, a], 0)
        k0[sending] = j + 1
        if genie:
            feedback[sending] = fad[sending]
        else:
            feedback[rows[sending], a[sending]] = fad[rows[sending], a[sending]]
        # transition to the next mini-slot
        u_occ = u[:, 2 * j * N:2 * (j + 1) * N:2]
        u_fad = u[:, 2 * j * N + 1:2 * (j + 1) * N:2]
        stay = u_occ < stay_tab[phase, age + 1]
        age[:] = np.where(stay, age + 1, 0)
        phase[:] = np.where(stay, phase, 1 - phase)
        good_prob = np.where(fad == 1, p, r)
        fad[:] = (u_fad < good_prob).astype(fad.dtype)
        sending &= phase[rows, a] == IDLE
    return reward, k0, feedback


def _simulate_slot_loops(fad, phase, age, action, u, K, p, r, stay_tab, genie):
    n, N = fad.shape
    reward = np.zeros(n)
    k0 = np.zeros(n, dtype=np.int64)
    feedback = np.full((n, N), NO_FEEDBACK, dtype=np.int8)
    for i in range(n):
        a = action[i]
        sending = a >= 0
        if sending and phase[i, a] != IDLE:
            raise AssertionError("scheduled a busy channel")
        for j in range(K):
            if sending:
                reward[i] += fad[i, a]
                k0[i] = j + 1
                if genie:
                    for m in range(N):
                        feedback[i, m] = fad[i, m]
                else:
                    feedback[i, a] = fad[i, a]
            for m in range(N):
                col = 2 * (j * N + m)
                if u[i, col] < stay_tab[phase[i, m], age[i, m] + 1]:
                    age[i, m] += 1
                else:
                    age[i, m] = 0
                    phase[i, m] = 1 - phase[i, m]
                g = p if fad[i, m] == 1 else r
                fad[i, m] = 1 if u[i, col + 1] < g else 0
            if sending and phase[i, a] != IDLE:
                sending = False
    return reward, k0, feedback


try:
    if not _numba_requested():
        raise ImportError("numba disabled by SPECSCHED_NUMBA")
    from numba import njit

    simulate_slot_numba = njit(cache=True)(_simulate_slot_loops)
    HAVE_NUMBA = True
except ImportError:
    simulate_slot_numba = None
    HAVE_NUMBA = False


def simulate_slot(*args):
    if HAVE_NUMBA:
        return simulate_slot_numba(*args)
    return simulate_slot_numpy(*args)
