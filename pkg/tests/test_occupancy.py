import itertools
from collections import defaultdict

import numpy as np
import pytest

from specsched.occupancy import (
    OccupancyParams,
    OccupancyState,
    Phase,
    busy_persistence,
    conditional_idle_curve,
    idle_persistence,
    insignificance_threshold,
    k0_distribution,
    k_step_distribution,
    post_return_distribution,
    step,
)

IDLE, BUSY = Phase.IDLE, Phase.BUSY
U1 = OccupancyParams(1, 1.0, 2.0)


def brute_force_paths(start, steps, params):
    """Every mini-slot path, probabilities multiplied out by hand."""
    out = defaultdict(float)
    for flips in itertools.product((False, True), repeat=steps):
        phase, age, prob = start.phase, start.age, 1.0
        for flip in flips:
            stay = 1.0 / ((age + 1) ** params.u + (params.c_idle if phase == IDLE else params.c_busy))
            if flip:
                prob *= 1 - stay
                phase, age = Phase(1 - phase), 0
            else:
                prob *= stay
                age += 1
        out[OccupancyState(phase, age)] += prob
    return out


@pytest.mark.parametrize("x, u, expected", [(1, 1, 0.5), (2, 3, 1 / 9), (6, 1, 1 / 7)])
def test_idle_persistence(x, u, expected):
    assert idle_persistence(x, OccupancyParams(u, 1.0, 2.0)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("x, u, expected", [(1, 1, 1 / 3), (2, 1, 0.25), (1, 5, 1 / 3)])
def test_busy_persistence(x, u, expected):
    assert busy_persistence(x, OccupancyParams(u, 1.0, 2.0)) == pytest.approx(expected, rel=1e-15)


def test_persistence_rejects_age_zero():
    with pytest.raises(ValueError):
        idle_persistence(0, U1)
    with pytest.raises(ValueError):
        busy_persistence(0, U1)


def test_params_validation():
    with pytest.raises(ValueError):
        OccupancyParams(0, 1.0, 1.0)
    with pytest.raises(ValueError):
        OccupancyParams(1, 0.0, 1.0)


def test_k0_examples():
    np.testing.assert_allclose(k0_distribution(10, 2, U1), [11 / 12, 1 / 12], rtol=1e-15)
    np.testing.assert_array_equal(k0_distribution(7, 1, U1), [1.0])
    np.testing.assert_allclose(k0_distribution(1, 3, U1), [2 / 3, 1 / 4, 1 / 12], rtol=1e-14)


@pytest.mark.parametrize("u", [1, 3, 5])
@pytest.mark.parametrize("K", [2, 3, 4, 5])
def test_k0_components_monotone_in_age(u, K):
    params = OccupancyParams(u, 1.0, 2.0)
    for x in range(51):
        base = k0_distribution(x, K, params)
        for d in range(1, 6):
            later = k0_distribution(x + d, K, params)
            assert base[0] < later[0]
            assert np.all(base[1:] > later[1:])


@pytest.mark.parametrize("x", range(0, 30, 3))
@pytest.mark.parametrize("K", range(1, 7))
def test_k0_normalized_and_consistent(x, K):
    probs = k0_distribution(x, K, U1)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    for k in range(1, K + 1):
        tail = probs[k - 1:].sum()
        survive = np.prod([idle_persistence(x + j, U1) for j in range(1, k)])
        assert tail == pytest.approx(survive, abs=1e-12)


def test_step_examples_and_frequency():
    rng = np.random.default_rng(3)
    n = 100_000
    stays = sum(step(OccupancyState(IDLE, 10), U1, rng) == (IDLE, 11) for _ in range(n))
    assert abs(stays / n - 1 / 12) <= 3 * np.sqrt((1 / 12) * (11 / 12) / n)
    outcomes = {step(OccupancyState(BUSY, 1), U1, rng) for _ in range(200)}
    assert outcomes == {(BUSY, 2), (IDLE, 0)}
    stays = sum(step(OccupancyState(BUSY, 1), U1, rng) == (BUSY, 2) for _ in range(n))
    assert abs(stays / n - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / n)


def test_k_step_examples():
    occ = OccupancyState(IDLE, 5)
    assert k_step_distribution(occ, 0, U1) == {occ: 1.0}
    dist = k_step_distribution(occ, 1, U1)
    assert dist.keys() == {(IDLE, 6), (BUSY, 0)}
    assert dist[(IDLE, 6)] == pytest.approx(1 / 7)
    assert dist[(BUSY, 0)] == pytest.approx(6 / 7)


@pytest.mark.parametrize("start", [OccupancyState(IDLE, 0), OccupancyState(BUSY, 0),
                                   OccupancyState(IDLE, 4), OccupancyState(BUSY, 3)])
@pytest.mark.parametrize("steps", [1, 2, 3, 5])
@pytest.mark.parametrize("u", [1, 3])
def test_k_step_matches_brute_force(start, steps, u):
    params = OccupancyParams(u, 1.0, 2.0)
    got = k_step_distribution(start, steps, params)
    want = brute_force_paths(start, steps, params)
    assert got.keys() == want.keys()
    for s in want:
        assert got[s] == pytest.approx(want[s], abs=1e-14)
    assert sum(got.values()) == pytest.approx(1.0, abs=1e-12)


def test_post_return_examples():
    dist = post_return_distribution(5, 2, 2, U1)
    assert dist == pytest.approx({(IDLE, 7): 1 / 8, (BUSY, 0): 7 / 8})
    for x in (0, 3, 9):
        dist = post_return_distribution(x, 1, 2, U1)
        assert dist == pytest.approx({(BUSY, 1): 1 / 3, (IDLE, 0): 2 / 3})


def test_post_return_brute_force():
    # k0 = 1 with K = 3: busy at mini-slot 2, then two more transitions
    want = brute_force_paths(OccupancyState(BUSY, 0), 2, U1)
    got = post_return_distribution(4, 1, 3, U1)
    assert got == pytest.approx(dict(want), abs=1e-14)
    assert sum(got.values()) == pytest.approx(1.0, abs=1e-12)


def test_post_return_is_conditional_on_k0():
    # mixing the conditionals by k0 must reproduce the unconditional K-step law
    for x, K in [(0, 2), (3, 3), (10, 4)]:
        mix = defaultdict(float)
        pz = k0_distribution(x, K, U1)
        for z in range(1, K + 1):
            for s, q in post_return_distribution(x, z, K, U1).items():
                mix[s] += pz[z - 1] * q
        want = k_step_distribution(OccupancyState(IDLE, x), K, U1)
        assert dict(mix) == pytest.approx(want, abs=1e-14)


def test_post_return_rejects_bad_k0():
    with pytest.raises(ValueError):
        post_return_distribution(1, 0, 2, U1)
    with pytest.raises(ValueError):
        post_return_distribution(1, 3, 2, U1)


def test_curves():
    series = conditional_idle_curve(U1, IDLE, 3)
    assert [x for x, _ in series] == [1, 2, 3]
    assert [v for _, v in series] == pytest.approx([0.5, 1 / 3, 0.25])
    busy = dict(conditional_idle_curve(U1, BUSY, 2))
    assert busy[2] == pytest.approx(0.75)


def test_thresholds_ordered():
    x0 = {}
    for u in (1, 3, 5):
        series = conditional_idle_curve(OccupancyParams(u, 1.0, 2.0), IDLE, 30)
        x0[u] = insignificance_threshold([v for _, v in series])
    assert x0 == {1: 9, 3: 4, 5: 3}
    assert x0[5] < x0[3] < x0[1]


@pytest.mark.parametrize("fn", [idle_persistence, busy_persistence])
def test_persistence_monotone(fn):
    for u in (1, 2, 3, 5):
        params = OccupancyParams(u, 1.0, 2.0)
        vals = [fn(x, params) for x in range(1, 40)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
    for x in range(2, 20):
        by_u = [fn(x, OccupancyParams(u, 1.0, 2.0)) for u in (1, 2, 3, 5)]
        assert all(a > b for a, b in zip(by_u, by_u[1:]))
