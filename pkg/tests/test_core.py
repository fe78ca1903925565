import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdswarm.core import (InputError, NumericError, RandomSource, Schedule, SwarmState, Topology,
                          best_in_neighborhood, clamp_velocity, neighborhood, ring_table,
                          run_seed, schedule_value, sequential_update, update_pbest)


def make_state(fitness, n=2, seed=0):
    rng = np.random.default_rng(seed)
    m = len(fitness)
    x = rng.normal(size=(m, n))
    return SwarmState(x, np.zeros((m, n)), x.copy(), np.array(fitness, dtype=float))


# -- schedules ---------------------------------------------------------------


@pytest.mark.parametrize("n, expected", [(0, 0.9), (5000, 0.3), (2500, 0.6)])
def test_linear_schedule_points(n, expected):
    assert schedule_value(Schedule.linear(0.9, 0.3), n, 5000) == pytest.approx(expected, abs=1e-15)


def test_constant_schedule():
    s = Schedule.constant(0.7)
    assert s.end_value == 0.7
    assert schedule_value(s, 0, 10) == schedule_value(s, 10, 10) == 0.7


@pytest.mark.parametrize("n, n_max", [(11, 10), (-1, 10), (0, 0)])
def test_schedule_rejects_out_of_range(n, n_max):
    with pytest.raises(InputError):
        schedule_value(Schedule.linear(1, 0), n, n_max)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(1, 10_000), st.data())
def test_linear_schedule_monotone(a, b, n_max, data):
    s = Schedule.linear(a, b)
    n1 = data.draw(st.integers(0, n_max))
    n2 = data.draw(st.integers(n1, n_max))
    v1, v2 = schedule_value(s, n1, n_max), schedule_value(s, n2, n_max)
    lo, hi = min(a, b), max(a, b)
    assert lo - 1e-12 <= v1 <= hi + 1e-12
    if a >= b:
        assert v2 <= v1 + 1e-12
    else:
        assert v2 >= v1 - 1e-12


# -- clamp ---------------------------------------------------------------------


@pytest.mark.parametrize("v, vmax, out", [(5.0, 2.0, 2.0), (-5.0, 2.0, -2.0), (1.5, 2.0, 1.5)])
def test_clamp_examples(v, vmax, out):
    assert clamp_velocity(v, vmax) == out


@given(st.floats(-1e300, 1e300), st.floats(1e-6, 1e6))
def test_clamp_idempotent_and_bounded(v, vmax):
    once = clamp_velocity(v, vmax)
    assert clamp_velocity(once, vmax) == once
    assert -vmax <= once <= vmax


def test_clamp_errors():
    with pytest.raises(NumericError):
        clamp_velocity(math.nan, 1.0)
    with pytest.raises(NumericError):
        clamp_velocity(np.array([1.0, np.inf]), 1.0)
    with pytest.raises(InputError):
        clamp_velocity(1.0, 0.0)


def test_clamp_per_dimension():
    out = clamp_velocity(np.array([[3.0, -3.0]]), np.array([1.0, 2.0]))
    np.testing.assert_array_equal(out, [[1.0, -2.0]])


# -- pbest / neighborhood -------------------------------------------------------


def test_update_pbest_improvement_tie_nan():
    s = make_state([3.0, 5.0])
    update_pbest(s, 0, np.array([9.0, 9.0]), 1.0)
    assert s.pbest_fitness[0] == 1.0
    np.testing.assert_array_equal(s.pbest_positions[0], [9.0, 9.0])

    s = make_state([3.0, 5.0])
    before = s.pbest_positions.copy()
    update_pbest(s, 0, np.array([9.0, 9.0]), 3.0)
    update_pbest(s, 0, np.array([9.0, 9.0]), math.nan)
    update_pbest(s, 0, np.array([9.0, 9.0]), math.inf)
    assert s.pbest_fitness[0] == 3.0
    np.testing.assert_array_equal(s.pbest_positions, before)


def test_best_in_neighborhood_examples():
    assert best_in_neighborhood(make_state([3, 1, 2]), 0, Topology.GLOBAL) == 1
    assert best_in_neighborhood(make_state([3, 1, 2, 0, 9]), 0, Topology.RING) == 1
    assert best_in_neighborhood(make_state([1, 1, 1]), 2, Topology.GLOBAL) == 0


def test_ring_neighborhood_sets():
    assert list(neighborhood(0, 5, Topology.RING)) == [0, 1, 4]
    assert list(neighborhood(4, 5, Topology.RING)) == [0, 3, 4]
    assert ring_table(4).shape == (4, 3)
    with pytest.raises(InputError):
        ring_table(2)


def test_nan_fitness_is_infinite():
    s = SwarmState(np.zeros((2, 1)), np.zeros((2, 1)), np.zeros((2, 1)), [np.nan, 1.0])
    assert s.pbest_fitness[0] == np.inf
    assert s.gbest_index == 1


# -- sequential visiting order -------------------------------------------------


def sequential_oracle(state: SwarmState, fitness, topo):
    """Literal particle loop: update pbest i, then read i's neighborhood best."""
    s = state.copy()
    guides, guide_pos = [], []
    for i in range(s.m):
        update_pbest(s, i, s.positions[i].copy(), fitness[i])
        g = best_in_neighborhood(s, i, topo)
        guides.append(g)
        guide_pos.append(s.pbest_positions[g].copy())
    return s, np.array(guides), np.array(guide_pos)


fitness_values = st.one_of(st.integers(0, 4).map(float), st.just(math.nan), st.just(math.inf))


@settings(max_examples=300, deadline=None)
@given(st.integers(3, 9).flatmap(lambda m: st.tuples(
    st.lists(fitness_values, min_size=m, max_size=m),
    st.lists(fitness_values, min_size=m, max_size=m))),
    st.sampled_from(list(Topology)))
def test_sequential_update_matches_loop(values, topo):
    old, new = values
    m = len(old)
    rng = np.random.default_rng(m)
    s = SwarmState(rng.normal(size=(m, 2)), np.zeros((m, 2)), rng.normal(size=(m, 2)), old)
    expect_state, expect_guides, expect_pos = sequential_oracle(s, new, topo)
    guides, guide_pos = sequential_update(s, np.array(new), topo)
    np.testing.assert_array_equal(guides, expect_guides)
    np.testing.assert_array_equal(guide_pos, expect_pos)
    np.testing.assert_array_equal(s.pbest_fitness, expect_state.pbest_fitness)
    np.testing.assert_array_equal(s.pbest_positions, expect_state.pbest_positions)
    assert s.pbest_fitness[s.gbest_index] == s.pbest_fitness.min()
    assert s.gbest_index == int(np.argmin(s.pbest_fitness))


def test_sequential_update_sees_stale_later_pbest():
    # particle 2 improves to the best value, but particle 0 is visited first
    s = SwarmState(np.array([[0.0], [1.0], [2.0]]), np.zeros((3, 1)),
                   np.array([[10.0], [11.0], [12.0]]), [5.0, 6.0, 4.0])
    guides, pos = sequential_update(s, np.array([9.0, 9.0, 0.0]), Topology.GLOBAL)
    assert list(guides) == [2, 2, 2]
    assert pos[0, 0] == 12.0 and pos[1, 0] == 12.0  # stale position of particle 2
    assert pos[2, 0] == 2.0
    assert s.gbest_index == 2


# -- randomness ---------------------------------------------------------------


def test_random_source_determinism_and_range():
    a, b = RandomSource(7), RandomSource(7)
    np.testing.assert_array_equal(a.uniform(1000), b.uniform(1000))
    np.testing.assert_array_equal(a.normal(1000), b.normal(1000))
    u = RandomSource(1).uniform(100_000)
    assert u.min() > 0.0 and u.max() < 1.0
    z = RandomSource(2).normal(200_000)
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert abs(z.var() - 1.0) < 4 * math.sqrt(2 / z.size)


def test_run_seed_stride():
    assert run_seed(5, 3) == 8
    assert run_seed(5, 3, 2) == 2_000_008
