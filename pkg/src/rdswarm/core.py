"""Shared swarm machinery: state, schedules, topologies, bookkeeping and RNG.

Everything here is algorithm-agnostic.  The update rules themselves live in
:mod:`rdswarm.pso_baselines` and :mod:`rdswarm.rdpso`; both drive the same
:class:`SwarmState` through :func:`sequential_update`, which reproduces the
particle-by-particle pbest/gbest bookkeeping of the reference procedure with
array operations.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

ArrayLike = Union[float, Sequence[float], np.ndarray]


class InputError(ValueError):
    """A caller violated an operation's precondition."""


class NumericError(ArithmeticError):
    """A value that must be finite was not."""


# --------------------------------------------------------------------------
# Randomness
# --------------------------------------------------------------------------


class RandomSource:
    """Seeded stream of uniform(0, 1) and standard-normal draws.

    A thin wrapper over :class:`numpy.random.Generator` (PCG64).  Two
    sources built from the same seed yield bit-identical draws as long as
    the same sequence of calls is made.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, size=None) -> np.ndarray:
        """Draws from the open interval (0, 1)."""
        u = self._gen.random(size)
        if np.ndim(u) == 0:
            while u == 0.0:
                u = self._gen.random()
            return u
        zero = u == 0.0
        while zero.any():
            u[zero] = self._gen.random(int(zero.sum()))
            zero = u == 0.0
        return u

    def normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size)

    def uniform_between(self, lo: np.ndarray, hi: np.ndarray, size) -> np.ndarray:
        return lo + (hi - lo) * self.uniform(size)


def run_seed(base_seed: int, run_index: int, cell_index: int = 0) -> int:
    """Seed of one run; sweep cells are strided by 10**6 to keep streams apart."""
    return int(base_seed) + int(run_index) + 1_000_000 * int(cell_index)


# --------------------------------------------------------------------------
# Parameter schedules
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    kind: str
    start_value: float
    end_value: float

    def __post_init__(self):
        if self.kind not in ("constant", "linear"):
            raise InputError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "constant" and self.start_value != self.end_value:
            raise InputError("constant schedule needs start_value == end_value")

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls("constant", float(value), float(value))

    @classmethod
    def linear(cls, start: float, end: float) -> "Schedule":
        return cls("linear", float(start), float(end))

    def value(self, n: int, n_max: int) -> float:
        return schedule_value(self, n, n_max)

    def __str__(self):
        if self.kind == "constant":
            return f"{self.start_value:g}"
        return f"{self.start_value:g}->{self.end_value:g}"


def schedule_value(s: Schedule, n: int, n_max: int) -> float:
    """Value of schedule `s` at iteration `n` of `n_max`."""
    if n_max < 1:
        raise InputError(f"n_max must be >= 1, got {n_max}")
    if n < 0 or n > n_max:
        raise InputError(f"iteration {n} outside [0, {n_max}]")
    if s.kind == "constant":
        return s.start_value
    if n == n_max:
        return s.end_value
    return s.start_value - (s.start_value - s.end_value) * n / n_max


# --------------------------------------------------------------------------
# Topology
# --------------------------------------------------------------------------


class Topology(str, enum.Enum):
    GLOBAL = "global"
    RING = "ring"


def neighborhood(i: int, m: int, topo: Topology) -> np.ndarray:
    """Indices visible to particle `i`, in ascending order."""
    if topo is Topology.GLOBAL:
        return np.arange(m)
    if m < 3:
        raise InputError(f"ring topology needs at least 3 particles, got {m}")
    return np.sort(np.array([(i - 1) % m, i, (i + 1) % m]))


def ring_table(m: int) -> np.ndarray:
    """(m, 3) array of each particle's ring neighborhood, rows sorted."""
    if m < 3:
        raise InputError(f"ring topology needs at least 3 particles, got {m}")
    i = np.arange(m)
    return np.sort(np.stack([(i - 1) % m, i, (i + 1) % m], axis=1), axis=1)


# --------------------------------------------------------------------------
# Swarm state
# --------------------------------------------------------------------------


@dataclass
class SwarmState:
    positions: np.ndarray
    velocities: np.ndarray
    pbest_positions: np.ndarray
    pbest_fitness: np.ndarray
    gbest_index: Optional[int] = None
    iteration: int = 0

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float, ndmin=2)
        self.velocities = np.array(self.velocities, dtype=float, ndmin=2)
        self.pbest_positions = np.array(self.pbest_positions, dtype=float, ndmin=2)
        self.pbest_fitness = _sanitize(np.array(self.pbest_fitness, dtype=float, ndmin=1))
        shape = self.positions.shape
        if self.velocities.shape != shape or self.pbest_positions.shape != shape:
            raise InputError("positions, velocities and pbest_positions must share a shape")
        if self.pbest_fitness.shape != (shape[0],):
            raise InputError("pbest_fitness must have one entry per particle")
        if self.gbest_index is None:
            self.gbest_index = int(np.argmin(self.pbest_fitness))

    @classmethod
    def from_positions(cls, positions, velocities, fitness) -> "SwarmState":
        """Fresh state whose pbests are the current positions."""
        positions = np.array(positions, dtype=float, ndmin=2)
        fitness = _sanitize(np.array(fitness, dtype=float, ndmin=1))
        return cls(positions, velocities, positions.copy(), fitness,
                   int(np.argmin(fitness)), 0)

    @property
    def m(self) -> int:
        return self.positions.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def gbest_position(self) -> np.ndarray:
        return self.pbest_positions[self.gbest_index]

    @property
    def gbest_fitness(self) -> float:
        return float(self.pbest_fitness[self.gbest_index])

    def copy(self) -> "SwarmState":
        return SwarmState(self.positions.copy(), self.velocities.copy(),
                          self.pbest_positions.copy(), self.pbest_fitness.copy(),
                          self.gbest_index, self.iteration)


def _sanitize(f: np.ndarray) -> np.ndarray:
    # NaN ranks as +inf so it can never improve a pbest
    return np.where(np.isnan(f) | (f == np.inf), np.inf, f)


def clamp_velocity(v: ArrayLike, v_max: ArrayLike):
    """Clip `v` into ``[-v_max, v_max]`` (elementwise for arrays)."""
    v_max_arr = np.asarray(v_max, dtype=float)
    if np.any(v_max_arr <= 0):
        raise InputError("v_max must be positive")
    v_arr = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v_arr)):
        raise NumericError("non-finite velocity")
    out = np.minimum(np.maximum(v_arr, -v_max_arr), v_max_arr)
    return float(out) if out.ndim == 0 else out


def update_pbest(state: SwarmState, i: int, x, fx: float) -> SwarmState:
    """Replace particle `i`'s pbest if `fx` strictly improves it."""
    if not 0 <= i < state.m:
        raise InputError(f"particle index {i} out of range")
    fx = float(fx)
    if np.isnan(fx):
        fx = np.inf
    if fx < state.pbest_fitness[i]:
        state.pbest_positions[i] = x
        state.pbest_fitness[i] = fx
    return state


def best_in_neighborhood(state: SwarmState, i: int, topo: Topology) -> int:
    """Lowest-index argmin of pbest fitness over `i`'s neighborhood."""
    idx = neighborhood(i, state.m, topo)
    return int(idx[np.argmin(state.pbest_fitness[idx])])


def sequential_update(state: SwarmState, fitness: np.ndarray,
                      topo: Topology) -> Tuple[np.ndarray, np.ndarray]:
    """Apply pbest updates for all particles and return each one's guide.

    Equivalent to visiting particles 0..M-1 in order, each time updating
    that particle's pbest and then reading the best pbest in its
    neighborhood.  Particle ``i`` therefore sees refreshed pbests for
    indices ``<= i`` and stale ones for indices ``> i``.

    Returns ``(guides, guide_positions)``: the guide (gbest or lbest) index
    of every particle and the pbest position it saw for that guide, which is
    the stale one whenever the guide comes later in the visiting order.  The
    state's ``gbest_index`` ends up at the global best after all updates.
    """
    fx = _sanitize(np.asarray(fitness, dtype=float))
    old = state.pbest_fitness.copy()
    improved = fx < old
    new = np.where(improved, fx, old)
    old_pos = state.pbest_positions.copy()
    state.pbest_positions[improved] = state.positions[improved]
    state.pbest_fitness = new
    m = state.m
    ar = np.arange(m)

    if topo is Topology.RING:
        table = ring_table(m)
        visible = np.where(table <= ar[:, None], new[table], old[table])
        guides = table[ar, np.argmin(visible, axis=1)]
    else:
        pre_val = np.minimum.accumulate(new)
        first = np.ones(m, dtype=bool)
        first[1:] = new[1:] < pre_val[:-1]
        pre_idx = np.maximum.accumulate(np.where(first, ar, 0))
        # suffix minima of the stale values over indices > i, lowest index on ties
        rev = old[::-1]
        rev_val = np.minimum.accumulate(rev)
        take = np.ones(m, dtype=bool)
        take[1:] = rev[1:] <= rev_val[:-1]
        rev_pos = np.maximum.accumulate(np.where(take, ar, 0))
        suf_val = np.full(m, np.inf)
        suf_idx = np.full(m, m - 1)
        suf_val[:-1] = rev_val[::-1][1:]
        suf_idx[:-1] = (m - 1 - rev_pos)[::-1][1:]
        guides = np.where(pre_val <= suf_val, pre_idx, suf_idx)

    state.gbest_index = int(np.argmin(new))
    stale = (guides > ar) & improved[guides]
    guide_pos = np.where(stale[:, None], old_pos[guides], state.pbest_positions[guides])
    return guides, guide_pos


# --------------------------------------------------------------------------
# Runs
# --------------------------------------------------------------------------


@dataclass
class RunRecord:
    algorithm: str
    problem: str
    seed: int
    trajectory: np.ndarray
    best_position: np.ndarray
    best_fitness: float
    wall_ms: float = 0.0
    extra: dict = field(default_factory=dict)


def initialize_swarm(init_lo: np.ndarray, init_hi: np.ndarray, m: int,
                     v_max: np.ndarray, evaluate: Callable[[np.ndarray], np.ndarray],
                     rng: RandomSource) -> SwarmState:
    """Uniform positions in the init box, uniform velocities in ±v_max."""
    n = len(init_lo)
    x = rng.uniform_between(init_lo, init_hi, (m, n))
    v = rng.uniform_between(-v_max, v_max, (m, n))
    return SwarmState.from_positions(x, v, evaluate(x))


def drive(state: SwarmState, step: Callable[[SwarmState], SwarmState], n_max: int,
          algorithm: str, problem: str, seed: int, t0: Optional[float] = None) -> RunRecord:
    """Iterate `step` `n_max` times, recording best-so-far fitness."""
    t0 = time.perf_counter() if t0 is None else t0
    traj = np.empty(n_max + 1)
    traj[0] = state.gbest_fitness
    for k in range(1, n_max + 1):
        step(state)
        traj[k] = state.gbest_fitness
    return RunRecord(algorithm, problem, seed, traj, state.gbest_position.copy(),
                     state.gbest_fitness, (time.perf_counter() - t0) * 1e3)
