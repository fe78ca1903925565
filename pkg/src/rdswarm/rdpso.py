"""Random drift PSO: thermal plus drift velocity, four topology/anchor variants.

Each particle's velocity is the sum of a Gaussian thermal term, scaled by
the distance to an anchor point, and a deterministic drift toward its local
focus::

    V = alpha * |anchor - X| * phi + beta * (focus - X),   phi ~ N(0, 1)

The anchor is the mean of the neighborhood's pbests (``gbest``/``lbest``)
or the pbest of one randomly chosen neighbor (``*_rp``).  The focus is a
random convex combination of the particle's pbest and its guide (the gbest,
or the ring-neighborhood best for the ``lbest`` variants).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (InputError, RandomSource, RunRecord, Schedule, SwarmState, Topology,
                   clamp_velocity, drive, initialize_swarm, neighborhood, ring_table,
                   schedule_value, sequential_update)
from .objectives import Problem, evaluate
from .pso_baselines import default_vmax

logger = logging.getLogger(__name__)

VARIANTS = ("gbest", "gbest_rp", "lbest", "lbest_rp")

DEFAULT_ALPHA = {
    "gbest": (0.9, 0.3),
    "gbest_rp": (0.6, 0.2),
    "lbest": (0.9, 0.3),
    "lbest_rp": (0.9, 0.3),
}
DEFAULT_BETA = 1.45


@dataclass
class RdpsoConfig:
    variant: str = "gbest"
    alpha_schedule: Optional[Schedule] = None
    beta: float = DEFAULT_BETA
    c1: float = 1.0
    c2: float = 1.0
    v_max: Optional[np.ndarray] = None
    m: int = 40
    n_max: int = 5000

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InputError(f"unknown RDPSO variant {self.variant!r}; choose from {VARIANTS}")
        if self.alpha_schedule is None:
            self.alpha_schedule = Schedule.linear(*DEFAULT_ALPHA[self.variant])
        if self.c1 <= 0 or self.c2 <= 0:
            raise InputError("c1 and c2 must be positive")
        if self.m < 1 or (self.topology is Topology.RING and self.m < 3):
            raise InputError(f"population size {self.m} too small for variant {self.variant}")
        if not 0.0 < self.beta < 2.0:
            logger.warning("beta=%g lies outside (0, 2); particles may diverge", self.beta)
        a0, a1 = self.alpha_schedule.start_value, self.alpha_schedule.end_value
        if not (0.0 < a0 < 1.0 and 0.0 < a1 < 1.0):
            logger.warning("alpha schedule %s leaves (0, 1); particles may diverge",
                           self.alpha_schedule)

    @property
    def topology(self) -> Topology:
        return Topology.RING if self.variant.startswith("lbest") else Topology.GLOBAL

    @property
    def random_anchor(self) -> bool:
        return self.variant.endswith("_rp")


# --------------------------------------------------------------------------
# Building blocks
# --------------------------------------------------------------------------


def mean_best(state: SwarmState, i: int, topo: Topology) -> np.ndarray:
    """Mean pbest position over particle `i`'s neighborhood (mbest)."""
    pb = state.pbest_positions[neighborhood(i, state.m, topo)]
    return pb[0] + (pb - pb[0]).mean(axis=0)


def mean_best_all(state: SwarmState, topo: Topology) -> np.ndarray:
    """(M, N) array of every particle's mbest."""
    # means taken relative to a member so identical pbests give that pbest exactly
    pb = state.pbest_positions
    if topo is Topology.GLOBAL:
        c = pb[0] + (pb - pb[0]).mean(axis=0)
        return np.broadcast_to(c, state.positions.shape)
    nb = pb[ring_table(state.m)]
    return nb[:, 0] + (nb - nb[:, :1]).mean(axis=1)


def _pick(u, k: int):
    return np.minimum((np.asarray(u) * k).astype(int), k - 1)


def random_pbest(state: SwarmState, i: int, topo: Topology, rng: RandomSource) -> np.ndarray:
    """The pbest of one neighbor of `i` chosen uniformly, from one uniform draw."""
    idx = neighborhood(i, state.m, topo)
    return state.pbest_positions[idx[_pick(rng.uniform(), len(idx))]].copy()


def random_pbest_all(state: SwarmState, topo: Topology, rng: RandomSource) -> np.ndarray:
    u = rng.uniform(state.m)
    if topo is Topology.GLOBAL:
        chosen = _pick(u, state.m)
    else:
        chosen = ring_table(state.m)[np.arange(state.m), _pick(u, 3)]
    return state.pbest_positions[chosen].copy()


def focus_from_draws(p, guide, r, big_r, c1=1.0, c2=1.0):
    """Weighted point between `p` and `guide` for given draws."""
    a, b = c1 * r, c2 * big_r
    # written as p + w (guide - p) so that p == guide gives p exactly
    return p + (b / (a + b)) * (guide - p)


def local_focus(p_i, guide, c1: float, c2: float, rng: RandomSource) -> np.ndarray:
    p_i = np.asarray(p_i, dtype=float)
    r = rng.uniform(p_i.shape)
    big_r = rng.uniform(p_i.shape)
    return focus_from_draws(p_i, np.asarray(guide, dtype=float), r, big_r, c1, c2)


def velocity_from_draws(x, anchor, focus, alpha, beta, phi):
    return alpha * np.abs(anchor - x) * phi + beta * (focus - x)


def rdpso_velocity(x_j, anchor_j, focus_j, alpha: float, beta: float, rng: RandomSource):
    """Thermal + drift velocity (unclamped) with a fresh standard-normal draw."""
    phi = rng.normal(np.shape(x_j))
    v = velocity_from_draws(np.asarray(x_j, dtype=float), anchor_j, focus_j, alpha, beta, phi)
    return float(v) if np.ndim(v) == 0 else v


# --------------------------------------------------------------------------
# Iteration and run
# --------------------------------------------------------------------------


def rdpso_step(state: SwarmState, cfg: RdpsoConfig, problem: Problem,
               rng: RandomSource) -> SwarmState:
    """One iteration: anchors, evaluation and bookkeeping, then the move.

    Anchors are taken from the pbests as they stand at the start of the
    iteration.  Guides follow the particle-by-particle visiting order (see
    :func:`rdswarm.core.sequential_update`).
    """
    topo = cfg.topology
    n = min(state.iteration + 1, cfg.n_max)
    alpha = schedule_value(cfg.alpha_schedule, n, cfg.n_max)
    if cfg.random_anchor:
        anchors = random_pbest_all(state, topo, rng)
    else:
        anchors = mean_best_all(state, topo).copy()

    fx = evaluate(problem, state.positions, rng)
    _, guide_pos = sequential_update(state, fx, topo)

    x = state.positions
    r = rng.uniform(x.shape)
    big_r = rng.uniform(x.shape)
    focus = focus_from_draws(state.pbest_positions, guide_pos, r, big_r, cfg.c1, cfg.c2)
    phi = rng.normal(x.shape)
    v = velocity_from_draws(x, anchors, focus, alpha, cfg.beta, phi)
    v = clamp_velocity(v, cfg.v_max if cfg.v_max is not None else default_vmax(problem))
    state.velocities = v
    state.positions = x + v
    if problem.bounds_enforced:
        state.positions = np.clip(state.positions, problem.search_lo, problem.search_hi)
    state.iteration += 1
    return state


def run(problem: Problem, cfg: RdpsoConfig, seed: int, name: Optional[str] = None) -> RunRecord:
    """One seeded run of `cfg.n_max` iterations."""
    t0 = time.perf_counter()
    rng = RandomSource(seed)
    v_max = cfg.v_max if cfg.v_max is not None else default_vmax(problem)
    state = initialize_swarm(problem.init_lo, problem.init_hi, cfg.m, v_max,
                             lambda x: evaluate(problem, x, rng), rng)
    return drive(state, lambda s: rdpso_step(s, cfg, problem, rng), cfg.n_max,
                 name or f"rdpso-{cfg.variant.replace('_', '-')}", problem.name, seed, t0)
