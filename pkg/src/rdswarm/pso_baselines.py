"""Canonical PSO update rules: original, inertia weight, constriction, SPSO.

SPSO here means the constriction update with ring-neighborhood guides.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (InputError, RandomSource, RunRecord, Schedule, SwarmState, Topology,
                   best_in_neighborhood, clamp_velocity, drive, initialize_swarm,
                   schedule_value, sequential_update)
from .objectives import Problem, evaluate

VARIANTS = ("original", "inertia", "constriction", "spso")


def chi(c1: float, c2: float) -> float:
    """Constriction factor for acceleration coefficients `c1`, `c2`."""
    phi = c1 + c2
    if not phi > 4.0:
        raise InputError(f"constriction factor needs c1 + c2 > 4, got {phi}")
    return 2.0 / abs(2.0 - phi - math.sqrt(phi * phi - 4.0 * phi))


@dataclass
class BaselineConfig:
    variant: str = "constriction"
    c1: float = 2.05
    c2: float = 2.05
    w_schedule: Schedule = field(default_factory=lambda: Schedule.linear(0.9, 0.4))
    chi: Optional[float] = None
    v_max: Optional[np.ndarray] = None
    topology: Optional[Topology] = None
    m: int = 40
    n_max: int = 5000

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InputError(f"unknown baseline variant {self.variant!r}")
        if self.c1 <= 0 or self.c2 <= 0:
            if self.variant != "original":
                raise InputError("c1 and c2 must be positive")
        if self.variant in ("constriction", "spso") and self.chi is None:
            self.chi = chi(self.c1, self.c2)
        if self.topology is None:
            self.topology = Topology.RING if self.variant == "spso" else Topology.GLOBAL
        self.topology = Topology(self.topology)

    @classmethod
    def default(cls, variant: str, **kw) -> "BaselineConfig":
        """Published defaults: inertia 0.9->0.4 with c=2.0; constriction c=2.05."""
        if variant == "inertia":
            kw.setdefault("c1", 2.0)
            kw.setdefault("c2", 2.0)
        if variant == "original":
            kw.setdefault("c1", 2.0)
            kw.setdefault("c2", 2.0)
        return cls(variant=variant, **kw)


def default_vmax(problem: Problem) -> np.ndarray:
    """Half the search-range width in every dimension."""
    return 0.5 * (problem.search_hi - problem.search_lo)


def _guides(state: SwarmState, cfg: BaselineConfig, problem: Optional[Problem],
            rng: RandomSource) -> np.ndarray:
    if problem is None:
        idx = [best_in_neighborhood(state, i, cfg.topology) for i in range(state.m)]
        return state.pbest_positions[idx]
    fx = evaluate(problem, state.positions, rng)
    return sequential_update(state, fx, cfg.topology)[1]


def _move(state: SwarmState, v_new: np.ndarray, v_max, problem: Optional[Problem]) -> SwarmState:
    v_new = clamp_velocity(v_new, v_max)
    state.velocities = v_new
    state.positions = state.positions + v_new
    if problem is not None and problem.bounds_enforced:
        state.positions = np.clip(state.positions, problem.search_lo, problem.search_hi)
    state.iteration += 1
    return state


def _pulls(state, guide_pos, c1, c2, rng):
    x = state.positions
    r = rng.uniform(x.shape)
    big_r = rng.uniform(x.shape)
    return c1 * r * (state.pbest_positions - x) + c2 * big_r * (guide_pos - x)


def _vmax(cfg, problem):
    if cfg.v_max is not None:
        return cfg.v_max
    if problem is None:
        raise InputError("v_max must be set when stepping without a problem")
    return default_vmax(problem)


def step_original(state: SwarmState, cfg: BaselineConfig, rng: RandomSource,
                  problem: Optional[Problem] = None) -> SwarmState:
    """One iteration of ``V' = V + c1 r (P - X) + c2 R (G - X)``.

    With a `problem`, the current positions are evaluated and pbests/guides
    refreshed first; without one the stored pbests are used as they are.
    """
    guide_pos = _guides(state, cfg, problem, rng)
    v = state.velocities + _pulls(state, guide_pos, cfg.c1, cfg.c2, rng)
    return _move(state, v, _vmax(cfg, problem), problem)


def step_inertia(state: SwarmState, cfg: BaselineConfig, rng: RandomSource,
                 problem: Optional[Problem] = None) -> SwarmState:
    w = schedule_value(cfg.w_schedule, min(state.iteration + 1, cfg.n_max), cfg.n_max)
    guide_pos = _guides(state, cfg, problem, rng)
    v = w * state.velocities + _pulls(state, guide_pos, cfg.c1, cfg.c2, rng)
    return _move(state, v, _vmax(cfg, problem), problem)


def step_constriction(state: SwarmState, cfg: BaselineConfig, rng: RandomSource,
                      problem: Optional[Problem] = None) -> SwarmState:
    """Constriction update; the guide comes from ``cfg.topology``."""
    guide_pos = _guides(state, cfg, problem, rng)
    v = cfg.chi * (state.velocities + _pulls(state, guide_pos, cfg.c1, cfg.c2, rng))
    return _move(state, v, _vmax(cfg, problem), problem)


STEPS = {
    "original": step_original,
    "inertia": step_inertia,
    "constriction": step_constriction,
    "spso": step_constriction,
}


def run(problem: Problem, cfg: BaselineConfig, seed: int, name: Optional[str] = None) -> RunRecord:
    t0 = time.perf_counter()
    rng = RandomSource(seed)
    v_max = _vmax(cfg, problem)
    state = initialize_swarm(problem.init_lo, problem.init_hi, cfg.m, v_max,
                             lambda x: evaluate(problem, x, rng), rng)
    step = STEPS[cfg.variant]
    return drive(state, lambda s: step(s, cfg, rng, problem), cfg.n_max,
                 name or f"pso-{cfg.variant}", problem.name, seed, t0)
