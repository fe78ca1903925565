"""Random drift particle swarm optimization, PSO baselines and analysis tools."""
from .core import InputError, NumericError, RandomSource, RunRecord, Schedule, SwarmState, Topology
from .objectives import PROBLEM_NAMES, Problem, evaluate, make_problem
from .pso_baselines import BaselineConfig
from .rdpso import RdpsoConfig

__version__ = "0.1.0"

__all__ = [
    "InputError", "NumericError", "RandomSource", "RunRecord", "Schedule", "SwarmState",
    "Topology", "PROBLEM_NAMES", "Problem", "evaluate", "make_problem", "BaselineConfig",
    "RdpsoConfig",
]
