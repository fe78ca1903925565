"""One-dimensional single-particle model of the random drift update.

With the mean best ``C`` and the local focus ``p`` held fixed, a particle
obeys::

    V_{n+1} = alpha * (X_n - C) * phi_{n+1} - beta * (X_n - p)
    X_{n+1} = X_n + V_{n+1}

so that ``X_{n+1} - C = lambda_{n+1} (X_n - C) + beta (p - C)`` with
``lambda ~ N(1 - beta, alpha**2)``.  Whether the position stays bounded is
decided by the sign of ``delta = E[ln |lambda|]``, computed here by
quadrature and cross-checked by Monte Carlo.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .core import InputError, RandomSource, run_seed

logger = logging.getLogger(__name__)

CONVERGES = "converges"
BOUNDED = "bounded_oscillating"
DIVERGENT = "divergent"

DELTA_TOL = 1e-6


class QuadratureError(ArithmeticError):
    """Quadrature could not reach the requested accuracy."""

    def __init__(self, value: float, error: float):
        super().__init__(f"delta quadrature stalled at {value:.10g} +/- {error:.3g}")
        self.value = value
        self.error = error


@dataclass
class DynamicsConfig:
    alpha: float
    beta: float
    c_point: float = 0.001
    p_point: float = 0.0
    x0: float = 1000.0
    steps: int = 5000
    overflow_cap: float = 700.0

    def __post_init__(self):
        if self.steps < 1:
            raise InputError("steps must be >= 1")
        if self.overflow_cap <= 0:
            raise InputError("overflow_cap must be positive")
        if self.alpha < 0:
            raise InputError("alpha must be non-negative")


@dataclass
class DynamicsReport:
    log_gap_trajectory: np.ndarray
    diverged: bool
    delta: Optional[float] = None
    delta_error: Optional[float] = None
    classification: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @property
    def gaps(self) -> np.ndarray:
        return np.exp(self.log_gap_trajectory)


# --------------------------------------------------------------------------
# Velocity forms
# --------------------------------------------------------------------------


def velocity_abs_form(x, c, p, alpha, beta, phi):
    """``alpha |C - X| phi + beta (p - X)``, the form used inside the swarm."""
    return alpha * np.abs(c - x) * phi + beta * (p - x)


def velocity_signed_form(x, c, p, alpha, beta, phi):
    """``alpha (X - C) phi - beta (X - p)``; same law as the absolute form."""
    return alpha * (x - c) * phi - beta * (x - p)


# --------------------------------------------------------------------------
# Trajectories
# --------------------------------------------------------------------------


def _log_abs(v: float) -> float:
    return -math.inf if v == 0.0 else math.log(abs(v))


def simulate_particle(cfg: DynamicsConfig, seed: int) -> DynamicsReport:
    """Iterate the particle and record ``ln|X_n - p|`` for n = 0, 1, ...

    Stops early, flagging divergence, once the log-gap reaches
    ``cfg.overflow_cap``.
    """
    phi = RandomSource(seed).normal(cfg.steps)
    a, b, c, p = cfg.alpha, cfg.beta, cfg.c_point, cfg.p_point
    x = float(cfg.x0)
    out = [_log_abs(x - p)]
    diverged = out[0] >= cfg.overflow_cap
    for k in range(cfg.steps):
        if diverged:
            break
        x = x + a * (x - c) * phi[k] - b * (x - p)
        g = _log_abs(x - p) if math.isfinite(x) else math.inf
        out.append(g)
        diverged = g >= cfg.overflow_cap
    return DynamicsReport(np.array(out), diverged)


# --------------------------------------------------------------------------
# delta = E ln|lambda|
# --------------------------------------------------------------------------


def _normal_pdf(x, mu, s):
    return math.exp(-0.5 * ((x - mu) / s) ** 2) / (math.sqrt(2.0 * math.pi) * s)


def delta(alpha: float, beta: float, *, tol: float = DELTA_TOL,
          fallback: bool = True, mc_draws: int = 4_000_000) -> Tuple[float, float]:
    """``E[ln|lambda|]`` for ``lambda ~ N(1 - beta, alpha**2)``.

    The real line is cut at the log singularity x = 0, at the mean and at
    +/-12 standard deviations; each finite piece goes to adaptive
    Gauss-Kronrod (QUADPACK QAGS, whose extrapolation absorbs the endpoint
    log singularity) and the two tails to the infinite-range rule.  Returns
    ``(value, error_estimate)``.

    When the summed error estimate exceeds `tol` a Monte Carlo estimate is
    returned instead (with a warning) if `fallback` is set; otherwise
    :class:`QuadratureError` is raised.
    """
    if not alpha > 0:
        raise InputError("alpha must be positive")
    if not math.isfinite(beta):
        raise InputError("beta must be finite")
    mu, s = 1.0 - beta, float(alpha)

    def f(x):
        if x == 0.0:
            return 0.0
        return math.log(abs(x)) * _normal_pdf(x, mu, s)

    cuts = sorted({0.0, mu, mu - 12.0 * s, mu + 12.0 * s})
    pieces = [(-math.inf, cuts[0])] + list(zip(cuts[:-1], cuts[1:])) + [(cuts[-1], math.inf)]
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in pieces:
            v, e = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400)
            total += v
            err += e
    if err <= tol:
        return total, err
    if not fallback:
        raise QuadratureError(total, err)
    logger.warning("delta(%g, %g): quadrature error %.3g above %.1g, using Monte Carlo",
                   alpha, beta, err, tol)
    return delta_monte_carlo(alpha, beta, mc_draws, seed=0)


def delta_monte_carlo(alpha: float, beta: float, draws: int = 1_000_000,
                      seed: int = 0) -> Tuple[float, float]:
    """Sample mean of ``ln|lambda|`` and its standard error."""
    lam = (1.0 - beta) + alpha * RandomSource(seed).normal(draws)
    with np.errstate(divide="ignore"):
        xi = np.log(np.abs(lam))
    return float(xi.mean()), float(xi.std(ddof=1) / math.sqrt(draws))


# --------------------------------------------------------------------------
# rho_n = prod lambda_i
# --------------------------------------------------------------------------


def rho_moments(alpha: float, beta: float, n: int) -> Tuple[float, float]:
    """Exact mean and variance of the product of `n` i.i.d. lambdas."""
    if n < 1:
        raise InputError("n must be >= 1")
    m = 1.0 - beta
    with np.errstate(over="ignore"):
        second = float(np.power(alpha * alpha + m * m, n))
        mean = float(np.power(m, n))
        var = second - float(np.power(m, 2 * n))
    return mean, var


def rho_samples(alpha: float, beta: float, n: int, draws: int, seed: int = 0) -> np.ndarray:
    """`draws` independent realizations of ``prod_{i<=n} lambda_i``."""
    rng = RandomSource(seed)
    rho = np.ones(draws)
    for _ in range(n):
        rho *= (1.0 - beta) + alpha * rng.normal(draws)
    return rho


# --------------------------------------------------------------------------
# Classification and maps
# --------------------------------------------------------------------------


@dataclass
class Boundedness:
    alpha: float
    beta: float
    delta: float
    delta_error: float
    classification: str
    sufficient_condition: bool


def satisfies_sufficient_condition(alpha: float, beta: float) -> bool:
    return 0.0 < alpha < 1.0 and 0.0 < beta < 2.0


def classify_boundedness(alpha: float, beta: float) -> Boundedness:
    d, e = delta(alpha, beta)
    tol = max(DELTA_TOL, 3.0 * e)
    if d < -tol:
        cls = CONVERGES
    elif d > tol:
        cls = DIVERGENT
    else:
        cls = BOUNDED
    return Boundedness(alpha, beta, d, e, cls, satisfies_sufficient_condition(alpha, beta))


MAP_FIELDS = ("alpha", "beta", "delta", "delta_error", "classification", "diverged_fraction")


def boundedness_map(alpha_grid: Sequence[float], beta_grid: Sequence[float], reps: int,
                    steps: int, seed: int = 0, *, c_point: float = 0.001,
                    p_point: float = 0.0, x0: float = 1000.0,
                    overflow_cap: float = 700.0, keep_trajectories: bool = False) -> List[dict]:
    """Delta, class and simulated divergence rate over an (alpha, beta) grid.

    Cell ``k`` (row-major, alpha outer) runs its reps with seeds
    ``run_seed(seed, rep, k)``.
    """
    alpha_grid, beta_grid = list(alpha_grid), list(beta_grid)
    if not alpha_grid or not beta_grid:
        raise InputError("alpha and beta grids must be non-empty")
    if reps < 1:
        raise InputError("reps must be >= 1")
    rows = []
    for k, (a, b) in enumerate((a, b) for a in alpha_grid for b in beta_grid):
        cls = classify_boundedness(a, b)
        cfg = DynamicsConfig(a, b, c_point, p_point, x0, steps, overflow_cap)
        reports = [simulate_particle(cfg, run_seed(seed, r, k)) for r in range(reps)]
        row = {
            "alpha": a, "beta": b, "delta": cls.delta, "delta_error": cls.delta_error,
            "classification": cls.classification,
            "diverged_fraction": sum(rep.diverged for rep in reports) / reps,
        }
        if keep_trajectories:
            row["trajectories"] = [rep.log_gap_trajectory for rep in reports]
        rows.append(row)
    return rows


def write_map_csv(rows: Iterable[dict], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MAP_FIELDS)
        for r in rows:
            w.writerow([repr(float(r["alpha"])), repr(float(r["beta"])),
                        f"{r['delta']:.12g}", f"{r['delta_error']:.6g}",
                        r["classification"], f"{r['diverged_fraction']:.6g}"])
    return path


def write_trajectory_csv(log_gaps: Sequence[float], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("step", "log_gap"))
        for k, g in enumerate(log_gaps):
            w.writerow((k, repr(float(g))))
    return path
