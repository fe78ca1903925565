"""Experiment plans: algorithm registry, campaigns and parameter sweeps."""
from __future__ import annotations

import csv
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import pso_baselines, rdpso
from .core import InputError, RunRecord, Schedule, run_seed
from .objectives import make_problem, resolve_problem_name
from .stats import RAW_FIELDS


OUTPUT_ENV = "RDSWARM_OUTPUT_DIR"

RDPSO_ALGORITHMS = {
    "rdpso-gbest": "gbest",
    "rdpso-gbest-rp": "gbest_rp",
    "rdpso-lbest": "lbest",
    "rdpso-lbest-rp": "lbest_rp",
}
BASELINE_ALGORITHMS = {
    "pso-original": "original",
    "pso-in": "inertia",
    "pso-co": "constriction",
    "spso": "spso",
}
ALGORITHM_NAMES = tuple(RDPSO_ALGORITHMS) + tuple(BASELINE_ALGORITHMS)

RDPSO_KEYS = {"alpha_start", "alpha_end", "alpha", "beta", "c1", "c2", "vmax"}
BASELINE_KEYS = {"w_start", "w_end", "chi", "c1", "c2", "vmax"}


def resolve_algorithm_name(name: str) -> str:
    key = name.strip().lower()
    if key not in ALGORITHM_NAMES:
        raise InputError(f"unknown algorithm {name!r}; valid names: {', '.join(ALGORITHM_NAMES)}")
    return key


@dataclass(frozen=True)
class AlgorithmSpec:
    """An algorithm name plus parameter overrides; picklable for worker pools."""

    name: str
    params: Tuple[Tuple[str, Any], ...] = ()
    label: Optional[str] = None

    @classmethod
    def make(cls, name: str, params: Optional[Dict[str, Any]] = None,
             label: Optional[str] = None) -> "AlgorithmSpec":
        name = resolve_algorithm_name(name)
        params = dict(params or {})
        allowed = RDPSO_KEYS if name in RDPSO_ALGORITHMS else BASELINE_KEYS
        unknown = set(params) - allowed
        if unknown:
            raise InputError(f"{name}: unknown parameter(s) {sorted(unknown)}; "
                             f"allowed: {sorted(allowed)}")
        return cls(name, tuple(sorted(params.items())), label)

    @property
    def display(self) -> str:
        return self.label or self.name

    def config(self, particles: int, iterations: int):
        p = dict(self.params)
        vmax = p.pop("vmax", None)
        vmax = None if vmax is None else np.asarray(vmax, dtype=float)
        if self.name in RDPSO_ALGORITHMS:
            variant = RDPSO_ALGORITHMS[self.name]
            a0, a1 = rdpso.DEFAULT_ALPHA[variant]
            if "alpha" in p:
                sched = Schedule.constant(p.pop("alpha"))
            else:
                sched = Schedule.linear(p.pop("alpha_start", a0), p.pop("alpha_end", a1))
            return rdpso.RdpsoConfig(variant, sched, v_max=vmax, m=particles,
                                     n_max=iterations, **p)
        variant = BASELINE_ALGORITHMS[self.name]
        if "w_start" in p or "w_end" in p:
            p["w_schedule"] = Schedule.linear(p.pop("w_start", 0.9), p.pop("w_end", 0.4))
        return pso_baselines.BaselineConfig.default(variant, v_max=vmax, m=particles,
                                                    n_max=iterations, **p)

    def run(self, problem, seed: int, particles: int, iterations: int) -> RunRecord:
        cfg = self.config(particles, iterations)
        mod = rdpso if self.name in RDPSO_ALGORITHMS else pso_baselines
        return mod.run(problem, cfg, seed, name=self.display)


@dataclass
class ExperimentPlan:
    algorithms: List[AlgorithmSpec]
    problems: List[Tuple[str, int]]
    runs: int = 20
    iterations: int = 5000
    particles: int = 40
    base_seed: int = 0
    output_dir: Path = Path("results")
    workers: int = 1
    bounds_enforced: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise InputError("runs must be >= 1")
        if self.iterations < 0 or self.particles < 1:
            raise InputError("iterations must be >= 0 and particles >= 1")
        if not self.algorithms or not self.problems:
            raise InputError("plan needs at least one algorithm and one problem")
        self.problems = [(resolve_problem_name(n), int(d)) for n, d in self.problems]
        self.output_dir = Path(self.output_dir)


# --------------------------------------------------------------------------
# Config files
# --------------------------------------------------------------------------


def load_config(path) -> Dict[str, Any]:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"config {path} must be a mapping at top level")
    return data


def parse_algorithms(entries) -> List[AlgorithmSpec]:
    specs = []
    for e in entries or ():
        if isinstance(e, str):
            specs.append(AlgorithmSpec.make(e))
        elif isinstance(e, dict):
            e = dict(e)
            name = e.pop("name", None)
            if name is None:
                raise InputError(f"algorithm entry without a name: {e}")
            label = e.pop("label", None)
            specs.append(AlgorithmSpec.make(name, e, label))
        else:
            raise InputError(f"bad algorithm entry {e!r}")
    return specs


def parse_problems(entries, default_dim: int) -> List[Tuple[str, int]]:
    out = []
    for e in entries or ():
        if isinstance(e, str):
            out.append((e, default_dim))
        elif isinstance(e, dict):
            out.append((e["name"], int(e.get("dim", default_dim))))
        else:
            raise InputError(f"bad problem entry {e!r}")
    return out


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "results"))


# --------------------------------------------------------------------------
# Execution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _Job:
    algorithm: AlgorithmSpec
    problem: str
    dim: int
    run: int
    seed: int
    particles: int
    iterations: int
    bounds_enforced: bool


def _execute(job: _Job) -> Tuple[_Job, RunRecord]:
    problem = make_problem(job.problem, job.dim, bounds_enforced=job.bounds_enforced)
    return job, job.algorithm.run(problem, job.seed, job.particles, job.iterations)


def execute(jobs: Sequence[_Job], workers: int = 1) -> List[Tuple[_Job, RunRecord]]:
    """Run jobs, in a process pool when `workers` > 1; input order is kept."""
    if workers <= 1 or len(jobs) <= 1:
        return [_execute(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute, jobs, chunksize=1))


def problem_label(name: str, dim: int) -> str:
    return f"{name}@{dim}"


def _slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", s)


def write_raw_csv(results: Sequence[Tuple[_Job, RunRecord]], path: Path) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RAW_FIELDS)
        for job, rec in results:
            w.writerow((job.algorithm.display, problem_label(job.problem, job.dim), job.run,
                        job.seed, repr(float(rec.best_fitness)), f"{rec.wall_ms:.1f}"))
    return path


def write_trajectories(results: Sequence[Tuple[_Job, RunRecord]], out_dir: Path) -> List[Path]:
    """One CSV per (algorithm, problem): per-iteration median of best-so-far."""
    groups: Dict[Tuple[str, str], List[np.ndarray]] = {}
    for job, rec in results:
        key = (job.algorithm.display, problem_label(job.problem, job.dim))
        groups.setdefault(key, []).append(rec.trajectory)
    paths = []
    for (alg, prob), trajs in groups.items():
        med = np.median(np.vstack(trajs), axis=0)
        path = out_dir / f"traj_{_slug(alg)}_{_slug(prob)}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("iteration", "median_best"))
            for k, v in enumerate(med):
                w.writerow((k, repr(float(v))))
        paths.append(path)
    return paths


def plan_jobs(plan: ExperimentPlan, cell_index: int = 0,
              algorithms: Optional[Sequence[AlgorithmSpec]] = None) -> List[_Job]:
    return [
        _Job(alg, prob, dim, r, run_seed(plan.base_seed, r, cell_index), plan.particles,
             plan.iterations, plan.bounds_enforced)
        for alg in (algorithms or plan.algorithms)
        for prob, dim in plan.problems
        for r in range(plan.runs)
    ]


def prepare_output(out_dir: Path) -> Path:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise InputError(f"output directory {out_dir} is not writable: {exc}") from exc
    return out_dir


def run_campaign(plan: ExperimentPlan) -> Dict[str, Any]:
    out = prepare_output(plan.output_dir)
    results = execute(plan_jobs(plan), plan.workers)
    raw = write_raw_csv(results, out / "raw.csv")
    trajs = write_trajectories(results, out)
    return {"raw": raw, "trajectories": trajs, "results": results}


# --------------------------------------------------------------------------
# Parameter sweeps
# --------------------------------------------------------------------------


def sweep_settings(algorithm: str, alphas: Sequence[float] = (),
                   alpha_ranges: Sequence[Tuple[float, float]] = (),
                   betas: Sequence[float] = (rdpso.DEFAULT_BETA,),
                   extra: Optional[Dict[str, Any]] = None) -> List[AlgorithmSpec]:
    """Grid of RDPSO settings: fixed alphas and (start, end) ranges, each beta."""
    name = resolve_algorithm_name(algorithm)
    if name not in RDPSO_ALGORITHMS:
        raise InputError(f"sweeps vary alpha/beta and need an RDPSO algorithm, got {name}")
    if not (alphas or alpha_ranges) or not betas:
        raise InputError("sweep grids must be non-empty")
    extra = dict(extra or {})
    specs = []
    for b in betas:
        for a in alphas:
            specs.append(AlgorithmSpec.make(name, {**extra, "alpha": float(a), "beta": float(b)},
                                            f"{name}[alpha={a:g},beta={b:g}]"))
        for a0, a1 in alpha_ranges:
            specs.append(AlgorithmSpec.make(
                name, {**extra, "alpha_start": float(a0), "alpha_end": float(a1), "beta": float(b)},
                f"{name}[alpha={a0:g}->{a1:g},beta={b:g}]"))
    return specs


def _competition_ranks(values: Sequence[float]) -> List[int]:
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0] * len(values)
    for pos, k in enumerate(order):
        if pos > 0 and values[k] == values[order[pos - 1]]:
            ranks[k] = ranks[order[pos - 1]]
        else:
            ranks[k] = pos + 1
    return ranks


def run_sweep(plan: ExperimentPlan, settings: Sequence[AlgorithmSpec]) -> Dict[str, Any]:
    """Run every setting on every problem and order settings by summed rank.

    Setting ``k`` uses seeds ``run_seed(base_seed, run, k)``.
    """
    if not settings:
        raise InputError("sweep needs at least one setting")
    out = prepare_output(plan.output_dir)
    jobs = []
    for k, spec in enumerate(settings):
        jobs.extend(plan_jobs(plan, cell_index=k, algorithms=[spec]))
    results = execute(jobs, plan.workers)
    write_raw_csv(results, out / "sweep_raw.csv")

    means: Dict[Tuple[int, str], List[float]] = {}
    index = {spec.display: k for k, spec in enumerate(settings)}
    for job, rec in results:
        means.setdefault((index[job.algorithm.display], problem_label(job.problem, job.dim)),
                         []).append(rec.best_fitness)
    probs = [problem_label(p, d) for p, d in plan.problems]
    table = []
    ranks_by_problem = {}
    for p in probs:
        vals = [float(np.mean(means[(k, p)])) for k in range(len(settings))]
        ranks_by_problem[p] = (vals, _competition_ranks(vals))
    half = len(settings) / 2.0
    for k, spec in enumerate(settings):
        rs = [ranks_by_problem[p][1][k] for p in probs]
        table.append({
            "setting": spec.display,
            **{f"mean[{p}]": ranks_by_problem[p][0][k] for p in probs},
            **{f"rank[{p}]": ranks_by_problem[p][1][k] for p in probs},
            "rank_sum": sum(rs),
            "average_rank": sum(rs) / len(rs),
            "top_half_everywhere": all(r <= max(1.0, half) for r in rs),
        })
    table.sort(key=lambda row: (row["rank_sum"], row["setting"]))
    path = out / "sweep.csv"
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(table[0]))
        w.writeheader()
        for row in table:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return {"table": table, "path": path, "results": results}
