"""Command-line experiment driver.

Commands::

    rdswarm run      --config plan.yaml [--runs 20 --seed 0 ...]
    rdswarm sweep    --config sweep.yaml
    rdswarm dynamics --alpha 0.5 0.9 --beta 0.5 1.5 --reps 20 --steps 5000
    rdswarm report   results/raw.csv [more.csv ...]

Every flag overrides the config key of the same name.  The default output
directory is taken from ``$RDSWARM_OUTPUT_DIR`` (falling back to ``results``).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from . import dynamics, stats
from .core import InputError
from .experiments import (ALGORITHM_NAMES, ExperimentPlan, default_output_dir, load_config,
                          parse_algorithms, parse_problems, prepare_output, run_campaign,
                          run_sweep, sweep_settings)
from .objectives import PROBLEM_NAMES

logger = logging.getLogger("rdswarm")

DESK_DEFAULTS = {"dim": 30, "particles": 40, "iterations": 5000, "runs": 20, "seed": 0,
                 "workers": 1}


def _merged(args: argparse.Namespace, section: Optional[str] = None) -> Dict[str, Any]:
    """Config file values (optionally one nested section on top) overridden by flags."""
    cfg: Dict[str, Any] = dict(DESK_DEFAULTS)
    if getattr(args, "config", None):
        data = load_config(args.config)
        cfg.update({k: v for k, v in data.items() if not isinstance(v, dict)
                    or k not in ("sweep", "dynamics")})
        if section and isinstance(data.get(section), dict):
            cfg.update(data[section])
    for key, val in vars(args).items():
        if val is not None and key not in ("command", "config", "func", "verbose"):
            cfg[key] = val
    cfg.setdefault("output_dir", default_output_dir())
    return cfg


def _plan(cfg: Dict[str, Any], algorithms=None) -> ExperimentPlan:
    algs = algorithms if algorithms is not None else parse_algorithms(cfg.get("algorithms"))
    return ExperimentPlan(
        algorithms=algs,
        problems=parse_problems(cfg.get("problems"), int(cfg["dim"])),
        runs=int(cfg["runs"]),
        iterations=int(cfg["iterations"]),
        particles=int(cfg["particles"]),
        base_seed=int(cfg["seed"]),
        output_dir=Path(cfg["output_dir"]),
        workers=int(cfg["workers"]),
        bounds_enforced=bool(cfg.get("bounds_enforced", False)),
    )


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    if getattr(args, "algorithm", None):
        cfg["algorithms"] = args.algorithm
    if getattr(args, "problem", None):
        cfg["problems"] = args.problem
    out = run_campaign(_plan(cfg))
    print(f"wrote {out['raw']} and {len(out['trajectories'])} trajectory file(s)")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _merged(args, "sweep")
    if getattr(args, "problem", None):
        cfg["problems"] = args.problem
    alphas = cfg.get("alpha") or []
    ranges = [tuple(r) for r in (cfg.get("alpha_range") or [])]
    if any(len(r) != 2 for r in ranges):
        raise InputError("alpha_range entries must be [start, end] pairs")
    betas = cfg.get("beta") or []
    if not isinstance(betas, list):
        betas = [betas]
    algorithm = cfg.get("algorithm", "rdpso-gbest")
    settings = sweep_settings(algorithm, alphas, ranges, betas)
    out = run_sweep(_plan(cfg, algorithms=settings), settings)
    for pos, row in enumerate(out["table"], 1):
        print(f"{pos:3d}  {row['setting']:<45s} rank_sum={row['rank_sum']}")
    print(f"wrote {out['path']}")
    return 0


def cmd_dynamics(args: argparse.Namespace) -> int:
    cfg = _merged(args, "dynamics")
    alphas = cfg.get("alpha") or []
    betas = cfg.get("beta") or []
    alphas = alphas if isinstance(alphas, list) else [alphas]
    betas = betas if isinstance(betas, list) else [betas]
    steps = int(cfg.get("steps", 5000))
    reps = int(cfg.get("reps", 20))
    out = prepare_output(Path(cfg["output_dir"]))
    keep = bool(cfg.get("trajectories", False))
    rows = dynamics.boundedness_map(
        [float(a) for a in alphas], [float(b) for b in betas], reps, steps, int(cfg["seed"]),
        c_point=float(cfg.get("c_point", 0.001)), p_point=float(cfg.get("p_point", 0.0)),
        x0=float(cfg.get("x0", 1000.0)), overflow_cap=float(cfg.get("overflow_cap", 700.0)),
        keep_trajectories=keep)
    path = dynamics.write_map_csv(rows, out / "dynamics_map.csv")
    if keep:
        for row in rows:
            for r, traj in enumerate(row["trajectories"]):
                name = f"dyn_a{row['alpha']:g}_b{row['beta']:g}_rep{r}.csv"
                dynamics.write_trajectory_csv(traj, out / name)
    for row in rows:
        print(f"alpha={row['alpha']:<6g} beta={row['beta']:<6g} delta={row['delta']:+.6f} "
              f"{row['classification']:<20s} diverged={row['diverged_fraction']:.2f}")
    print(f"wrote {path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.output_dir) if args.output_dir else default_output_dir()
    samples = stats.load_raw_csv(args.raw)
    if not samples:
        raise InputError("no result rows found in the given CSV files")
    report = stats.build_report(samples)
    prepare_output(out_dir)
    stats.write_report(report, out_dir)
    table = stats.format_table(report)
    (out_dir / "ranks.txt").write_text(table + "\n")
    print(table)
    return 0


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--seed", type=int, help="base seed (run seed = base + run index)")
    p.add_argument("--runs", type=int)
    p.add_argument("--particles", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--workers", type=int, help="worker processes (output does not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rdswarm", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="benchmark campaign")
    _common(p)
    p.add_argument("--algorithm", action="append",
                   help=f"repeatable; one of {', '.join(ALGORITHM_NAMES)}")
    p.add_argument("--problem", action="append",
                   help=f"repeatable; one of {', '.join(PROBLEM_NAMES)}")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="alpha/beta parameter sweep")
    _common(p)
    p.add_argument("--algorithm")
    p.add_argument("--problem", action="append")
    p.add_argument("--alpha", type=float, nargs="+", help="fixed alpha values")
    p.add_argument("--alpha-range", dest="alpha_range", type=float, nargs=2, action="append",
                   metavar=("START", "END"), help="linearly varying alpha; repeatable")
    p.add_argument("--beta", type=float, nargs="+")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dynamics", help="single-particle boundedness map")
    p.add_argument("--config")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, nargs="+")
    p.add_argument("--beta", type=float, nargs="+")
    p.add_argument("--steps", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--trajectories", action="store_true", default=None,
                   help="also write one log-gap CSV per cell and rep")
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("report", help="statistics from raw run CSVs")
    p.add_argument("raw", nargs="+", help="raw CSV files")
    p.add_argument("--output-dir", dest="output_dir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"rdswarm {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
