"""Multi-run summaries, Welch t-tests and adjacent-pair rank grouping.

The Student-t tail probability is computed from the regularized incomplete
beta function, evaluated with the modified Lentz continued fraction.
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import InputError

ALPHA_LEVEL = 0.05
RAW_FIELDS = ("algorithm", "problem", "run", "seed", "final_best", "wall_ms")


class StatsError(InputError):
    pass


@dataclass
class ResultSample:
    algorithm: str
    problem: str
    final_bests: np.ndarray

    def __post_init__(self):
        self.final_bests = np.asarray(self.final_bests, dtype=float)

    @property
    def runs(self) -> int:
        return len(self.final_bests)


# --------------------------------------------------------------------------
# Incomplete beta and the t distribution
# --------------------------------------------------------------------------


def _betacf(a: float, b: float, x: float, eps: float = 1e-16, max_iter: int = 10_000) -> float:
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, xc: Optional[float] = None) -> float:
    """Regularized incomplete beta function I_x(a, b).

    `xc` may carry ``1 - x`` computed without cancellation.
    """
    if a <= 0 or b <= 0:
        raise InputError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise InputError("x must lie in [0, 1]")
    if xc is None:
        xc = 1.0 - x
    if x == 0.0 or xc == 0.0:
        return 0.0 if x == 0.0 else 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(xc))
    front = math.exp(ln_front)
    # the continued fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, xc) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with `df` degrees of freedom."""
    if df <= 0:
        raise InputError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    t2 = t * t
    return betainc(0.5 * df, 0.5, df / (df + t2), t2 / (df + t2))


# --------------------------------------------------------------------------
# Summaries and tests
# --------------------------------------------------------------------------


def summarize(sample: ResultSample) -> Tuple[float, float]:
    """Mean and sample standard deviation (divisor runs - 1)."""
    x = sample.final_bests
    if len(x) < 2:
        raise StatsError(f"{sample.algorithm}/{sample.problem}: standard deviation needs >= 2 runs")
    return float(np.mean(x)), float(np.std(x, ddof=1))


@dataclass
class TTest:
    t: float
    p: float
    df: float

    @property
    def significant(self) -> bool:
        return self.p < ALPHA_LEVEL


def unpaired_t(a: ResultSample, b: ResultSample) -> TTest:
    """Welch's unequal-variance t test; `t` is reported as |t|."""
    xa, xb = a.final_bests, b.final_bests
    if len(xa) < 2 or len(xb) < 2:
        raise StatsError("t test needs at least two runs per sample")
    ma, mb = float(np.mean(xa)), float(np.mean(xb))
    if not (math.isfinite(ma) and math.isfinite(mb)):
        if math.isfinite(ma) != math.isfinite(mb):
            return TTest(math.inf, 0.0, float("nan"))
        return TTest(0.0, 1.0, float("nan"))
    qa = float(np.var(xa, ddof=1)) / len(xa)
    qb = float(np.var(xb, ddof=1)) / len(xb)
    se2 = qa + qb
    if se2 == 0.0:
        if ma == mb:
            return TTest(0.0, 1.0, float(len(xa) + len(xb) - 2))
        return TTest(math.inf, 0.0, float(len(xa) + len(xb) - 2))
    t = abs(ma - mb) / math.sqrt(se2)
    df = se2 * se2 / (qa * qa / (len(xa) - 1) + qb * qb / (len(xb) - 1))
    return TTest(t, t_two_sided_p(t, df), df)


# --------------------------------------------------------------------------
# Ranking
# --------------------------------------------------------------------------


@dataclass
class ProblemRanking:
    problem: str
    order: List[str]
    ranks: Dict[str, int]
    tied: Dict[str, bool]
    tests: List[Tuple[str, str, TTest]]


def rank_problem(samples: Sequence[ResultSample]) -> ProblemRanking:
    """Rank algorithms on one problem by mean, merging non-significant neighbors.

    Algorithms are sorted by mean (ascending, name as tie-breaker) and each
    adjacent pair is t-tested.  A non-significant pair joins one group; a
    group's members all take the position of its first member, so ranks
    skip after a tie (1, 1, 3, ...).
    """
    if len(samples) < 2:
        raise StatsError("ranking needs at least two algorithms")
    problems = {s.problem for s in samples}
    if len(problems) != 1:
        raise StatsError(f"samples span several problems: {sorted(problems)}")
    order = sorted(samples, key=lambda s: (float(np.mean(s.final_bests)), s.algorithm))
    ranks = {order[0].algorithm: 1}
    tied = {s.algorithm: False for s in order}
    tests = []
    group_rank = 1
    for k in range(1, len(order)):
        prev, cur = order[k - 1], order[k]
        tt = unpaired_t(prev, cur)
        tests.append((prev.algorithm, cur.algorithm, tt))
        if tt.significant:
            group_rank = k + 1
        else:
            tied[prev.algorithm] = tied[cur.algorithm] = True
        ranks[cur.algorithm] = group_rank
    return ProblemRanking(order[0].problem, [s.algorithm for s in order], ranks, tied, tests)


@dataclass
class RankTable:
    per_problem_ranks: Dict[Tuple[str, str], float] = field(default_factory=dict)
    algorithms: List[str] = field(default_factory=list)
    problems: List[str] = field(default_factory=list)

    def add(self, algorithm: str, problem: str, rank: float) -> None:
        self.per_problem_ranks[(algorithm, problem)] = rank
        if algorithm not in self.algorithms:
            self.algorithms.append(algorithm)
        if problem not in self.problems:
            self.problems.append(problem)

    @property
    def average_rank(self) -> Dict[str, float]:
        return average_rank(self)


def average_rank(table: RankTable) -> Dict[str, float]:
    """Mean per-problem rank of every algorithm."""
    missing = [(a, p) for a in table.algorithms for p in table.problems
               if (a, p) not in table.per_problem_ranks]
    if missing:
        gaps = ", ".join(f"{a}/{p}" for a, p in missing)
        raise StatsError(f"rank table has missing cells: {gaps}")
    return {a: sum(table.per_problem_ranks[(a, p)] for p in table.problems) / len(table.problems)
            for a in table.algorithms}


# --------------------------------------------------------------------------
# Raw CSV in, report CSVs out
# --------------------------------------------------------------------------


def load_raw_csv(paths: Iterable) -> Dict[Tuple[str, str], ResultSample]:
    """Group raw run rows into samples keyed by (algorithm, problem).

    Values are ordered by run index so row order in the files is irrelevant.
    """
    cells: Dict[Tuple[str, str], List[Tuple[int, float]]] = defaultdict(list)
    for path in paths:
        with Path(path).open(newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(RAW_FIELDS[:5]) - set(reader.fieldnames or ())
            if missing:
                raise StatsError(f"{path}: missing columns {sorted(missing)}")
            for row in reader:
                try:
                    cells[(row["algorithm"], row["problem"])].append(
                        (int(row["run"]), float(row["final_best"])))
                except ValueError as exc:
                    raise StatsError(f"{path}: bad row {row}: {exc}") from exc
    return {k: ResultSample(k[0], k[1], np.array([v for _, v in sorted(rows)]))
            for k, rows in cells.items()}


@dataclass
class Report:
    summaries: Dict[Tuple[str, str], Tuple[float, float]]
    rankings: Dict[str, ProblemRanking]
    table: RankTable
    average: Dict[str, float]


def build_report(samples: Mapping[Tuple[str, str], ResultSample]) -> Report:
    algorithms = sorted({a for a, _ in samples})
    problems = sorted({p for _, p in samples})
    missing = [(a, p) for a in algorithms for p in problems if (a, p) not in samples]
    if missing:
        gaps = ", ".join(f"{a}/{p}" for a, p in missing)
        raise StatsError(f"results do not cover the full algorithm x problem grid; missing: {gaps}")
    summaries = {k: summarize(s) for k, s in sorted(samples.items())}
    table = RankTable()
    rankings = {}
    for p in problems:
        if len(algorithms) == 1:
            table.add(algorithms[0], p, 1)
            continue
        pr = rank_problem([samples[(a, p)] for a in algorithms])
        rankings[p] = pr
        for a in algorithms:
            table.add(a, p, pr.ranks[a])
    return Report(summaries, rankings, table, average_rank(table))


def write_report(report: Report, out_dir) -> Dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"summary": out / "summary.csv", "tests": out / "tests.csv", "ranks": out / "ranks.csv"}
    with paths["summary"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("algorithm", "problem", "mean", "std"))
        for (a, p), (m, s) in report.summaries.items():
            w.writerow((a, p, f"{m:.10g}", f"{s:.10g}"))
    with paths["tests"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("problem", "algo_a", "algo_b", "t", "p", "significant"))
        for p, pr in report.rankings.items():
            for a, b, tt in pr.tests:
                w.writerow((p, a, b, f"{tt.t:.6g}", f"{tt.p:.6g}", int(tt.significant)))
    with paths["ranks"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("algorithm", "problem", "rank"))
        for a in sorted(report.table.algorithms):
            for p in report.table.problems:
                w.writerow((a, p, report.table.per_problem_ranks[(a, p)]))
        for a in sorted(report.average):
            w.writerow((a, "average", f"{report.average[a]:.4g}"))
    return paths


def format_table(report: Report) -> str:
    """Plain-text rank table sorted by average rank."""
    probs = report.table.problems
    algs = sorted(report.average, key=lambda a: (report.average[a], a))
    width = max(len(a) for a in algs) + 2
    lines = ["algorithm".ljust(width) + "".join(p[:10].rjust(11) for p in probs) + "   avg"]
    for a in algs:
        cells = []
        for p in probs:
            r = report.table.per_problem_ranks[(a, p)]
            tie = p in report.rankings and report.rankings[p].tied[a]
            cells.append((("=" if tie else "") + str(r)).rjust(11))
        lines.append(a.ljust(width) + "".join(cells) + f"{report.average[a]:6.2f}")
    return "\n".join(lines)
