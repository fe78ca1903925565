import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdswarm.stats import (RankTable, ResultSample, StatsError, average_rank, betainc,
                           build_report, format_table, load_raw_csv, rank_problem, summarize,
                           t_two_sided_p, unpaired_t, write_report)

scipy_stats = pytest.importorskip("scipy.stats")
scipy_special = pytest.importorskip("scipy.special")

PUBLISHED_LBEST_RANKS = [5, 7, 3, 6, 4, 1, 1, 3, 3, 1, 1, 1, 1,
                       1, 4, 2, 1, 3, 3, 3, 1, 4, 1, 2, 4]


def S(values, alg="a", prob="p"):
    return ResultSample(alg, prob, np.asarray(values, dtype=float))


def with_moments(mean, std, n, seed):
    """Normal sample rescaled to exactly the given mean and sample std."""
    z = np.random.default_rng(seed).standard_normal(n)
    z = (z - z.mean()) / z.std(ddof=1)
    return mean + std * z


def test_summarize_examples():
    assert summarize(S([1, 1, 1, 1])) == (1.0, 0.0)
    m, s = summarize(S([0, 2]))
    assert m == 1.0 and s == pytest.approx(math.sqrt(2))
    m, s = summarize(S([3, 5, 4, 4]))
    assert m == 4.0 and s == pytest.approx(0.8165, abs=1e-4)
    assert s == pytest.approx(float(np.std([3, 5, 4, 4], ddof=1)), rel=1e-15)
    with pytest.raises(StatsError):
        summarize(S([1.0]))


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 200), st.floats(0.05, 200), st.floats(0, 1))
def test_betainc_matches_reference(a, b, x):
    assert betainc(a, b, x) == pytest.approx(float(scipy_special.betainc(a, b, x)), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 50), st.floats(1, 500))
def test_t_tail_matches_reference(t, df):
    assert t_two_sided_p(t, df) == pytest.approx(2 * float(scipy_stats.t.sf(t, df)), abs=1e-10)


def test_unpaired_t_examples():
    x = S(np.arange(6.0))
    tt = unpaired_t(x, x)
    assert tt.t == 0 and tt.p == pytest.approx(1.0) and not tt.significant
    jitter = np.random.default_rng(0).normal(0, 1e-6, 5)
    assert unpaired_t(S(jitter), S(10 + jitter[::-1])).significant
    zero = unpaired_t(S([2, 2, 2]), S([2, 2, 2]))
    assert (zero.t, zero.p) == (0.0, 1.0)


def test_unpaired_t_reference_oracle():
    rng = np.random.default_rng(2024)
    a, b = rng.normal(0, 1, 30), rng.normal(0.4, 1.7, 30)
    tt = unpaired_t(S(a), S(b))
    ref = scipy_stats.ttest_ind(a, b, equal_var=False)
    assert tt.t == pytest.approx(abs(ref.statistic), abs=1e-10)
    assert tt.p == pytest.approx(ref.pvalue, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_unpaired_t_symmetric_and_scale_free(seed, k):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(0, 1, 12), rng.normal(0.5, 2, 9)
    t1, t2 = unpaired_t(S(a), S(b)), unpaired_t(S(b), S(a))
    assert t1.t == pytest.approx(t2.t, rel=1e-12) and t1.p == pytest.approx(t2.p, rel=1e-12)
    t3 = unpaired_t(S(k * a), S(k * b))
    assert t3.t == pytest.approx(t1.t, rel=1e-9) and t3.p == pytest.approx(t1.p, rel=1e-9, abs=1e-12)


def test_rank_examples():
    sep = [S([0.0, 0.001, -0.001], "x"), S([5, 5.001, 4.999], "y"), S([9, 9.001, 8.999], "z")]
    r = rank_problem(sep)
    assert [r.ranks[k] for k in "xyz"] == [1, 2, 3]
    rng = np.random.default_rng(1)
    same = [S(rng.normal(0, 1, 20), k) for k in "xyz"]
    r = rank_problem(same)
    assert all(r.ranks[k] == 1 and r.tied[k] for k in "xyz")


def test_rank_competition_skips():
    # a ~ b tied, c far above: ranks 1, 1, 3
    r = rank_problem([S([1, 2, 3], "a"), S([1.1, 2.1, 3.1], "b"), S([100, 100.1, 99.9], "c")])
    assert r.ranks == {"a": 1, "b": 1, "c": 3}


def test_rank_lbest_f6_tie():
    lb = S(with_moments(19.5009, 16.7704, 100, 0), "RDPSO-Lbest", "F6")
    lbrp = S(with_moments(24.0065, 24.4861, 100, 1), "RDPSO-Lbest-RP", "F6")
    r = rank_problem([lbrp, lb])
    assert r.ranks["RDPSO-Lbest"] == 1 and r.ranks["RDPSO-Lbest-RP"] == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-1e3, 1e3))
def test_rank_shift_invariant(seed, c):
    rng = np.random.default_rng(seed)
    samples = [S(rng.normal(mu, 1, 10), f"a{k}") for k, mu in enumerate(rng.uniform(0, 3, 4))]
    shifted = [S(s.final_bests + c, s.algorithm) for s in samples]
    assert rank_problem(samples).ranks == rank_problem(shifted).ranks


def test_average_rank_examples():
    t = RankTable()
    for p in range(25):
        t.add("RDPSO-Lbest", f"F{p + 1}", PUBLISHED_LBEST_RANKS[p])
    assert average_rank(t)["RDPSO-Lbest"] == pytest.approx(2.64, abs=1e-12)
    t = RankTable()
    t.add("a", "p1", 1)
    t.add("a", "p2", 3)
    t.add("b", "p1", 2)
    t.add("b", "p2", 2)
    assert average_rank(t) == {"a": 2.0, "b": 2.0}
    t.add("c", "p1", 3)
    with pytest.raises(StatsError, match="c/p2"):
        average_rank(t)


def _write_raw(path, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["algorithm", "problem", "run", "seed", "final_best", "wall_ms"])
        w.writerows(rows)


def test_report_pipeline(tmp_path):
    rng = np.random.default_rng(0)
    rows = [(a, p, r, r, float(off + rng.normal(0, 0.01)), 1.0)
            for a, off in (("good", 0.0), ("bad", 5.0)) for p in ("p1", "p2") for r in range(5)]
    _write_raw(tmp_path / "raw.csv", rows)
    rep = build_report(load_raw_csv([tmp_path / "raw.csv"]))
    assert rep.average == {"bad": 2.0, "good": 1.0}
    paths = write_report(rep, tmp_path / "out")
    with paths["ranks"].open() as fh:
        ranks = list(csv.DictReader(fh))
    assert len([r for r in ranks if r["problem"] != "average"]) == 4
    assert len([r for r in ranks if r["problem"] == "average"]) == 2
    assert "good" in format_table(rep).splitlines()[1]

    rng2 = np.random.default_rng(5)
    shuffled = [rows[k] for k in rng2.permutation(len(rows))]
    _write_raw(tmp_path / "raw2.csv", shuffled)
    paths2 = write_report(build_report(load_raw_csv([tmp_path / "raw2.csv"])), tmp_path / "out2")
    for k in paths:
        assert paths[k].read_bytes() == paths2[k].read_bytes()


def test_report_missing_cells(tmp_path):
    _write_raw(tmp_path / "raw.csv", [("a", "p1", 0, 0, 1, 1), ("a", "p1", 1, 1, 1, 1),
                                      ("b", "p2", 0, 0, 1, 1), ("b", "p2", 1, 1, 1, 1)])
    with pytest.raises(StatsError, match="a/p2"):
        build_report(load_raw_csv([tmp_path / "raw.csv"]))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(1, 5), st.integers(0, 1000))
def test_average_rank_bounds(n_alg, n_prob, seed):
    rng = np.random.default_rng(seed)
    t = RankTable()
    for p in range(n_prob):
        samples = [S(rng.normal(rng.uniform(0, 2), 1, 5), f"a{k}", f"p{p}") for k in range(n_alg)]
        r = rank_problem(samples)
        for a, v in r.ranks.items():
            t.add(a, f"p{p}", v)
    for v in average_rank(t).values():
        assert 1 <= v <= n_alg
