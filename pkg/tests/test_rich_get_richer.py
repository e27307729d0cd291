import math

import numpy as np
import pytest
from pydantic import ValidationError

from fusionproc.core.edge_stream import STREAM_CXY, make_generator
from fusionproc.schemas import CxyConfig, parse_increment_sequence, read_increment_file
from fusionproc.services.rich_get_richer import (
    HypothesisViolationError,
    ScaleSeparationError,
    check_cxy_lemma,
    check_key_lemma,
    check_martingale,
    chernoff_bounds,
    chernoff_tail_estimate,
    run_cxy,
    simulate_cxy_batch,
)


def test_accounting_and_monotone_counters():
    cfg = CxyConfig(C=(3, 1, 4, 1, 5, 9, 2, 6), x=4, y=7, seed=12)
    trajectory = run_cxy(cfg)
    assert trajectory.X[0] == 4 and trajectory.Y[0] == 7
    assert trajectory.t[-1] == 4 + 7 + sum(cfg.C)
    for x, y, t in zip(trajectory.X, trajectory.Y, trajectory.t):
        assert x + y == t
    assert list(trajectory.X) == sorted(trajectory.X)
    assert list(trajectory.Y) == sorted(trajectory.Y)
    assert len(trajectory.p) == len(cfg.C)


def test_empty_increment_sequence():
    trajectory = run_cxy(CxyConfig(C=(), x=3, y=4, seed=1))
    assert trajectory.X == (3,)
    assert trajectory.Y == (4,)
    assert trajectory.final_ratio == 3 / 7


def test_explicit_draws_decide_each_step():
    cfg = CxyConfig(C=(2, 2, 2), x=1, y=1)
    trajectory = run_cxy(cfg, draws=[0.1, 0.9, 0.4])
    assert trajectory.X == (1, 3, 3, 5)
    assert trajectory.Y == (1, 1, 3, 3)
    with pytest.raises(ValueError):
        run_cxy(cfg, draws=[0.1])


def test_batch_columns_reproduce_single_runs():
    C = tuple(int(c) for c in np.random.default_rng(1).integers(1, 6, size=60))
    runs, seed = 8, 77
    final = simulate_cxy_batch(C, 5, 30, runs, seed)
    draws = make_generator(seed, STREAM_CXY).random((len(C), runs))
    for j in range(runs):
        trajectory = run_cxy(CxyConfig(C=C, x=5, y=30), draws=draws[:, j].tolist())
        assert trajectory.X[-1] == final[j]


def test_larger_x_dominates_under_shared_draws():
    rng = np.random.default_rng(4)
    C = tuple(int(c) for c in rng.integers(1, 6, size=200))
    draws = rng.random(len(C)).tolist()
    small = run_cxy(CxyConfig(C=C, x=5, y=20), draws=draws)
    large = run_cxy(CxyConfig(C=C, x=9, y=20), draws=draws)
    for q in range(len(C) + 1):
        assert small.X[q] <= large.X[q]
        assert small.Y[q] >= large.Y[q]


def test_first_step_is_fair():
    runs = 100_000
    final = simulate_cxy_batch((1,), 1, 1, runs, 3)
    share = float(np.mean(final == 2))
    assert abs(share - 0.5) < 4 * math.sqrt(0.25 / runs)


def test_martingale_mean():
    cfg = CxyConfig(C=(1,) * 1000, x=10, y=990, seed=5)
    result = check_martingale(cfg, 100_000)
    assert result.expected == 0.01
    assert abs(result.z_score) < 4


def test_chernoff_closed_form():
    bounds = chernoff_bounds((1,) * 100, 0.5, 10)
    assert bounds.upper == pytest.approx(math.exp(-0.9375))
    assert bounds.upper == pytest.approx(0.3916, abs=1e-4)
    assert bounds.lower == pytest.approx(math.exp(-1.0))
    assert chernoff_bounds((1,) * 100, 0.5, 0)[:2] == (1.0, 1.0)
    assert chernoff_bounds((1,) * 10, 0.5, 100).two_sided == 1.0


@pytest.mark.parametrize("C, p, t", [((), 0.5, 1), ((1,), 0.0, 1), ((1,), 1.0, 1), ((1,), 0.5, -1)])
def test_chernoff_hypotheses(C, p, t):
    with pytest.raises(HypothesisViolationError):
        chernoff_bounds(C, p, t)


def test_chernoff_bounds_dominate_empirical_tails():
    runs = 20_000
    estimates = chernoff_tail_estimate((1,) * 200, 0.3, [5, 10, 15, 20, 30], runs, 8)
    for estimate in estimates:
        slack = 4 * math.sqrt(0.25 / runs)
        assert estimate.upper_empirical <= min(1.0, estimate.upper_bound) + slack
        assert estimate.lower_empirical <= min(1.0, estimate.lower_bound) + slack
        assert estimate.two_sided_empirical <= min(1.0, estimate.two_sided_bound) + slack
    uppers = [estimate.upper_empirical for estimate in estimates]
    assert uppers == sorted(uppers, reverse=True)


@pytest.mark.parametrize("runs", [0, -5])
def test_chernoff_tail_estimate_requires_runs(runs):
    with pytest.raises(ValueError, match="runs must be at least 1"):
        chernoff_tail_estimate((1,) * 50, 0.5, [1.0], runs, 3)


def test_key_lemma_bound():
    cfg = CxyConfig(C=(5,) * 1000, x=200, y=10_000, seed=2)
    result = check_key_lemma(cfg, 2.0, 20_000)
    assert result.bound == pytest.approx(math.exp(-200 / 240))
    assert result.threshold == pytest.approx(200 * 15_200 / 10_200 + 100)
    assert result.empirical <= result.bound + 3 * math.sqrt(0.25 / result.runs)


def test_key_lemma_large_w_is_trivial():
    cfg = CxyConfig(C=(5,) * 1000, x=200, y=10_000, seed=2)
    result = check_key_lemma(cfg, 1e6, 2_000)
    assert result.empirical <= min(1.0, result.bound)


def test_key_lemma_hypotheses():
    with pytest.raises(HypothesisViolationError):
        check_key_lemma(CxyConfig(C=(5,) * 1000, x=200, y=9_000), 2.0, 10)
    with pytest.raises(HypothesisViolationError):
        check_key_lemma(CxyConfig(C=(5,) * 10, x=200, y=9_000), 0.5, 10)
    with pytest.raises(HypothesisViolationError):
        check_key_lemma(CxyConfig(C=(), x=200, y=9_000), 2.0, 10)


def test_cxy_lemma_concentration_and_scaling():
    C = (10,) * 5000
    base = check_cxy_lemma(CxyConfig(C=C, x=100, y=10_000, seed=6), 2_000)
    doubled = check_cxy_lemma(CxyConfig(C=C, x=100, y=20_000, seed=6), 2_000)
    assert base.ratio.p99 < 20
    assert base.bound == pytest.approx(math.exp(-0.5))
    assert doubled.median_fraction / base.median_fraction == pytest.approx(0.5, rel=0.2)


def test_cxy_lemma_needs_scale_separation():
    with pytest.raises(ScaleSeparationError):
        check_cxy_lemma(CxyConfig(C=(1,) * 10, x=50, y=50), 10)
    with pytest.raises(ScaleSeparationError):
        check_cxy_lemma(CxyConfig(C=(200,), x=10, y=10_000), 10)


def test_cxy_config_validation():
    with pytest.raises(ValidationError):
        CxyConfig(C=(0,), x=1, y=1)
    with pytest.raises(ValidationError):
        CxyConfig(C=(1,), x=0, y=1)
    cfg = CxyConfig(C=(1, 7, 3), x=1, y=1)
    assert (cfg.c, cfg.r) == (7, 3)


def test_increment_sequence_parsing(tmp_path):
    assert parse_increment_sequence("5x3") == (5, 5, 5)
    assert parse_increment_sequence("1, 2,3") == (1, 2, 3)
    assert parse_increment_sequence("2x2,7") == (2, 2, 7)
    assert parse_increment_sequence("") == ()
    with pytest.raises(ValueError):
        parse_increment_sequence("1,-2")
    path = tmp_path / "c.txt"
    path.write_text("4\n\n6\n", encoding="utf-8")
    assert read_increment_file(str(path)) == (4, 6)
    path.write_text("4\nfive\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 2"):
        read_increment_file(str(path))
