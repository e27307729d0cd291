import logging
import math

import pytest

from fusionproc.core.milestones import MilestoneError, compute_milestones, regime, resolve_omega


def test_milestone_formulas():
    n, k = 10**6, 10
    milestones = compute_milestones(n, k)
    omega = math.log(math.log(n))
    cube_root = n ** (1 / 3)
    assert milestones.omega == pytest.approx(omega)
    assert milestones.lambda1 == pytest.approx(cube_root / (k * omega))
    assert milestones.m1 == math.floor((n / 2) * (1 + milestones.lambda1 * n ** (-1 / 3)))
    assert milestones.m2_bound == math.floor((n / 2) * (1 + milestones.lambda2 * n ** (-1 / 3)))
    assert milestones.l1_at_m1_pred == pytest.approx(2 * milestones.lambda1 * n ** (2 / 3))
    assert milestones.l1_at_m3_scale == n / k
    assert milestones.regime == "a"


def test_m3_below_half_and_m1_above_in_the_window():
    milestones = compute_milestones(10**6, 1000)
    assert milestones.m3 < 10**6 / 2 < milestones.m1
    assert not milestones.lambda3_clamped
    assert milestones.lambda3 == pytest.approx(math.sqrt(1000 * math.log(10) / 100), rel=1e-9)
    assert milestones.special_total_at_m3_lower == pytest.approx(
        0.25 * math.sqrt(10**9 / math.log(10)), rel=1e-9
    )


@pytest.mark.parametrize("k, label", [(10, "a"), (1000, "window"), (30_000, "b"), (100_000, "c")])
def test_regime_labels(k, label):
    assert regime(10**6, k, math.log(math.log(10**6))) == label
    assert compute_milestones(10**6, k).regime == label


def test_lambda3_log_is_clamped_with_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="fusionproc.core.milestones"):
        milestones = compute_milestones(1000, 5)
    assert milestones.lambda3_clamped
    assert milestones.lambda3 == pytest.approx(math.sqrt(5 / 1000 ** (1 / 3)))
    assert "clamped" in caplog.text


def test_steps_are_clamped_to_pair_range():
    milestones = compute_milestones(8, 1, "const:0.001")
    assert 0 <= milestones.m3 <= milestones.m1 <= 28
    assert milestones.m1 == 28


def test_omega_choices():
    assert resolve_omega("log", 1000) == pytest.approx(math.log(1000))
    assert resolve_omega("const:2.5", 1000) == 2.5
    assert resolve_omega("loglog", 10) == 1.0
    for bad in ("loglogx", "const:abc", "const:-1"):
        with pytest.raises(MilestoneError):
            resolve_omega(bad, 100)


def test_resolve_tokens():
    milestones = compute_milestones(10**4, 20)
    assert milestones.resolve("m1") == milestones.m1
    assert milestones.resolve(" M2 ") == milestones.m2_bound
    assert milestones.resolve("m3") == milestones.m3
    assert milestones.resolve("42") == 42
    with pytest.raises(MilestoneError):
        milestones.resolve("m4")


@pytest.mark.parametrize("n, k", [(1, 1), (10, 0), (10, 11)])
def test_invalid_arguments(n, k):
    with pytest.raises(MilestoneError):
        compute_milestones(n, k)
