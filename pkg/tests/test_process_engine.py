import itertools
import math

import pytest
from pydantic import ValidationError

from fusionproc.core.config import get_settings
from fusionproc.core.edge_stream import StreamMode, open_stream
from fusionproc.core.events import (
    EventSpec,
    component_count_reaches,
    largest_component_at_least,
    largest_component_special,
)
from fusionproc.core.partition import make_partition
from fusionproc.models import MergeOutcome, StopRule
from fusionproc.schemas import ProcessConfig
from fusionproc.services.process_engine import (
    EDGE_COUNT_EVENT,
    DuplicateEventError,
    ProcessConfigError,
    place_specials,
    register_event,
    run_cdf,
    run_coupled_monotonicity,
    run_gnm,
    run_gnp,
    run_kprocess,
)


@pytest.fixture(autouse=True)
def setup_env(monkeypatch):
    monkeypatch.delenv("FUSIONPROC_EXHAUSTIVE_MAX_N", raising=False)
    monkeypatch.delenv("FUSIONPROC_STREAM_BATCH_SIZE", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def pair_total(n):
    return n * (n - 1) // 2


def _accepted_pairs(report):
    return [(u, v) for _, u, v, outcome in report.trace if outcome != MergeOutcome.COLLISION.value]


def test_gnm_complete_and_empty_graphs():
    assert run_gnm(4, 6, 1).final_sizes == [(4, 0)]
    assert run_gnm(6, 0, 1).final_sizes == [(1, 0)] * 6
    report = run_gnm(1, 0, 1)
    assert report.final_sizes == [(1, 0)]
    assert report.considered == 0


def test_gnm_rejects_out_of_range_m():
    with pytest.raises(ProcessConfigError):
        run_gnm(4, 7, 1)


def test_gnm_snapshots_track_growth():
    report = run_gnm(200, 400, 9, snapshot_steps=[0, 100, 400])
    assert report.snapshots[0].sizes == (1,) * 200
    l1 = [report.snapshots[step].L(1) for step in (0, 100, 400)]
    assert l1 == sorted(l1)
    assert report.considered == 400
    assert report.M + report.collisions == 400
    assert report.collisions == 0


@pytest.mark.parametrize("p, expected", [(0.0, [(1, 0)] * 5), (1.0, [(5, 0)])])
def test_gnp_extremes(p, expected):
    report = run_gnp(5, p, 3)
    assert report.final_sizes == expected
    assert report.events[0].name == EDGE_COUNT_EVENT
    assert report.events[0].step == (0 if p == 0.0 else 10)


def test_gnp_rejects_invalid_probability():
    with pytest.raises(ProcessConfigError):
        run_gnp(5, 1.5, 3)


def test_kprocess_with_every_vertex_special():
    report = run_kprocess(ProcessConfig(n=1000, k=1000, seed=4))
    assert report.M == 0
    assert report.M_hat == 0
    assert report.collisions == pair_total(1000)
    assert report.steps_simulated == 0


def test_kprocess_with_one_special_is_complete_graph():
    report = run_kprocess(ProcessConfig(n=4, k=1, seed=1, stop=StopRule.EXHAUSTIVE))
    assert report.M == 6
    assert report.final_sizes == [(4, 1)]
    assert report.collisions == 0


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_early_stop_matches_exhaustive(k):
    for seed in range(200):
        events = (
            component_count_reaches(k),
            largest_component_special(after_step=3),
            largest_component_at_least(5),
        )
        common = dict(n=12, k=k, seed=seed, snapshot_steps=[0, 5, 20, 40, 66], events=events)
        early = run_kprocess(ProcessConfig(**common))
        full = run_kprocess(ProcessConfig(stop=StopRule.EXHAUSTIVE, **common))
        assert early == full, f"seed {seed}"
        assert early.steps_simulated <= full.steps_simulated
        assert full.event_step("component_count_reaches") == full.M_hat


def test_structural_finality_and_trivial_bound():
    for n, k in [(9, 2), (15, 3), (20, 5), (30, 1)]:
        for seed in range(20):
            report = run_kprocess(ProcessConfig(n=n, k=k, seed=seed, stop=StopRule.EXHAUSTIVE))
            assert len(report.final_sizes) == k
            assert all(count == 1 for _, count in report.final_sizes)
            assert report.M == sum(size * (size - 1) // 2 for size, _ in report.final_sizes)
            assert report.M <= math.comb(n - k + 1, 2)
            assert report.M + report.collisions == report.considered == pair_total(n)
            stats = report.final_stats
            assert stats.L_hat(1) == stats.L(1)


def test_no_merge_after_freeze():
    for seed in range(20):
        report = run_kprocess(
            ProcessConfig(n=25, k=3, seed=seed, stop=StopRule.EXHAUSTIVE, record_trace=True)
        )
        assert len(report.trace) == pair_total(25)
        after = [outcome for step, _, _, outcome in report.trace if step > report.M_hat]
        assert MergeOutcome.MERGED.value not in after


def test_at_step_stops_and_validates():
    report = run_kprocess(ProcessConfig(n=50, k=3, seed=2, stop=StopRule.AT_STEP, stop_step=30))
    assert report.considered == 30
    assert report.M + report.collisions == 30
    with pytest.raises(ProcessConfigError):
        run_kprocess(ProcessConfig(n=5, k=2, stop=StopRule.AT_STEP, stop_step=11))


def test_exhaustive_limit_comes_from_settings(monkeypatch):
    monkeypatch.setenv("FUSIONPROC_EXHAUSTIVE_MAX_N", "10")
    get_settings.cache_clear()
    with pytest.raises(ProcessConfigError):
        run_kprocess(ProcessConfig(n=11, k=2, stop=StopRule.EXHAUSTIVE))


def test_stream_modes_are_both_valid_runs():
    for mode in StreamMode:
        report = run_kprocess(ProcessConfig(n=40, k=4, seed=5, stream_mode=mode, stop=StopRule.EXHAUSTIVE))
        assert len(report.final_sizes) == 4


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=5, k=9),
        dict(n=5),
        dict(n=5, k=2, family=[[0, 1]]),
        dict(n=5, k=2, stop=StopRule.AT_STEP),
        dict(n=5, k=2, snapshot_steps=[3, 3]),
        dict(n=5, k=2, seed=-1),
    ],
)
def test_process_config_validation(kwargs):
    with pytest.raises(ValidationError):
        ProcessConfig(**kwargs)


def test_place_specials_random_sets_are_nested():
    small = place_specials(100, 5, 7, "random")
    large = place_specials(100, 20, 7, "random")
    assert large[:5] == small
    assert len(set(large)) == 20
    assert place_specials(10, 3, 7) == [0, 1, 2]
    with pytest.raises(ProcessConfigError):
        place_specials(10, 3, 7, "middle")


def test_register_event_rejects_duplicates():
    cfg = ProcessConfig(n=10, k=2)
    cfg = register_event(cfg, component_count_reaches(2))
    with pytest.raises(DuplicateEventError):
        register_event(cfg, component_count_reaches(3))
    renamed = register_event(cfg, component_count_reaches(3, name="three"))
    assert [spec.name for spec in renamed.events] == ["component_count_reaches", "three"]


def test_event_fires_at_step_zero():
    spec = EventSpec(name="empty", predicate=lambda step, partition: partition.num_components == 6)
    report = run_kprocess(ProcessConfig(n=6, k=2, events=(spec,)))
    assert report.event_step("empty") == 0
    assert report.event_step("missing") is None


def test_largest_special_event_fires_by_unique_largest_step():
    for seed in range(30):
        n = 60
        report = run_kprocess(
            ProcessConfig(
                n=n,
                k=1,
                seed=seed,
                stop=StopRule.EXHAUSTIVE,
                record_trace=True,
                events=(largest_component_special(),),
            )
        )
        replay = make_partition(n)
        unique_largest_step = None
        for step, u, v, _ in report.trace:
            replay.union(u, v)
            sizes = {}
            for label in replay.component_labels():
                sizes[label] = sizes.get(label, 0) + 1
            mine = sizes[replay.find(0)]
            if all(size < mine for label, size in sizes.items() if label != replay.find(0)):
                unique_largest_step = step
                break
        fired = report.event_step("largest_component_special")
        assert fired is not None and unique_largest_step is not None
        assert 1 <= fired <= unique_largest_step


def test_cdf_pairwise_family_reproduces_kprocess():
    terminals = [0, 1, 2, 3]
    family = [list(pair) for pair in itertools.combinations(terminals, 2)]
    for stop in (StopRule.EXHAUSTIVE, StopRule.AT_STEP):
        for seed in range(10):
            common = dict(n=30, seed=seed, stop=stop, stop_step=200, snapshot_steps=[10, 100])
            cdf = run_cdf(ProcessConfig(family=family, **common))
            kproc = run_kprocess(ProcessConfig(k=4, **common))
            assert cdf == kproc


def test_cdf_empty_family_is_complete_graph():
    report = run_cdf(ProcessConfig(n=7, family=[], stop=StopRule.EXHAUSTIVE))
    assert report.M == pair_total(7)
    assert report.final_sizes == [(7, 0)]
    assert report.M_hat is None


def test_cdf_triple_is_never_fully_joined():
    for seed in range(300):
        report = run_cdf(
            ProcessConfig(n=5, family=[[0, 1, 2]], seed=seed, stop=StopRule.EXHAUSTIVE, record_trace=True)
        )
        assert len(report.final_sizes) >= 2
        replay = make_partition(5)
        for u, v in _accepted_pairs(report):
            if not replay.same_component(u, v):
                replay.union(u, v)
        assert len({replay.find(0), replay.find(1), replay.find(2)}) >= 2


def test_cdf_rejects_at_k_and_missing_family():
    with pytest.raises(ProcessConfigError):
        run_cdf(ProcessConfig(n=5, family=[[0, 1]]))
    with pytest.raises(ProcessConfigError):
        run_cdf(ProcessConfig(n=5, k=2))
    with pytest.raises(ProcessConfigError):
        run_kprocess(ProcessConfig(n=5, family=[[0, 1]], stop=StopRule.EXHAUSTIVE))


def test_coupled_runs_are_ordered():
    steps = [100, 400, 800, 1200, 2000]
    for seed in range(50):
        first, second = run_coupled_monotonicity(200, 2, 5, seed, steps)
        for step in steps:
            assert first.snapshots[step].L(1) >= second.snapshots[step].L(1)
            assert len(first.snapshots[step].sizes) <= len(second.snapshots[step].sizes)
        assert first.M_hat >= second.M_hat
        assert first.final_stats.L_hat(1) >= second.final_stats.L(1)


def test_coupled_runs_validate_k_order():
    with pytest.raises(ProcessConfigError):
        run_coupled_monotonicity(50, 5, 2, 1)


@pytest.mark.parametrize("stop", [StopRule.AT_K_COMPONENTS, StopRule.EXHAUSTIVE, StopRule.AT_STEP])
def test_block_and_per_pair_runs_agree(stop):
    for seed in range(30):
        events = (largest_component_special(after_step=40), largest_component_at_least(12))
        common = dict(
            n=60, k=4, seed=seed, stop=stop, stop_step=900, snapshot_steps=[1, 30, 31, 600], events=events, batch_size=37
        )
        block = run_kprocess(ProcessConfig(**common))
        per_pair = run_kprocess(ProcessConfig(record_trace=True, **common))
        assert block == per_pair, f"seed {seed}"
        assert block.steps_simulated == per_pair.steps_simulated


def test_gnm_block_run_matches_stream_replay():
    report = run_gnm(80, 500, 4, snapshot_steps=[100, 250], events=(largest_component_at_least(20),), batch_size=64)
    pairs = open_stream(80, 4, StreamMode.LAZY, 64).take(500)
    partition = make_partition(80)
    step_reached = None
    for step, (u, v) in enumerate(pairs, start=1):
        partition.union(u, v)
        if step_reached is None and partition.largest_size >= 20:
            step_reached = step
    assert report.final_sizes == partition.component_sizes()
    assert report.event_step("largest_component_at_least") == step_reached
