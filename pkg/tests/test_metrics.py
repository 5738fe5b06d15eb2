"""Metric aggregation checked against naive recomputation."""

import numpy as np
import pytest

from riskdrive.metrics import (MetricsReport, burst_windows, compute_metrics,
                               episode_return, format_table,
                               trace_attack_success)
from tests.test_trace import make_record, make_trace
from riskdrive.trace import EpisodeTrace


def attacked_trace(kind="collision", burst=(0.5, 1.0), end=2.0,
                   n=20) -> EpisodeTrace:
    t = EpisodeTrace.begin(0, "f", "lidar", "scripted")
    for i in range(n):
        ts = round(i * 0.1, 6)
        t.add(make_record(step=i, time_s=ts,
                          burst_active=burst[0] <= ts <= burst[1]))
    t.finish(kind, n, end)
    return t


def test_tsr_counts_goal_fraction():
    traces = [make_trace(2, kind="goal") for _ in range(8)]
    traces += [make_trace(2, kind="collision"), make_trace(2, kind="timeout")]
    report = compute_metrics(traces, attacked=False)
    assert report.tsr == pytest.approx(0.8)
    assert report.episodes == 10


def test_return_and_violation_stats_match_naive():
    rewards = [1.5, -2.0, 0.25]
    traces = []
    for i, r in enumerate(rewards):
        t = EpisodeTrace.begin(i, "f", "none", "none")
        t.add(make_record(step=0, reward=r))
        t.add(make_record(step=1, reward=r))
        t.finish("collision" if i == 0 else "goal", 2, 0.2)
        traces.append(t)
    report = compute_metrics(traces, attacked=False)
    per_ep = [2 * r for r in rewards]
    assert report.tr_mean == pytest.approx(np.mean(per_ep))
    assert report.tr_std == pytest.approx(np.std(per_ep, ddof=1))
    assert report.tsv_mean == pytest.approx(1 / 3)
    assert episode_return(traces[0]) == pytest.approx(3.0)


def test_discomfort_rate_counts_harsh_ticks():
    t = EpisodeTrace.begin(0, "f", "none", "none")
    for i, acc in enumerate([0.0, 3.0, -2.6, 1.0, 2.4]):
        t.add(make_record(step=i, phys_acc=acc))
    t.finish("goal", 5, 0.5)
    report = compute_metrics([t], attacked=False)
    assert report.dr == pytest.approx(2 / 5)


def test_burst_windows_merge_contiguous_spans():
    t = attacked_trace(burst=(0.3, 0.7))
    assert burst_windows(t) == [(pytest.approx(0.3), pytest.approx(0.7))]


def test_attack_success_window():
    # Outcome at 2.0 s, burst [0.5, 1.0]: 2.0 <= 1.0 + 3.0, success.
    assert trace_attack_success(attacked_trace(end=2.0))
    # Outcome far outside the window.
    assert not trace_attack_success(attacked_trace(end=9.0))
    # Goal outcomes never count as attack success.
    assert not trace_attack_success(attacked_trace(kind="goal", end=2.0))


def test_attacked_set_reports_dra_and_asr():
    hit = attacked_trace(kind="collision", end=2.0)
    miss = attacked_trace(kind="goal", end=2.0)
    deflected = attacked_trace(kind="goal", end=2.0)
    for rec in deflected.records[5:8]:
        rec["override"] = True
    report = compute_metrics([hit, miss, deflected], attacked=True)
    assert report.asr == pytest.approx(1 / 3)
    assert report.dra == pytest.approx(1 / 3)
    clean = compute_metrics([make_trace(2)], attacked=False)
    assert clean.asr is None and clean.dra is None


def test_compute_rejects_empty_and_mixed():
    with pytest.raises(ValueError):
        compute_metrics([], attacked=False)
    with pytest.raises(ValueError):
        compute_metrics([make_trace(2), attacked_trace()], attacked=False)
    with pytest.raises(ValueError):
        compute_metrics([make_trace(2)], attacked=True)


def test_per_seed_breakdown():
    traces = [make_trace(2, seed=1, kind="goal"),
              make_trace(2, seed=1, kind="collision"),
              make_trace(2, seed=2, kind="goal")]
    report = compute_metrics(traces, attacked=False)
    assert report.per_seed[1]["episodes"] == 2
    assert report.per_seed[1]["goals"] == 1
    assert report.per_seed[1]["violations"] == 1
    assert report.per_seed[2]["goals"] == 1


def test_format_table_lists_all_sections():
    report = compute_metrics([attacked_trace()], attacked=True,
                             tsv_train=3.0, tdu=1234)
    text = format_table(report, title="attacked")
    for key in ("TSR", "TR", "TSV", "DR", "DRA", "ASR", "TSV_train", "TDU"):
        assert key in text
    assert "attacked" in text
