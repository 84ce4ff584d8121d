"""Routing metrics, bandwidth arithmetic, report serialization."""

import numpy as np
import pytest

from stegosim.errors import UndefinedMetricError, ValidationError
from stegosim.metrics import (
    bandwidth_mb,
    compute_metrics,
    read_report_csv,
    write_report_csv,
    write_report_json,
)
from stegosim.simnet import RunResult


def make_result(months, unique, dup, per_bot_gen, per_bot_del, bot_count=None,
                bits=10070):
    months_arr = lambda xs: np.asarray(xs, dtype=np.float64)
    per_bot_gen = np.asarray(per_bot_gen, dtype=np.float64)
    per_bot_del = np.asarray(per_bot_del, dtype=np.float64)
    generated = np.full(months, per_bot_gen.sum() / max(months, 1))
    return RunResult(
        months=months, trials=1,
        bot_count=bot_count if bot_count is not None else int((per_bot_gen > 0).sum()),
        bits_per_message=bits,
        generated_per_month=generated,
        transmitted_per_month=np.zeros(months),
        delivered_unique_per_month=months_arr(unique),
        delivered_duplicate_per_month=months_arr(dup),
        per_bot_generated=per_bot_gen,
        per_bot_delivered=per_bot_del,
    )


def test_bandwidth_mb_paper_shaped_values():
    # 2**20-byte megabytes are the convention that puts these on round
    # figures; the q=8 and q=2 capacities bracket the reference points.
    assert 21.50 <= bandwidth_mb(18000, 10070, 1) <= 21.72
    assert 86.0 <= bandwidth_mb(18000, 40280, 1) <= 86.9
    assert bandwidth_mb(0, 12345, 1) == 0.0
    with pytest.raises(ValidationError):
        bandwidth_mb(10, 10, 0)


def test_bandwidth_mb_linear():
    base = bandwidth_mb(100, 5000, 1)
    assert bandwidth_mb(200, 5000, 1) == pytest.approx(2 * base)
    assert bandwidth_mb(100, 10000, 1) == pytest.approx(2 * base)
    assert bandwidth_mb(100, 5000, 4) == pytest.approx(base / 4)


def test_compute_metrics_simple():
    res = make_result(
        months=2, unique=[3, 1], dup=[1, 0],
        per_bot_gen=[2, 2, 0], per_bot_del=[2, 2, 0],
    )
    rep = compute_metrics(res)
    assert rep.channel_efficiency == 1.0
    assert rep.duplication_fraction == 0.2
    assert rep.botnet_bandwidth_msgs == 2.0
    assert rep.channel_bandwidth == 4 / (2 * 2)
    assert rep.botnet_bandwidth_mb == pytest.approx(
        bandwidth_mb(4, 10070, 2))


def test_efficiency_excludes_silent_bots():
    res = make_result(
        months=1, unique=[1], dup=[0],
        per_bot_gen=[4, 0, 4], per_bot_del=[2, 0, 0],
    )
    rep = compute_metrics(res)
    assert rep.channel_efficiency == pytest.approx((0.5 + 0.0) / 2)


def test_zero_generated_raises():
    res = make_result(months=1, unique=[0], dup=[0],
                      per_bot_gen=[0, 0], per_bot_del=[0, 0], bot_count=2)
    with pytest.raises(UndefinedMetricError):
        compute_metrics(res)


def test_concatenation_equals_weighted_combination():
    a = make_result(months=2, unique=[4, 2], dup=[2, 0],
                    per_bot_gen=[3, 3, 0, 0], per_bot_del=[2, 1, 0, 0])
    b = make_result(months=2, unique=[1, 1], dup=[1, 1],
                    per_bot_gen=[0, 0, 4, 4], per_bot_del=[0, 0, 1, 3])
    combined = RunResult(
        months=2, trials=1, bot_count=a.bot_count + b.bot_count,
        bits_per_message=a.bits_per_message,
        generated_per_month=a.generated_per_month + b.generated_per_month,
        transmitted_per_month=a.transmitted_per_month + b.transmitted_per_month,
        delivered_unique_per_month=(a.delivered_unique_per_month
                                    + b.delivered_unique_per_month),
        delivered_duplicate_per_month=(a.delivered_duplicate_per_month
                                       + b.delivered_duplicate_per_month),
        per_bot_generated=a.per_bot_generated + b.per_bot_generated,
        per_bot_delivered=a.per_bot_delivered + b.per_bot_delivered,
    )
    ra, rb, rc = compute_metrics(a), compute_metrics(b), compute_metrics(combined)
    wa, wb = ra.bot_count, rb.bot_count
    assert rc.channel_efficiency == pytest.approx(
        (ra.channel_efficiency * wa + rb.channel_efficiency * wb) / (wa + wb))
    assert rc.channel_bandwidth == pytest.approx(
        (ra.channel_bandwidth * wa + rb.channel_bandwidth * wb) / (wa + wb))
    arrivals_a = 6 + 2
    arrivals_b = 2 + 2
    assert rc.duplication_fraction == pytest.approx(
        (ra.duplication_fraction * arrivals_a
         + rb.duplication_fraction * arrivals_b) / (arrivals_a + arrivals_b))


def test_tree_topology_has_no_duplicates():
    from stegosim.graph import SocialDataset
    from stegosim.simnet import SimConfig, run_trial
    from stegosim.stegochannel import profile_from_tables

    # Balanced binary tree rooted at the collector: unique paths only.
    edges = tuple((child, (child - 1) // 2) for child in range(1, 15))
    ds = SocialDataset(node_count=15, edges=edges,
                       uploads=np.full((15, 6), 50), months=6)
    cfg = SimConfig(K=1, ttl=3, command_rate=0, botmaster_trials=1, rng_seed=0)
    res = run_trial(ds, cfg, profile_from_tables(75, 8), set(range(15)),
                    botmaster=0, engine="python")
    assert res.delivered_duplicate_per_month.sum() == 0
    assert compute_metrics(res).duplication_fraction == 0.0


def test_csv_round_trip_and_no_nan(tmp_path):
    res = make_result(months=3, unique=[2, 0, 1], dup=[1, 0, 0],
                      per_bot_gen=[2, 4], per_bot_del=[1, 2])
    rep = compute_metrics(res)
    path = tmp_path / "m.csv"
    write_report_csv(rep, path)
    text = path.read_text()
    assert "nan" not in text.lower()
    assert "no arrivals this month" in text
    parsed = read_report_csv(path)
    assert len(parsed["months"]) == 3
    assert parsed["summary"]["channel_efficiency"] == pytest.approx(
        rep.channel_efficiency)
    assert parsed["months"][1]["duplication_fraction"] is None


def test_json_report(tmp_path):
    res = make_result(months=1, unique=[2], dup=[0],
                      per_bot_gen=[2, 2], per_bot_del=[1, 1])
    path = tmp_path / "m.json"
    write_report_json(compute_metrics(res), path)
    import json

    data = json.loads(path.read_text())
    assert data["channel_efficiency"] == 0.5
    assert len(data["per_month"]) == 1
