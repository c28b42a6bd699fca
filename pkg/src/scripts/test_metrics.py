from __future__ import annotations

import numpy as np
import pytest

from src.metrics.ledger import (
    MetricsLedger,
    avg_handovers,
    cell_delay,
    cell_throughput,
    ping_pong_rate,
    summarize,
    total_delay,
    total_throughput,
)
from src.metrics.optimize import (
    average_compare_rows,
    average_over_seeds,
    improvement,
    optimize_ratio,
    select_optimum,
    sum_over_speeds,
)
from src.schema.results import HandoverEvent, RunRecord, SweepRow
from src.schema.scenario import Algorithm


def _record(algorithm=Algorithm.HOA1, speed=3.0, hom=2.0, param=1.0, seed=1, ho=1.0, st=4e7, delay=5.0):
    return RunRecord(
        algorithm=algorithm,
        speed_kmh=speed,
        hom_db=hom,
        ttt_or_factor=param,
        seed=seed,
        ho_avg=ho,
        total_throughput_bps=st,
        total_delay_ms=delay,
        optimize_ratio=optimize_ratio(st, ho),
    )


def _row(hom: float, ratio: float, param: float = 1.0) -> SweepRow:
    return SweepRow(
        algorithm=Algorithm.HOA1, speed_kmh=3.0, hom_db=hom, ttt_or_factor=param,
        st_bps=ratio, anoh=1.0, optimize_ratio=ratio,
    )


# --- ledger metrics


def test_average_handovers():
    ledger = MetricsLedger.empty(num_users=100, num_cells=7, sim_time_ms=10_000)
    assert avg_handovers(ledger) == 0.0
    ledger.ho_total = 150
    assert avg_handovers(ledger) == pytest.approx(0.15)


def test_handover_events_feed_the_counters():
    ledger = MetricsLedger.empty(num_users=2, num_cells=7, sim_time_ms=1000)
    event = HandoverEvent(ue_id=0, time_ms=10, source_cell=0, target_cell=1)
    ledger.record_handover(event)
    ledger.record_handover(event, ping_pong=True)
    assert ledger.ho_total == 2
    assert ping_pong_rate(ledger) == pytest.approx(0.5)


def test_cell_throughput_of_constant_delivery():
    ledger = MetricsLedger.empty(num_users=1, num_cells=7, sim_time_ms=1000)
    for t in range(1000):
        ledger.credit(t, 0, 1000)
    assert cell_throughput(ledger, 0) == pytest.approx(1e6)
    assert total_throughput(ledger) == pytest.approx(1e6)
    assert total_throughput(MetricsLedger.empty(num_users=3, num_cells=7, sim_time_ms=1000)) == 0.0


def test_throughput_follows_serving_cell_at_credit_time():
    ledger = MetricsLedger.empty(num_users=1, num_cells=2, sim_time_ms=2)
    ledger.sample(0, np.array([0]), np.array([0]))
    ledger.sample(1, np.array([1]), np.array([0]))
    ledger.credit(0, 0, 300)
    ledger.credit(1, 0, 500)
    assert cell_throughput(ledger, 0) == pytest.approx(300 / 0.002)
    assert cell_throughput(ledger, 1) == pytest.approx(500 / 0.002)


def test_single_user_hol_delay():
    ledger = MetricsLedger.empty(num_users=1, num_cells=7, sim_time_ms=1)
    ledger.sample(0, np.array([0]), np.array([5]))
    assert cell_delay(ledger, 0) == 5.0


def test_cell_delay_averages_users_then_ttis():
    ledger = MetricsLedger.empty(num_users=2, num_cells=7, sim_time_ms=100)
    for t in range(100):
        ledger.sample(t, np.array([3, 3]), np.array([4, 6]))
    assert cell_delay(ledger, 3) == pytest.approx(5.0)
    assert cell_delay(ledger, 0) == 0.0
    assert total_delay(ledger) == pytest.approx(5.0)


def test_empty_ledger_summary_is_zero():
    summary = summarize(MetricsLedger.empty(num_users=100, num_cells=7, sim_time_ms=0))
    assert summary["ho_avg"] == 0.0
    assert summary["total_throughput_bps"] == 0.0
    assert summary["total_delay_ms"] == 0.0
    assert summary["cell_throughput_bps"] == [0.0] * 7


# --- optimization


def test_optimize_ratio():
    assert optimize_ratio(5e7, 2.0) == pytest.approx(2.5e7)
    assert optimize_ratio(5e7, 0.0) == pytest.approx(1e8)
    with pytest.raises(ValueError):
        optimize_ratio(-1.0, 1.0)


def test_optimize_ratio_decreases_with_handovers():
    ratios = [optimize_ratio(5e7, anoh) for anoh in (0.5, 0.75, 1.0, 4.0)]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_zero_handovers_count_as_half():
    assert optimize_ratio(5e7, 0.0) == optimize_ratio(5e7, 0.5)
    # a small nonzero rate is not substituted
    assert optimize_ratio(5e7, 0.25) > optimize_ratio(5e7, 0.0)


def test_optimum_tie_goes_to_smaller_margin():
    best = select_optimum([_row(1.0, 10.0), _row(2.0, 30.0), _row(3.0, 30.0)])
    assert best[(Algorithm.HOA1, 3.0)].hom_db == 2.0


def test_optimum_tie_then_smaller_parameter():
    best = select_optimum([_row(2.0, 30.0, param=4.0), _row(2.0, 30.0, param=1.0)])
    assert best[(Algorithm.HOA1, 3.0)].ttt_or_factor == 1.0


def test_seed_average_is_order_independent():
    records = [_record(seed=s, ho=float(s), st=1e7 * s) for s in (1, 2, 3)]
    rows = average_over_seeds(records)
    assert rows == average_over_seeds(list(reversed(records)))
    (row,) = rows
    assert row.num_seeds == 3
    assert row.anoh == pytest.approx(2.0)
    assert row.st_bps == pytest.approx(2e7)
    assert row.optimize_ratio == pytest.approx(1e7)


def test_compare_sums_and_improvement():
    records = [
        _record(Algorithm.HOA4, speed=s, ho=0.5, st=4e7, delay=2.0, param=5.0) for s in (3.0, 30.0, 120.0)
    ] + [
        _record(Algorithm.HOA1, speed=s, ho=1.0, st=2e7, delay=4.0, param=5.0) for s in (3.0, 30.0, 120.0)
    ]
    rows = average_compare_rows(records)
    assert len(rows) == 6
    sums = sum_over_speeds(rows)
    assert [(r.algorithm, r.speed_kmh) for r in sums] == [(Algorithm.HOA1, None), (Algorithm.HOA4, None)]
    assert sums[1].ho_avg == pytest.approx(1.5)
    (gain,) = improvement(sums)
    assert gain["other"] == "HOA1"
    assert gain["ho_avg_reduction"] == pytest.approx(0.5)
    assert gain["throughput_gain"] == pytest.approx(1.0)
    assert gain["delay_reduction"] == pytest.approx(0.5)
