from __future__ import annotations

import numpy as np
import pytest

from src.handover.execution import UeState, execute_handover
from src.handover.measurement import MeasurementReport, best_candidate, build_reports, is_report_instant
from src.handover.policies import (
    AverageConstrainedState,
    FilteredWindowState,
    IntegratorState,
    TriggerState,
    decide,
    decide_hoa1,
    decide_hoa2,
    decide_hoa3,
    decide_hoa4,
    filter_rss,
    ho_trigger_ms,
    initial_state,
    integrate_dif,
    replay,
    reset_state,
    timer_running,
)
from src.link.cqi import CqiPipeline
from src.link.harq import HarqProcess
from src.link.scheduler import RoundRobinCycle
from src.schema.scenario import Algorithm, PolicySpec


def report(t: int, serving_rsrp: float, target_rsrp: float, serving: int = 0) -> MeasurementReport:
    rsrp = [0.0, 0.0]
    rsrp[serving] = serving_rsrp
    rsrp[1 - serving] = target_rsrp
    return MeasurementReport(ue_id=0, time_ms=t, rsrp_dbm=tuple(rsrp), serving_cell=serving)


# --- measurement


def test_report_instants_and_candidates():
    assert is_report_instant(0, 50) and is_report_instant(100, 50)
    assert not is_report_instant(51, 50)
    r = MeasurementReport(ue_id=1, time_ms=0, rsrp_dbm=(-80.0, -70.0, -70.0, -75.0), serving_cell=0)
    assert r.targets() == [1, 2, 3]
    assert best_candidate(r, [3, 2, 1]) == 1
    reports = build_reports(50, np.array([[-80.0, -70.0], [-60.0, -90.0]]), [1, 0])
    assert [(x.ue_id, x.serving_cell, x.serving_rsrp) for x in reports] == [(0, 1, -70.0), (1, 0, -60.0)]


# --- HOA1


def test_hard_handover_triggers_past_margin():
    st, target = decide_hoa1(report(0, -78.0, -70.0), TriggerState(hom_db=6.0, ttt_ms=0.0), 0)
    assert target == 1


def test_hard_handover_needs_strict_inequality():
    _, target = decide_hoa1(report(0, -75.0, -75.0), TriggerState(hom_db=0.0, ttt_ms=0.0), 0)
    assert target is None


def test_condition_lost_before_ttt_resets_timer():
    st = TriggerState(hom_db=2.0, ttt_ms=80.0)
    st, target = decide_hoa1(report(0, -78.0, -70.0), st, 0)
    assert target is None and ho_trigger_ms(st.condition_since, 1, 49) == 49
    st, target = decide_hoa1(report(50, -70.0, -78.0), st, 50)
    assert target is None and st.condition_since == {}
    st, target = decide_hoa1(report(100, -78.0, -70.0), st, 100)
    assert target is None and ho_trigger_ms(st.condition_since, 1, 100) == 0


def test_ttt_expires_between_reports():
    st = TriggerState(hom_db=2.0, ttt_ms=30.0)
    sample = report(0, -78.0, -70.0)
    st, target = decide_hoa1(sample, st, 29)
    assert target is None and timer_running(st)
    st, target = decide_hoa1(sample, st, 30)
    assert target == 1


# --- HOA2


def test_rss_filter_recursion():
    assert filter_rss(None, (-70.0,), 0.25) == (-70.0,)
    assert filter_rss((-80.0,), (-70.0,), 1.0) == (-70.0,)
    assert filter_rss((-80.0,), (-70.0,), 0.25) == pytest.approx((-77.5,))


def test_window_needs_condition_at_every_report():
    st = FilteredWindowState(hom_db=2.0, beta=1.0, window_tu_ms=100)
    st, target = decide_hoa2(report(0, -78.0, -70.0), st, 0)
    assert target is None
    st, target = decide_hoa2(report(50, -70.0, -78.0), st, 50)
    assert target is None
    st, target = decide_hoa2(report(100, -78.0, -70.0), st, 100)
    assert target is None


def test_window_triggers_after_three_reports():
    st = FilteredWindowState(hom_db=2.0, beta=1.0, window_tu_ms=100)
    for t in (0, 50):
        st, target = decide_hoa2(report(t, -78.0, -70.0), st, t)
        assert target is None
    st, target = decide_hoa2(report(100, -78.0, -70.0), st, 100)
    assert target == 1


# --- HOA3


def test_integrator_recursion():
    assert integrate_dif(2.0, 4.0, 1.0) == 4.0
    assert integrate_dif(2.0, 4.0, 0.5) == 3.0


def test_integrator_triggers_immediately_over_threshold():
    st = IntegratorState(fdif_threshold_db=2.0, alpha=0.5, fdif={1: 2.0})
    st, target = decide_hoa3(report(0, -74.0, -70.0), st)
    assert st.fdif[1] == pytest.approx(3.0)
    assert target == 1


def test_integrator_below_threshold_waits():
    st, target = decide_hoa3(report(0, -74.0, -70.0), IntegratorState(fdif_threshold_db=2.0, alpha=0.25))
    assert st.fdif[1] == pytest.approx(1.0)
    assert target is None


# --- HOA4


def test_average_constrained_trigger():
    st = AverageConstrainedState(hom_db=0.0, ttt_ms=0.0)
    st, target = decide_hoa4(report(0, -70.0, -90.0), st, 0)
    assert target is None
    st, target = decide_hoa4(report(50, -74.0, -71.0), st, 50)
    assert st.average_rsrp_dbm == pytest.approx(-72.0)
    assert target == 1


def test_target_below_serving_average_blocks_trigger():
    st = AverageConstrainedState(hom_db=0.0, ttt_ms=0.0)
    st, _ = decide_hoa4(report(0, -70.0, -90.0), st, 0)
    st, target = decide_hoa4(report(50, -74.0, -73.0), st, 50)
    assert target is None


def test_constant_serving_average():
    st = AverageConstrainedState(hom_db=3.0, ttt_ms=0.0)
    for t in range(0, 500, 50):
        st, _ = decide_hoa4(report(t, -81.5, -90.0), st, t)
    assert st.average_rsrp_dbm == pytest.approx(-81.5)


# --- dispatch, reset and replay


@pytest.mark.parametrize(
    "spec, state_type",
    [
        (PolicySpec(algorithm=Algorithm.HOA1, hom_db=3.0, ttt_ms=2.0), TriggerState),
        (PolicySpec(algorithm=Algorithm.HOA2, hom_db=3.0, factor=0.5), FilteredWindowState),
        (PolicySpec(algorithm=Algorithm.HOA3, hom_db=3.0, factor=0.5), IntegratorState),
        (PolicySpec(algorithm=Algorithm.HOA4, hom_db=3.0, ttt_ms=2.0), AverageConstrainedState),
    ],
)
def test_initial_state_and_reset(spec, state_type):
    st = initial_state(spec)
    assert isinstance(st, state_type)
    st, _ = decide(report(0, -90.0, -60.0), st, 0)
    assert reset_state(st) == initial_state(spec)


def test_replay_is_pure():
    reports = [report(t, -78.0 + (t % 150) / 10.0, -74.0) for t in range(0, 1000, 50)]
    spec = PolicySpec(algorithm=Algorithm.HOA1, hom_db=2.0, ttt_ms=5.0)
    first = replay(reports, initial_state(spec))
    assert first == replay(reports, initial_state(spec))
    assert first


def random_reports(seed: int, count: int = 200, cells: int = 7, serving: int = 0) -> list:
    rng = np.random.default_rng(seed)
    rsrp = -90.0 + 6.0 * rng.standard_normal((count, cells))
    return [
        MeasurementReport(ue_id=0, time_ms=50 * i, rsrp_dbm=tuple(float(v) for v in row), serving_cell=serving)
        for i, row in enumerate(rsrp)
    ]


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("beta", [0.1, 0.5, 0.9])
def test_filtered_rss_stays_within_observed_range(seed, beta):
    reports = random_reports(seed)
    st = FilteredWindowState(hom_db=3.0, beta=beta)
    low = np.full(7, np.inf)
    high = np.full(7, -np.inf)
    for r in reports:
        st, _ = decide_hoa2(r, st, r.time_ms)
        low = np.minimum(low, r.rsrp_dbm)
        high = np.maximum(high, r.rsrp_dbm)
        filtered = np.asarray(st.filtered_rss)
        assert np.all(filtered >= low - 1e-9)
        assert np.all(filtered <= high + 1e-9)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_fdif_stays_between_zero_and_observed_differences(seed, alpha):
    reports = random_reports(seed)
    st = IntegratorState(fdif_threshold_db=1e9, alpha=alpha)
    low = {c: 0.0 for c in range(1, 7)}
    high = dict(low)
    for r in reports:
        st, _ = decide_hoa3(r, st)
        for c in r.targets():
            dif = r.rsrp_dbm[c] - r.serving_rsrp
            low[c] = min(low[c], dif)
            high[c] = max(high[c], dif)
            assert low[c] - 1e-9 <= st.fdif[c] <= high[c] + 1e-9


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("hom_db, ttt_ms", [(0.0, 0.0), (2.0, 5.0), (4.0, 40.0), (3.0, 120.0)])
def test_average_constrained_triggers_only_where_hard_handover_does(seed, hom_db, ttt_ms):
    reports = random_reports(seed)
    hoa1 = replay(reports, TriggerState(hom_db=hom_db, ttt_ms=ttt_ms))
    hoa4 = replay(reports, AverageConstrainedState(hom_db=hom_db, ttt_ms=ttt_ms))
    assert set(hoa4) <= set(hoa1)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("threshold", [0.0, 3.0, 8.0])
def test_unit_factor_integrator_is_hard_handover_without_ttt(seed, threshold):
    reports = random_reports(seed)
    hoa3 = replay(reports, IntegratorState(fdif_threshold_db=threshold, alpha=1.0))
    assert hoa3 == replay(reports, TriggerState(hom_db=threshold, ttt_ms=0.0))
    first = next(
        r.time_ms for r in reports if any(r.rsrp_dbm[c] > r.serving_rsrp + threshold for c in r.targets())
    )
    assert min(hoa3) == first


# --- execution


def _attached_ue() -> tuple:
    ue = UeState(ue_id=5, serving_cell=0, policy_state=TriggerState(hom_db=3.0, ttt_ms=0.0, condition_since={1: 0}))
    for t, bits in ((0, 1000), (1, 1000), (2, 1000)):
        ue.queue.enqueue(t, bits)
    cycles = {0: RoundRobinCycle(0, [5, 6]), 1: RoundRobinCycle(1, [7])}
    return ue, cycles


def test_handover_forwards_queue_and_moves_cycle():
    ue, cycles = _attached_ue()
    event = execute_handover(ue, 0, 1, 100, cycles=cycles)
    assert ue.serving_cell == 1
    assert ue.queue.packets() == [(0, 1000), (1, 1000), (2, 1000)]
    assert event.forwarded_bits == 3000
    assert 5 not in cycles[0] and cycles[1].members == [7, 5]
    assert ue.policy_state.condition_since == {}


def test_handover_discards_harq_in_flight():
    ue, cycles = _attached_ue()
    ue.harq.append(HarqProcess(ue_id=5, payload_bits=640, cqi=5, num_rbs=2, transmissions_used=2))
    cqi = CqiPipeline(num_ues=8, delay_ms=3)
    cqi.push(97, np.full(8, 9))
    event = execute_handover(ue, 0, 1, 100, cycles=cycles, cqi=cqi)
    assert event.dropped_harq_bits == 640
    assert ue.harq == []
    assert cqi.usable(100)[5] == -1 and cqi.usable(100)[6] == 9


def test_two_handovers_and_ping_pong():
    ue, cycles = _attached_ue()
    execute_handover(ue, 0, 1, 100, cycles=cycles)
    execute_handover(ue, 1, 0, 600, cycles=cycles)
    assert ue.handovers == 2
    assert ue.ping_pongs == 1


def test_handover_preconditions():
    ue, cycles = _attached_ue()
    with pytest.raises(ValueError):
        execute_handover(ue, 0, 0, 100, cycles=cycles)
    with pytest.raises(ValueError):
        execute_handover(ue, 1, 0, 100, cycles=cycles)
