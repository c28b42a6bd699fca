"""
Handover decision policies.

Each policy is a pure function (report, state, now) -> (state, target).
Filters, averages and trigger conditions are updated once per measurement
report; when called again between reports with the same report, a policy
only re-reads its timers against `now_ms`. Timers are stored as the time
the condition started holding for each candidate target, so HOTrigger for
a target is `now_ms - since` and any report where the condition fails
removes that target.

- HOA1: RSRP_T > RSRP_S + HOM held for TTT.
- HOA2: recursively filtered RSS, RSS_F(T) >= RSS_F(S) + HOM held for the
  whole T_u window.
- HOA3: integrator FDIF = (1 - alpha) FDIF + alpha (RSRP_T - RSRP_S),
  immediate trigger when FDIF > FDIFThreshold.
- HOA4: HOA1 gated by RSRP_T > the serving cell's average RSRP since the
  last handover (dB-domain mean).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

from src.handover.measurement import MeasurementReport, best_candidate
from src.schema.scenario import Algorithm, PolicySpec


@dataclass(frozen=True)
class TriggerState:
    hom_db: float
    ttt_ms: float
    condition_since: Dict[int, int] = field(default_factory=dict)
    last_report_ms: Optional[int] = None

    algorithm = Algorithm.HOA1


@dataclass(frozen=True)
class FilteredWindowState:
    hom_db: float
    beta: float
    window_tu_ms: int = 100
    filtered_rss: Optional[Tuple[float, ...]] = None
    window_start: Dict[int, int] = field(default_factory=dict)
    last_report_ms: Optional[int] = None

    algorithm = Algorithm.HOA2


@dataclass(frozen=True)
class IntegratorState:
    fdif_threshold_db: float
    alpha: float
    fdif: Dict[int, float] = field(default_factory=dict)
    last_report_ms: Optional[int] = None

    algorithm = Algorithm.HOA3


@dataclass(frozen=True)
class AverageConstrainedState:
    hom_db: float
    ttt_ms: float
    rsrp_sum_db: float = 0.0
    sample_count: int = 0
    condition_since: Dict[int, int] = field(default_factory=dict)
    last_report_ms: Optional[int] = None

    algorithm = Algorithm.HOA4

    @property
    def average_rsrp_dbm(self) -> Optional[float]:
        return self.rsrp_sum_db / self.sample_count if self.sample_count else None


PolicyState = Union[TriggerState, FilteredWindowState, IntegratorState, AverageConstrainedState]
Decision = Tuple[PolicyState, Optional[int]]


def _track(since: Dict[int, int], holds: Dict[int, bool], now_ms: int) -> Dict[int, int]:
    return {c: since.get(c, now_ms) for c, ok in holds.items() if ok}


def _ready(report: MeasurementReport, since: Dict[int, int], hold_ms: float, now_ms: int) -> Optional[int]:
    ready = [c for c, start in since.items() if now_ms - start >= hold_ms]
    return best_candidate(report, ready) if ready else None


def ho_trigger_ms(since: Dict[int, int], target: int, now_ms: int) -> int:
    """Elapsed HOTrigger time for `target`; 0 if its condition is not holding."""
    return now_ms - since[target] if target in since else 0


def filter_rss(previous: Optional[Sequence[float]], rss: Sequence[float], beta: float) -> Tuple[float, ...]:
    if previous is None:
        return tuple(float(v) for v in rss)
    return tuple(beta * r + (1.0 - beta) * p for r, p in zip(rss, previous))


def integrate_dif(previous: float, dif: float, alpha: float) -> float:
    return (1.0 - alpha) * previous + alpha * dif


def decide_hoa1(report: MeasurementReport, st: TriggerState, now_ms: int) -> Decision:
    if report.time_ms != st.last_report_ms:
        serving = report.serving_rsrp
        holds = {c: report.rsrp_dbm[c] > serving + st.hom_db for c in report.targets()}
        st = replace(st, condition_since=_track(st.condition_since, holds, report.time_ms), last_report_ms=report.time_ms)
    return st, _ready(report, st.condition_since, st.ttt_ms, now_ms)


def decide_hoa2(report: MeasurementReport, st: FilteredWindowState, now_ms: int) -> Decision:
    """
    The filtered condition must hold at every report spanning the whole T_u
    window, both endpoints included: with T_m = 50 ms and T_u = 100 ms that
    is three consecutive reports (t, t + 50, t + 100), and the trigger fires
    at the third. A report where the condition fails restarts the window.
    """
    if report.time_ms != st.last_report_ms:
        filtered = filter_rss(st.filtered_rss, report.rsrp_dbm, st.beta)
        serving = filtered[report.serving_cell]
        holds = {c: filtered[c] >= serving + st.hom_db for c in report.targets()}
        st = replace(
            st,
            filtered_rss=filtered,
            window_start=_track(st.window_start, holds, report.time_ms),
            last_report_ms=report.time_ms,
        )
    return st, _ready(report, st.window_start, st.window_tu_ms, now_ms)


def decide_hoa3(report: MeasurementReport, st: IntegratorState) -> Decision:
    if report.time_ms != st.last_report_ms:
        serving = report.serving_rsrp
        fdif = {
            c: integrate_dif(st.fdif.get(c, 0.0), report.rsrp_dbm[c] - serving, st.alpha) for c in report.targets()
        }
        st = replace(st, fdif=fdif, last_report_ms=report.time_ms)
    over = [c for c, value in st.fdif.items() if value > st.fdif_threshold_db]
    return st, (best_candidate(report, over) if over else None)


def decide_hoa4(report: MeasurementReport, st: AverageConstrainedState, now_ms: int) -> Decision:
    if report.time_ms != st.last_report_ms:
        serving = report.serving_rsrp
        st = replace(st, rsrp_sum_db=st.rsrp_sum_db + serving, sample_count=st.sample_count + 1)
        average = st.average_rsrp_dbm
        holds = {
            c: report.rsrp_dbm[c] > average and report.rsrp_dbm[c] > serving + st.hom_db for c in report.targets()
        }
        st = replace(st, condition_since=_track(st.condition_since, holds, report.time_ms), last_report_ms=report.time_ms)
    return st, _ready(report, st.condition_since, st.ttt_ms, now_ms)


def initial_state(spec: PolicySpec, *, window_tu_ms: int = 100) -> PolicyState:
    if spec.algorithm == Algorithm.HOA1:
        return TriggerState(hom_db=spec.hom_db, ttt_ms=spec.param)
    if spec.algorithm == Algorithm.HOA2:
        return FilteredWindowState(hom_db=spec.hom_db, beta=spec.param, window_tu_ms=window_tu_ms)
    if spec.algorithm == Algorithm.HOA3:
        return IntegratorState(fdif_threshold_db=spec.hom_db, alpha=spec.param)
    return AverageConstrainedState(hom_db=spec.hom_db, ttt_ms=spec.param)


def reset_state(st: PolicyState) -> PolicyState:
    """Clear every filter, timer and average; parameters are kept."""
    if isinstance(st, TriggerState):
        return TriggerState(hom_db=st.hom_db, ttt_ms=st.ttt_ms)
    if isinstance(st, FilteredWindowState):
        return FilteredWindowState(hom_db=st.hom_db, beta=st.beta, window_tu_ms=st.window_tu_ms)
    if isinstance(st, IntegratorState):
        return IntegratorState(fdif_threshold_db=st.fdif_threshold_db, alpha=st.alpha)
    return AverageConstrainedState(hom_db=st.hom_db, ttt_ms=st.ttt_ms)


def decide(report: MeasurementReport, st: PolicyState, now_ms: int) -> Decision:
    if isinstance(st, TriggerState):
        return decide_hoa1(report, st, now_ms)
    if isinstance(st, FilteredWindowState):
        return decide_hoa2(report, st, now_ms)
    if isinstance(st, IntegratorState):
        return decide_hoa3(report, st)
    if isinstance(st, AverageConstrainedState):
        return decide_hoa4(report, st, now_ms)
    raise TypeError(f"unknown policy state {type(st).__name__}")


def timer_running(st: PolicyState) -> bool:
    """True when a decision could change between reports (a TTT timer is counting)."""
    if isinstance(st, (TriggerState, AverageConstrainedState)):
        return bool(st.condition_since)
    return False


def replay(
    reports: Iterable[MeasurementReport], st: PolicyState, *, tick_ms: int = 1, interval_ms: int = 50
) -> Dict[int, int]:
    """
    Run a policy over a fixed report sequence without executing handovers,
    ticking timers every `tick_ms` between reports. Returns {report_time: target}
    for every report interval in which the policy emitted a trigger.
    """
    triggers: Dict[int, int] = {}
    for report in reports:
        for now in range(report.time_ms, report.time_ms + interval_ms, tick_ms):
            st, target = decide(report, st, now)
            if target is not None:
                triggers[report.time_ms] = target
                break
    return triggers
