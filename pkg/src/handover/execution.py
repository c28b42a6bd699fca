"""
Serving-cell switch.

The switch is instantaneous at the decision TTI. The source eNodeB forwards
the UE's whole buffer (arrival times kept, so HOL delay carries over), any
HARQ process still in flight at the source is discarded without credit, the
UE moves to the end of the target's Round-Robin cycle and its policy state
and CQI history start over.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Tuple

import structlog

from src.handover.policies import PolicyState, reset_state
from src.link.cqi import CqiPipeline
from src.link.harq import HarqProcess
from src.link.scheduler import RoundRobinCycle
from src.link.traffic import UeQueue
from src.schema.results import HandoverEvent

logger = structlog.get_logger(__name__)


@dataclass
class UeState:
    ue_id: int
    serving_cell: int
    policy_state: PolicyState
    queue: UeQueue = field(default_factory=UeQueue)
    harq: List[HarqProcess] = field(default_factory=list)
    last_handover: Optional[Tuple[int, int]] = None  # (time_ms, source_cell)
    handovers: int = 0
    ping_pongs: int = 0
    blocked_report_ms: Optional[int] = None  # report instant of the last handover

    def in_flight_bits(self) -> int:
        return sum(p.payload_bits for p in self.harq)


def is_ping_pong(ue: UeState, target: int, now_ms: int, window_ms: int) -> bool:
    if ue.last_handover is None:
        return False
    when, previous_source = ue.last_handover
    return previous_source == target and now_ms - when <= window_ms


def execute_handover(
    ue: UeState,
    source: int,
    target: int,
    now_ms: int,
    *,
    cycles: Mapping[int, RoundRobinCycle],
    cqi: Optional[CqiPipeline] = None,
    ping_pong_window_ms: int = 1000,
) -> HandoverEvent:
    if source == target:
        raise ValueError(f"UE {ue.ue_id}: handover target equals source cell {source}")
    if ue.serving_cell != source:
        raise ValueError(f"UE {ue.ue_id}: served by cell {ue.serving_cell}, not {source}")

    dropped = ue.in_flight_bits()
    ue.harq.clear()
    cycles[source].remove(ue.ue_id)
    cycles[target].add(ue.ue_id)
    if cqi is not None:
        cqi.invalidate(ue.ue_id)

    if is_ping_pong(ue, target, now_ms, ping_pong_window_ms):
        ue.ping_pongs += 1
    ue.serving_cell = target
    ue.policy_state = reset_state(ue.policy_state)
    ue.last_handover = (now_ms, source)
    ue.handovers += 1

    event = HandoverEvent(
        ue_id=ue.ue_id,
        time_ms=now_ms,
        source_cell=source,
        target_cell=target,
        forwarded_bits=ue.queue.queued_bits,
        dropped_harq_bits=dropped,
    )
    logger.debug("handover_executed", ue=ue.ue_id, t=now_ms, source=source, target=target,
                 forwarded_bits=event.forwarded_bits, dropped_harq_bits=dropped)
    return event
