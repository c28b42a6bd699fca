"""
Run event trace.

Everything the metrics depend on is stored here as it happens: deliveries
(credited bits at their transmission TTI), executed handovers and the
per-TTI serving-cell and HOL-delay samples. The trace owns its arrays, so
`replay_trace` rebuilds a ledger from the events alone without re-running
the simulation or reading the live ledger.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from src.metrics.ledger import MetricsLedger
from src.schema.results import HandoverEvent

ChannelRow = Tuple[int, int, int, float, float, float, float, float]
CHANNEL_TRACE_COLUMNS = [
    "time_ms", "ue_id", "cell_id", "pathloss_db", "shadow_db", "fading_db", "rx_dbm", "rsrp_dbm",
]


@dataclass
class RunTrace:
    num_users: int
    num_cells: int
    tti_ms: int
    serving: np.ndarray  # (T, J)
    hol_ms: np.ndarray  # (T, J)
    deliveries: List[Tuple[int, int, int]] = field(default_factory=list)  # (time_ms, ue_id, bits)
    handovers: List[HandoverEvent] = field(default_factory=list)
    ping_pong_flags: List[bool] = field(default_factory=list)
    dropped_blocks: int = 0
    channel_rows: List[ChannelRow] = field(default_factory=list)

    @classmethod
    def empty(cls, num_users: int, num_cells: int, sim_time_ms: int, tti_ms: int = 1) -> "RunTrace":
        samples = sim_time_ms // tti_ms
        return cls(
            num_users=num_users,
            num_cells=num_cells,
            tti_ms=tti_ms,
            serving=np.zeros((samples, num_users), dtype=np.int16),
            hol_ms=np.zeros((samples, num_users), dtype=np.int64),
        )

    def sample(self, time_ms: int, serving: np.ndarray, hol_ms: np.ndarray) -> None:
        idx = time_ms // self.tti_ms
        self.serving[idx] = serving
        self.hol_ms[idx] = hol_ms

    def deliver(self, time_ms: int, ue_id: int, bits: int) -> None:
        self.deliveries.append((int(time_ms), int(ue_id), int(bits)))

    def handover(self, event: HandoverEvent, ping_pong: bool) -> None:
        self.handovers.append(event)
        self.ping_pong_flags.append(ping_pong)


def replay_trace(trace: RunTrace) -> MetricsLedger:
    samples = trace.serving.shape[0]
    ledger = MetricsLedger.empty(trace.num_users, trace.num_cells, samples * trace.tti_ms, trace.tti_ms)
    for t in range(samples):
        ledger.sample(t * trace.tti_ms, trace.serving[t], trace.hol_ms[t])
    for time_ms, ue, bits in trace.deliveries:
        ledger.credit(time_ms, ue, bits)
    for event, ping_pong in zip(trace.handovers, trace.ping_pong_flags):
        ledger.record_handover(event, ping_pong=ping_pong)
    return ledger
