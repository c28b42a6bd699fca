"""
Run metrics ledger.

Per TTI and per user the ledger keeps the bits credited (at the TTI of the
successful transmission), the HOL delay sample W_j(t) and the serving cell
the sample is attributed to. Every metric is a pure function of these three
arrays plus the handover count, so a ledger rebuilt from a stored trace
yields identical values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from src.schema.results import HandoverEvent


@dataclass
class MetricsLedger:
    num_users: int
    num_cells: int
    tti_ms: int
    bits: np.ndarray  # (T, J) credited bits
    hol_ms: np.ndarray  # (T, J) HOL delay samples
    serving: np.ndarray  # (T, J) serving cell at the sample instant
    ho_total: int = 0
    ping_pong_total: int = 0

    @classmethod
    def empty(cls, num_users: int, num_cells: int, sim_time_ms: int, tti_ms: int = 1) -> "MetricsLedger":
        samples = sim_time_ms // tti_ms
        return cls(
            num_users=num_users,
            num_cells=num_cells,
            tti_ms=tti_ms,
            bits=np.zeros((samples, num_users), dtype=np.int64),
            hol_ms=np.zeros((samples, num_users), dtype=np.int64),
            serving=np.zeros((samples, num_users), dtype=np.int16),
        )

    @property
    def num_samples(self) -> int:
        return int(self.bits.shape[0])

    @property
    def duration_s(self) -> float:
        return self.num_samples * self.tti_ms / 1000.0

    def credit(self, time_ms: int, ue: int, bits: int) -> None:
        self.bits[time_ms // self.tti_ms, ue] += bits

    def sample(self, time_ms: int, serving: np.ndarray, hol_ms: np.ndarray) -> None:
        idx = time_ms // self.tti_ms
        self.serving[idx] = serving
        self.hol_ms[idx] = hol_ms

    def record_handover(self, event: HandoverEvent, *, ping_pong: bool = False) -> None:
        self.ho_total += 1
        if ping_pong:
            self.ping_pong_total += 1


def avg_handovers(ledger: MetricsLedger) -> float:
    """HO_Total / (J x T), handovers per UE per second."""
    denom = ledger.num_users * ledger.duration_s
    return ledger.ho_total / denom if denom > 0 else 0.0


def ping_pong_rate(ledger: MetricsLedger) -> float:
    denom = ledger.num_users * ledger.duration_s
    return ledger.ping_pong_total / denom if denom > 0 else 0.0


def cell_throughput(ledger: MetricsLedger, cell: int) -> float:
    if ledger.duration_s <= 0:
        return 0.0
    credited = int(ledger.bits[ledger.serving == cell].sum())
    return credited / ledger.duration_s


def cell_throughputs(ledger: MetricsLedger) -> List[float]:
    return [cell_throughput(ledger, c) for c in range(ledger.num_cells)]


def total_throughput(ledger: MetricsLedger) -> float:
    return float(sum(cell_throughputs(ledger)))


def cell_delay(ledger: MetricsLedger, cell: int) -> float:
    """
    Mean over TTIs of the mean HOL delay of the cell's users at that TTI;
    a TTI where the cell serves nobody contributes 0.
    """
    if ledger.num_samples == 0:
        return 0.0
    mask = ledger.serving == cell
    sums = np.where(mask, ledger.hol_ms, 0).sum(axis=1).astype(float)
    counts = mask.sum(axis=1)
    per_tti = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    return float(per_tti.mean())


def cell_delays(ledger: MetricsLedger) -> List[float]:
    return [cell_delay(ledger, c) for c in range(ledger.num_cells)]


def total_delay(ledger: MetricsLedger) -> float:
    return float(sum(cell_delays(ledger)))


def summarize(ledger: MetricsLedger) -> Dict[str, object]:
    return {
        "ho_total": ledger.ho_total,
        "ho_avg": avg_handovers(ledger),
        "ping_pong_total": ledger.ping_pong_total,
        "ping_pong_rate": ping_pong_rate(ledger),
        "cell_throughput_bps": cell_throughputs(ledger),
        "total_throughput_bps": total_throughput(ledger),
        "cell_delay_ms": cell_delays(ledger),
        "total_delay_ms": total_delay(ledger),
    }
