from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class MeasurementReport:
    """
    Periodic RSRP report of one UE: wideband RSRP of every cell at time_ms,
    plus the cell serving the UE when the report was taken.
    """

    ue_id: int
    time_ms: int
    rsrp_dbm: Tuple[float, ...]
    serving_cell: int

    @property
    def serving_rsrp(self) -> float:
        return self.rsrp_dbm[self.serving_cell]

    def targets(self) -> List[int]:
        return [c for c in range(len(self.rsrp_dbm)) if c != self.serving_cell]


def is_report_instant(now_ms: int, interval_ms: int) -> bool:
    return now_ms % interval_ms == 0


def build_reports(now_ms: int, rsrp_dbm: np.ndarray, serving: Sequence[int]) -> List[MeasurementReport]:
    return [
        MeasurementReport(ue_id=j, time_ms=now_ms, rsrp_dbm=tuple(float(v) for v in row), serving_cell=int(serving[j]))
        for j, row in enumerate(rsrp_dbm)
    ]


def best_candidate(report: MeasurementReport, candidates) -> int:
    """Highest RSRP wins; ties go to the lowest cell id."""
    return min(candidates, key=lambda c: (-report.rsrp_dbm[c], c))
