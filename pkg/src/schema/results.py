from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.schema.scenario import Algorithm

"""
Result schemas (Pydantic models).
These correspond to the rows written to CSV files and to the result tables
of the provenance database.
"""


class HandoverEvent(BaseModel):
    """
    One executed serving-cell switch. Counted in HO_Total exactly once.
    """

    model_config = ConfigDict(frozen=True)

    ue_id: int
    time_ms: int
    source_cell: int
    target_cell: int
    forwarded_bits: int = Field(0, description="Queued bits moved to the target eNodeB")
    dropped_harq_bits: int = Field(0, description="In-flight HARQ payload discarded at the source")


class RunRecord(BaseModel):
    """
    Headline metrics of one simulation (one policy, one speed, one seed).
    Column order is the results.csv layout.
    """

    model_config = ConfigDict(frozen=True)

    algorithm: Algorithm
    speed_kmh: float
    hom_db: float
    ttt_or_factor: float
    seed: int
    ho_avg: float
    total_throughput_bps: float
    total_delay_ms: float
    optimize_ratio: float


class SweepRow(BaseModel):
    """
    One grid point averaged over seeds.
    optimize_ratio = st_bps / anoh_effective, with anoh_effective = 0.5 when anoh == 0.
    """

    model_config = ConfigDict(frozen=True)

    algorithm: Algorithm
    speed_kmh: float
    hom_db: float
    ttt_or_factor: float
    st_bps: float = Field(..., description="Total system throughput, sum of cells")
    anoh: float = Field(..., description="Average number of handovers per UE per second")
    optimize_ratio: float
    total_delay_ms: Optional[float] = None
    num_seeds: int = 1


class SweepFailure(BaseModel):
    algorithm: Algorithm
    speed_kmh: float
    hom_db: float
    ttt_or_factor: float
    seed: int
    error_type: str
    error_message: str


class CompareRow(BaseModel):
    """
    One evaluation row of compare.csv. speed_kmh is None on the three-speed sum rows.
    """

    algorithm: Algorithm
    speed_kmh: Optional[float]
    hom_db: Optional[float] = None
    ttt_or_factor: Optional[float] = None
    ho_avg: float
    total_throughput_bps: float
    total_delay_ms: float


class RunSummary(BaseModel):
    """
    Content of metrics.json for a single `run` invocation.
    """

    algorithm: Algorithm
    speed_kmh: float
    hom_db: float
    ttt_or_factor: float
    seeds: List[int]
    ho_avg: float
    ho_total_per_seed: List[int]
    ping_pong_total_per_seed: List[int]
    ping_pong_rate: float
    total_throughput_bps: float
    total_delay_ms: float
    cell_throughput_bps: List[float]
    cell_delay_ms: List[float]
    optimize_ratio: float
    metadata: Dict[str, object] = Field(default_factory=dict)
