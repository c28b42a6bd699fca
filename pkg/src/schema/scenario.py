from __future__ import annotations

import math
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

"""
Scenario and sweep-grid schemas (Pydantic models).
Both are immutable after validation so they can be shared read-only by any
number of sweep workers.
"""


class Algorithm(str, Enum):
    HOA1 = "HOA1"  # hard handover, HOM + TTT
    HOA2 = "HOA2"  # RSS-filtered TTT window
    HOA3 = "HOA3"  # integrator
    HOA4 = "HOA4"  # hard handover with average RSRP constraint

    @classmethod
    def parse(cls, token: str) -> "Algorithm":
        try:
            return cls(token.strip().upper())
        except ValueError:
            raise ValueError(f"unknown algorithm '{token}' (expected one of HOA1..HOA4)") from None

    @property
    def uses_ttt(self) -> bool:
        return self in (Algorithm.HOA1, Algorithm.HOA4)


class ScenarioConfig(BaseModel):
    """
    Full simulation scenario. Field names are the keys of the scenario file.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Layout
    num_cells: int = Field(7, description="Number of hexagonal cells")
    cell_radius_m: float = Field(100.0, description="Center-to-vertex hexagon radius")
    bounding_rect_m: Tuple[float, float] = Field(
        (300.0, 300.0), description="Half-extents (x, y) of the reflecting rectangle"
    )

    # Carrier and resource grid
    carrier_freq_mhz: float = Field(2000.0, description="Carrier frequency")
    bandwidth_mhz: float = Field(5.0, description="System bandwidth")
    num_rbs: int = Field(25, description="Resource blocks per TTI")
    subcarriers_per_rb: int = 12
    subcarrier_spacing_khz: float = 15.0
    enodeb_total_tx_dbm: float = Field(43.01, description="Total eNodeB transmit power")

    # Users and mobility
    num_users: int = 100
    ue_speed_kmh: float = Field(3.0, description="Constant UE speed")

    # Timing
    tti_ms: int = 1
    measurement_interval_ms: int = Field(50, description="T_m, RSRP report period")
    sim_time_ms: int = Field(10000, description="Evaluation horizon; 0 gives an empty run")
    sweep_time_ms: int = Field(1000, description="Horizon used by parameter sweeps")
    window_tu_ms: int = Field(100, description="T_u, HOA2 decision window")
    rsrp_window_ms: int = Field(
        50, description="Averaging window of the reported RSRP, ending at the report; 1 reports the instantaneous value"
    )

    # Traffic and link layer
    traffic_rate_bps: float = 1_000_000.0
    packet_size_bits: int = 1000
    cqi_delay_ms: int = 3
    harq_ack_delay_ms: int = 4
    max_retransmissions: int = 3
    bler_target: float = 0.10
    data_res_per_rb: int = Field(120, description="Data resource elements per RB per TTI")
    cqi_table_path: str = Field("", description="CQI/BLER constants CSV; empty uses the shipped table")

    # Propagation
    shadow_std_db: float = 8.0
    shadow_decorrelation_m: float = Field(20.0, description="0 gives i.i.d. redraws every T_m")
    bs_height_m: float = 30.0
    ue_height_m: float = 1.5
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    sinr_floor_db: float = -30.0
    sinr_ceiling_db: float = 40.0
    fading_sinusoids: int = Field(16, description="Sinusoids per link in the fading process")

    # Bookkeeping
    ping_pong_window_ms: int = 1000
    seed: int = Field(1, description="Master seed (unsigned 64-bit)")

    @field_validator("bounding_rect_m", mode="before")
    @classmethod
    def _parse_rect(cls, v):
        if isinstance(v, str):
            parts = [p for p in v.replace("×", ",").replace("x", ",").split(",") if p.strip()]
            if len(parts) != 2:
                raise ValueError("bounding_rect_m needs two half-extents 'x, y'")
            return tuple(float(p) for p in parts)
        return v

    @model_validator(mode="after")
    def _check_invariants(self) -> "ScenarioConfig":
        positive = [
            "num_cells", "cell_radius_m", "carrier_freq_mhz", "bandwidth_mhz", "num_rbs",
            "subcarriers_per_rb", "subcarrier_spacing_khz", "enodeb_total_tx_dbm", "num_users",
            "ue_speed_kmh", "tti_ms", "measurement_interval_ms", "sweep_time_ms", "window_tu_ms", "rsrp_window_ms",
            "traffic_rate_bps", "packet_size_bits", "cqi_delay_ms", "harq_ack_delay_ms",
            "max_retransmissions", "data_res_per_rb", "shadow_std_db", "bs_height_m",
            "ue_height_m", "fading_sinusoids", "ping_pong_window_ms",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.num_cells > 7:
            raise ValueError("num_cells <= 7 (single hexagonal ring)")
        if self.sim_time_ms < 0:
            raise ValueError("sim_time_ms must be non-negative")
        if self.shadow_decorrelation_m < 0:
            raise ValueError("shadow_decorrelation_m must be non-negative")
        if not 0.0 < self.bler_target < 1.0:
            raise ValueError("bler_target in (0,1)")
        if self.measurement_interval_ms % self.tti_ms != 0:
            raise ValueError("measurement_interval_ms is an integer multiple of tti_ms")
        if self.window_tu_ms % self.measurement_interval_ms != 0:
            raise ValueError("window_tu_ms is an integer multiple of measurement_interval_ms")
        if self.rsrp_window_ms % self.tti_ms != 0:
            raise ValueError("rsrp_window_ms is an integer multiple of tti_ms")
        occupied_khz = self.num_rbs * self.subcarriers_per_rb * self.subcarrier_spacing_khz
        if occupied_khz > self.bandwidth_mhz * 1000.0:
            raise ValueError("num_rbs x subcarriers_per_rb x subcarrier_spacing_khz <= bandwidth_mhz x 1000")
        if min(self.bounding_rect_m) <= 0:
            raise ValueError("bounding_rect_m half-extents must be strictly positive")
        if self.sinr_floor_db >= self.sinr_ceiling_db:
            raise ValueError("sinr_floor_db < sinr_ceiling_db")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed is an unsigned 64-bit integer")
        return self

    # Derived quantities (never configured independently)
    @property
    def tx_per_rb_dbm(self) -> float:
        return self.enodeb_total_tx_dbm - 10.0 * math.log10(self.num_rbs)

    @property
    def rb_bandwidth_hz(self) -> float:
        return self.subcarriers_per_rb * self.subcarrier_spacing_khz * 1000.0

    @property
    def noise_per_rb_dbm(self) -> float:
        return self.noise_density_dbm_hz + 10.0 * math.log10(self.rb_bandwidth_hz) + self.noise_figure_db

    @property
    def ue_speed_mps(self) -> float:
        return self.ue_speed_kmh / 3.6

    @property
    def bits_per_tti(self) -> float:
        return self.traffic_rate_bps * self.tti_ms / 1000.0


class SweepGrid(BaseModel):
    """
    Optimization grid. TTT values are milliseconds; HOA2/HOA3 pair HOM with
    the alpha/beta factors instead.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    algorithms: List[Algorithm] = Field(default_factory=lambda: list(Algorithm))
    hom_db_values: List[float] = Field(default_factory=lambda: [float(h) for h in range(11)])
    ttt_values: List[float] = Field(default_factory=lambda: [float(t) for t in range(6)])
    alpha_beta_values: List[float] = Field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    speeds_kmh: List[float] = Field(default_factory=lambda: [3.0, 30.0, 120.0])

    @field_validator("algorithms", mode="before")
    @classmethod
    def _parse_algorithms(cls, v):
        return [Algorithm.parse(a) if isinstance(a, str) else a for a in v]

    @model_validator(mode="after")
    def _check_invariants(self) -> "SweepGrid":
        if any(not 0.0 < f <= 1.0 for f in self.alpha_beta_values):
            raise ValueError("alpha_beta values in (0, 1]")
        if any(h < 0 for h in self.hom_db_values):
            raise ValueError("hom values >= 0")
        if any(t < 0 for t in self.ttt_values):
            raise ValueError("ttt values >= 0")
        if any(s <= 0 for s in self.speeds_kmh):
            raise ValueError("speeds_kmh > 0")
        return self


class GridPoint(NamedTuple):
    algorithm: Algorithm
    speed_kmh: float
    hom_db: float
    param: float  # TTT in ms for HOA1/HOA4, beta for HOA2, alpha for HOA3


class PolicySpec(BaseModel):
    """
    Algorithm identifier plus its parameter pair.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    algorithm: Algorithm
    hom_db: float = Field(..., ge=0.0, description="HOM, or FDIFThreshold for HOA3")
    ttt_ms: Optional[float] = Field(None, ge=0.0, description="HOA1/HOA4 time-to-trigger")
    factor: Optional[float] = Field(None, description="beta for HOA2, alpha for HOA3")

    @model_validator(mode="after")
    def _check_pair(self) -> "PolicySpec":
        if self.algorithm.uses_ttt:
            if self.ttt_ms is None:
                raise ValueError(f"{self.algorithm.value} needs a TTT value")
        else:
            if self.factor is None:
                raise ValueError(f"{self.algorithm.value} needs an alpha/beta factor")
            if not 0.0 < self.factor <= 1.0:
                raise ValueError("alpha_beta values in (0, 1]")
        return self

    @property
    def param(self) -> float:
        return float(self.ttt_ms if self.algorithm.uses_ttt else self.factor)

    @classmethod
    def from_point(cls, point: GridPoint) -> "PolicySpec":
        if point.algorithm.uses_ttt:
            return cls(algorithm=point.algorithm, hom_db=point.hom_db, ttt_ms=point.param)
        return cls(algorithm=point.algorithm, hom_db=point.hom_db, factor=point.param)
