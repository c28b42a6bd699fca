"""
CQI link-adaptation layer.

The 15 usable CQI levels ship as a CSV of constants (efficiency and the
logistic BLER waterfall of each level). At load time the SINR threshold of
every level is re-derived by bisection on its BLER curve, checked against
the nominal value in the file and frozen into the table. Level 0 means
"out of range, no transmission".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
import structlog

from src.utils import sha256_file

logger = structlog.get_logger(__name__)

DEFAULT_CQI_TABLE = Path(__file__).resolve().parents[1] / "configs" / "cqi_table.csv"
CQI_COLUMNS = ["cqi", "sinr_threshold_db", "efficiency_bits_per_re", "bler_slope", "bler_offset"]
NUM_LEVELS = 15
THRESHOLD_TOLERANCE_DB = 0.01


class CqiTableError(ValueError):
    pass


def logistic_bler(sinr_db, slope, offset):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(np.multiply(slope, np.subtract(sinr_db, offset))))


def bisect_threshold(slope: float, offset: float, target: float, lo: float = -60.0, hi: float = 80.0) -> float:
    """Lowest SINR (to float resolution) whose BLER is strictly below target."""
    if logistic_bler(hi, slope, offset) >= target or logistic_bler(lo, slope, offset) < target:
        raise CqiTableError(f"BLER curve (slope={slope}, offset={offset}) never crosses {target} in [{lo}, {hi}] dB")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if logistic_bler(mid, slope, offset) < target:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class CqiTable:
    """Arrays are indexed by cqi - 1."""

    thresholds_db: np.ndarray
    efficiencies: np.ndarray
    slopes: np.ndarray
    offsets: np.ndarray
    bler_target: float = 0.10
    sha256: str = ""

    def efficiency(self, cqi: int) -> float:
        return 0.0 if cqi <= 0 else float(self.efficiencies[cqi - 1])

    def threshold_db(self, cqi: int) -> float:
        return float(self.thresholds_db[cqi - 1])

    def bler(self, cqi: int, sinr_db):
        if not 1 <= cqi <= NUM_LEVELS:
            raise ValueError(f"cqi must be in 1..{NUM_LEVELS}, got {cqi}")
        return logistic_bler(sinr_db, self.slopes[cqi - 1], self.offsets[cqi - 1])

    @classmethod
    def from_frame(cls, df: pd.DataFrame, *, bler_target: float = 0.10, sha256: str = "") -> "CqiTable":
        missing = [c for c in CQI_COLUMNS if c not in df.columns]
        if missing:
            raise CqiTableError(f"CQI table is missing columns: {missing}")
        df = df.sort_values("cqi").reset_index(drop=True)
        if df["cqi"].tolist() != list(range(1, NUM_LEVELS + 1)):
            raise CqiTableError("CQI table must list levels 1..15 exactly once")
        efficiencies = df["efficiency_bits_per_re"].to_numpy(dtype=float)
        slopes = df["bler_slope"].to_numpy(dtype=float)
        offsets = df["bler_offset"].to_numpy(dtype=float)
        nominal = df["sinr_threshold_db"].to_numpy(dtype=float)
        if np.any(slopes <= 0):
            raise CqiTableError("bler_slope must be strictly positive")
        if np.any(np.diff(efficiencies) <= 0):
            raise CqiTableError("efficiencies must be strictly increasing")

        thresholds = np.array([bisect_threshold(s, o, bler_target) for s, o in zip(slopes, offsets)])
        deviation = np.abs(thresholds - nominal)
        if np.any(deviation > THRESHOLD_TOLERANCE_DB):
            worst = int(np.argmax(deviation)) + 1
            raise CqiTableError(
                f"CQI {worst}: nominal threshold {nominal[worst - 1]} dB disagrees with its BLER curve "
                f"({thresholds[worst - 1]:.4f} dB)"
            )
        if np.any(np.diff(thresholds) <= 0):
            raise CqiTableError("thresholds must be strictly increasing")
        return cls(
            thresholds_db=thresholds,
            efficiencies=efficiencies,
            slopes=slopes,
            offsets=offsets,
            bler_target=bler_target,
            sha256=sha256,
        )


def load_cqi_table(path: Optional[Union[str, Path]] = None, *, bler_target: float = 0.10) -> CqiTable:
    path = Path(path) if path else DEFAULT_CQI_TABLE
    try:
        df = pd.read_csv(path, comment="#")
    except FileNotFoundError:
        raise CqiTableError(f"CQI table not found: {path}") from None
    table = CqiTable.from_frame(df, bler_target=bler_target, sha256=sha256_file(path))
    logger.debug("cqi_table_loaded", path=str(path), sha256=table.sha256)
    return table


@lru_cache(maxsize=None)
def default_cqi_table() -> CqiTable:
    return load_cqi_table()


def bler_model(cqi: int, sinr_db, table: Optional[CqiTable] = None):
    return (table or default_cqi_table()).bler(cqi, sinr_db)


def cqi_from_sinr(sinr_db, table: Optional[CqiTable] = None):
    """
    Highest level whose BLER at sinr_db is below the target; 0 if none.
    Accepts a scalar or an array of SINRs.
    """
    table = table or default_cqi_table()
    sinr = np.atleast_1d(np.asarray(sinr_db, dtype=float))
    bler = logistic_bler(sinr[:, None], table.slopes[None, :], table.offsets[None, :])
    ok = bler < table.bler_target
    cqi = np.where(ok.any(axis=1), NUM_LEVELS - np.argmax(ok[:, ::-1], axis=1), 0)
    if np.ndim(sinr_db) == 0:
        return int(cqi[0])
    return cqi.astype(int)


def transport_block_bits(
    cqi: int, num_rbs: int, table: Optional[CqiTable] = None, data_res_per_rb: int = 120
) -> int:
    if cqi <= 0 or num_rbs <= 0:
        return 0
    efficiency = (table or default_cqi_table()).efficiency(cqi)
    # the epsilon absorbs binary rounding of products such as 2.0 * 120 * 25
    return int(math.floor(efficiency * data_res_per_rb * num_rbs + 1e-9))


class CqiPipeline:
    """
    CQI reporting delay for all UEs of a run. The CQI usable at TTI t is the
    one measured at t - delay_ms; before that (and after invalidate) a UE has
    no usable CQI, reported as -1.
    """

    def __init__(self, num_ues: int, delay_ms: int):
        self.delay_ms = int(delay_ms)
        self._buffer = np.full((self.delay_ms + 1, num_ues), -1, dtype=int)
        self._stamp = np.full((self.delay_ms + 1, num_ues), -1, dtype=int)

    def push(self, now_ms: int, cqi: np.ndarray) -> None:
        slot = now_ms % (self.delay_ms + 1)
        self._buffer[slot] = cqi
        self._stamp[slot] = now_ms

    def usable(self, now_ms: int) -> np.ndarray:
        measured_at = now_ms - self.delay_ms
        slot = measured_at % (self.delay_ms + 1)
        valid = self._stamp[slot] == measured_at
        return np.where(valid, self._buffer[slot], -1)

    def invalidate(self, ue: int) -> None:
        self._buffer[:, ue] = -1
        self._stamp[:, ue] = -1
