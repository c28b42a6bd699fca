"""
Desk oracles.

Small independent checks of closed-form values the simulator depends on.
Each oracle recomputes its expected value without going through the code
under test (hand-derived constants, brute-force loops or plain `math`) and
compares it with what the simulator produces.
"""

from __future__ import annotations

import math
from typing import Callable, List, NamedTuple, Tuple

import numpy as np

from src.handover.measurement import MeasurementReport
from src.handover.policies import FilteredWindowState, IntegratorState, decide_hoa2, decide_hoa3
from src.link.cqi import CqiTable, cqi_from_sinr, default_cqi_table, transport_block_bits
from src.link.harq import combined_sinr_db
from src.metrics.ledger import MetricsLedger, avg_handovers
from src.metrics.optimize import optimize_ratio
from src.radio.channel import RadioLink, rsrp, sinr_per_rb
from src.radio.fading import doppler_hz
from src.radio.layout import build_layout
from src.radio.pathloss import cost231_pathloss


class OracleResult(NamedTuple):
    name: str
    expected: float
    actual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.actual)) and abs(self.actual - self.expected) <= self.tolerance


def _hata_by_hand(d_km: float, f: float, hb: float, hm: float) -> float:
    a_hm = (1.1 * math.log10(f) - 0.7) * hm - (1.56 * math.log10(f) - 0.8)
    return 46.3 + 33.9 * math.log10(f) - 13.82 * math.log10(hb) - a_hm + (44.9 - 6.55 * math.log10(hb)) * math.log10(d_km)


def cost231_100m() -> Tuple[float, float, float]:
    return 102.52, cost231_pathloss(100.0, 2000.0, 30.0, 1.5), 0.1


def cost231_1km() -> Tuple[float, float, float]:
    return _hata_by_hand(1.0, 2000.0, 30.0, 1.5), cost231_pathloss(1000.0, 2000.0, 30.0, 1.5), 1e-9


def cost231_slope() -> Tuple[float, float, float]:
    decade = cost231_pathloss(1000.0, 2000.0, 30.0, 1.5) - cost231_pathloss(100.0, 2000.0, 30.0, 1.5)
    return 44.9 - 6.55 * math.log10(30.0), decade, 1e-9


def hex_neighbor_distance() -> Tuple[float, float, float]:
    layout = build_layout(100.0)
    distances = np.hypot(layout.centers[1:, 0], layout.centers[1:, 1])
    worst = float(np.max(np.abs(distances - 100.0 * math.sqrt(3.0))))
    return 0.0, worst, 1e-9


def hex_unit_radius() -> Tuple[float, float, float]:
    layout = build_layout(1.0)
    return math.sqrt(3.0), float(np.hypot(*layout.centers[1])), 1e-9


def rsrp_arithmetic() -> Tuple[float, float, float]:
    link = RadioLink(pathloss_db=102.5, shadow_db=0.0, fading_gain_db=np.zeros(25))
    return -73.47, rsrp(29.03, link), 1e-9


def sinr_interference_free() -> Tuple[float, float, float]:
    noise = -174.0 + 10.0 * math.log10(180_000.0) + 9.0
    link = RadioLink(pathloss_db=102.5, shadow_db=0.0, fading_gain_db=np.zeros(25))
    report = sinr_per_rb([link], 0, 29.03, noise)
    return -73.47 - noise, float(report.sinr_db[0]), 1e-9


def doppler_120kmh() -> Tuple[float, float, float]:
    return 222.2, doppler_hz(120.0 / 3.6, 2000.0), 0.05


def hoa2_filter_trace() -> Tuple[float, float, float]:
    rng = np.random.default_rng(20)
    samples = rng.uniform(-110.0, -60.0, size=(20, 3))
    beta = 0.25
    st = FilteredWindowState(hom_db=100.0, beta=beta)
    brute = list(samples[0])
    worst = 0.0
    for n, row in enumerate(samples):
        report = MeasurementReport(ue_id=0, time_ms=50 * n, rsrp_dbm=tuple(row), serving_cell=0)
        st, _ = decide_hoa2(report, st, 50 * n)
        if n > 0:
            brute = [beta * r + (1.0 - beta) * p for r, p in zip(row, brute)]
        worst = max(worst, max(abs(a - b) for a, b in zip(st.filtered_rss, brute)))
    return 0.0, worst, 1e-12


def hoa3_integrator_trace() -> Tuple[float, float, float]:
    rng = np.random.default_rng(30)
    samples = rng.uniform(-110.0, -60.0, size=(20, 3))
    alpha = 0.5
    st = IntegratorState(fdif_threshold_db=100.0, alpha=alpha)
    brute = {1: 0.0, 2: 0.0}
    worst = 0.0
    for n, row in enumerate(samples):
        report = MeasurementReport(ue_id=0, time_ms=50 * n, rsrp_dbm=tuple(row), serving_cell=0)
        st, _ = decide_hoa3(report, st)
        for c in brute:
            brute[c] = (1.0 - alpha) * brute[c] + alpha * (row[c] - row[0])
        worst = max(worst, max(abs(st.fdif[c] - brute[c]) for c in brute))
    return 0.0, worst, 1e-12


def avg_handovers_arithmetic() -> Tuple[float, float, float]:
    ledger = MetricsLedger.empty(num_users=100, num_cells=7, sim_time_ms=10_000)
    ledger.ho_total = 150
    return 0.15, avg_handovers(ledger), 0.0


def optimize_ratio_arithmetic() -> Tuple[float, float, float]:
    return 2.5e7, optimize_ratio(5e7, 2.0), 0.0


def optimize_ratio_zero_anoh() -> Tuple[float, float, float]:
    return 5e7 / 0.5, optimize_ratio(5e7, 0.0), 0.0


def chase_combining_gain() -> Tuple[float, float, float]:
    return 10.0 * math.log10(2.0), combined_sinr_db([0.0, 0.0]), 1e-12


def cqi_threshold_construction() -> Tuple[float, float, float]:
    """0 when every threshold maps to its own level with BLER in [0.05, 0.10)."""
    table: CqiTable = default_cqi_table()
    bad = 0
    for q in range(1, 16):
        thr = table.threshold_db(q)
        bler = float(table.bler(q, thr))
        if cqi_from_sinr(thr, table) != q or not 0.05 <= bler < 0.10:
            bad += 1
    return 0.0, float(bad), 0.0


def tbs_top_cqi() -> Tuple[float, float, float]:
    table = default_cqi_table()
    return math.floor(table.efficiency(15) * 120 * 25), float(transport_block_bits(15, 25, table)), 0.0


ORACLES: List[Tuple[str, Callable[[], Tuple[float, float, float]]]] = [
    ("cost231_100m_db", cost231_100m),
    ("cost231_1km_db", cost231_1km),
    ("cost231_decade_slope_db", cost231_slope),
    ("hex_neighbor_distance_error_m", hex_neighbor_distance),
    ("hex_unit_radius_neighbor_m", hex_unit_radius),
    ("rsrp_dbm", rsrp_arithmetic),
    ("sinr_interference_free_db", sinr_interference_free),
    ("doppler_120kmh_hz", doppler_120kmh),
    ("hoa2_filter_max_error", hoa2_filter_trace),
    ("hoa3_integrator_max_error", hoa3_integrator_trace),
    ("ho_avg", avg_handovers_arithmetic),
    ("optimize_ratio", optimize_ratio_arithmetic),
    ("optimize_ratio_anoh_zero", optimize_ratio_zero_anoh),
    ("chase_combining_db", chase_combining_gain),
    ("cqi_threshold_violations", cqi_threshold_construction),
    ("tbs_cqi15_25rb_bits", tbs_top_cqi),
]


def run_oracles() -> List[OracleResult]:
    results: List[OracleResult] = []
    for name, oracle in ORACLES:
        try:
            expected, actual, tolerance = oracle()
        except Exception:
            expected, actual, tolerance = 0.0, float("nan"), 0.0
        results.append(OracleResult(name, float(expected), float(actual), float(tolerance)))
    return results
