"""
Result file writers.

Every file is written to a temporary sibling and renamed into place, so an
output is either complete or absent. Tabular outputs go through pandas.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import pandas as pd
import structlog

from src.config.loader import config_hash
from src.link.cqi import CqiTable
from src.metrics.optimize import ANOH_ZERO_SUBSTITUTE
from src.schema.results import CompareRow, RunRecord, SweepRow
from src.schema.scenario import ScenarioConfig
from src.utils import atomic_path

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]

RESULT_COLUMNS = list(RunRecord.model_fields)
SWEEP_COLUMNS = list(SweepRow.model_fields)
COMPARE_COLUMNS = list(CompareRow.model_fields)
HO_EVENT_COLUMNS = ["time_ms", "ue_id", "source", "target", "algorithm", "hom", "ttt_or_alpha_beta"]
DAT_COLUMNS = ["hom", "ttt_or_factor", "optimize_ratio"]
IMPROVEMENT_COLUMNS = ["reference", "other", "ho_avg_reduction", "throughput_gain", "delay_reduction"]


def design_flags(config: ScenarioConfig) -> Dict[str, Any]:
    """Modelling assumptions in effect for `config`, echoed into metadata.json."""
    c = config
    return {
        "mobility_boundary": "specular_reflection",
        "pathloss_model": "cost231_hata_urban_medium_city_min_distance_1m",
        "shadowing": {
            "std_db": c.shadow_std_db,
            "redraw": "every_measurement_interval",
            "correlation": "ar1" if c.shadow_decorrelation_m > 0 else "iid",
            "decorrelation_m": c.shadow_decorrelation_m,
        },
        "fading": {"model": "flat_rayleigh_sum_of_sinusoids", "sinusoids": c.fading_sinusoids},
        "rsrp": {
            "domain": "wideband_linear_mean_over_rbs",
            "averaging": "instantaneous" if c.rsrp_window_ms <= c.tti_ms else "linear_mean_over_window",
            "window_ms": c.rsrp_window_ms,
        },
        "interference": "full_load_all_cells_all_rbs",
        "noise": {
            "density_dbm_hz": c.noise_density_dbm_hz,
            "rb_bandwidth_hz": c.rb_bandwidth_hz,
            "noise_figure_db": c.noise_figure_db,
            "per_rb_dbm": c.noise_per_rb_dbm,
        },
        "sinr_clamp_db": [c.sinr_floor_db, c.sinr_ceiling_db],
        "tbs_rule": f"floor(efficiency x {c.data_res_per_rb} x rbs)",
        "harq": {
            "processes": "one_per_transport_block",
            "combining": "chase_linear_sum_of_flat_per_attempt_sinr",
            "max_transmissions": 1 + c.max_retransmissions,
            "ack_delay_ms": c.harq_ack_delay_ms,
        },
        "cqi_delay_ms": c.cqi_delay_ms,
        "scheduler": "round_robin_one_rb_per_pass_persistent_pointer",
        "traffic": {"model": "constant_bit_rate", "rate_bps": c.traffic_rate_bps, "packet_bits": c.packet_size_bits},
        "hoa2_filter": "recursive_on_filtered_value",
        "hoa2_window": f"condition_held_at_every_report_spanning_{c.window_tu_ms}ms",
        "ttt_units": "milliseconds_accumulated_per_tti_between_reports",
        "hoa4_average_domain": "db_mean_since_last_handover",
        "candidate_order": "highest_rsrp_then_lowest_cell_id",
        "handover_interruption": "instantaneous_switch_with_forwarding_and_harq_discard",
        "cqi_after_handover": "restart_pipeline_at_target",
        "warm_up": "none",
        "initial_serving_cell": "strongest_rsrp_pathloss_plus_shadowing",
        "throughput_credit": "transmission_tti_of_acked_block",
        "hol_delay_empty_queue": 0,
        "ping_pong_window_ms": c.ping_pong_window_ms,
        "anoh_zero_substitute": ANOH_ZERO_SUBSTITUTE,
    }


def _frame(rows: Iterable[Any], columns: Sequence[str]) -> pd.DataFrame:
    records = [r.model_dump(mode="json") if hasattr(r, "model_dump") else dict(r) for r in rows]
    return pd.DataFrame.from_records(records, columns=list(columns))


def write_frame(df: pd.DataFrame, path: PathLike, *, sep: str = ",", header: bool = True) -> Path:
    path = Path(path)
    with atomic_path(path) as tmp:
        df.to_csv(tmp, index=False, sep=sep, header=header)
    logger.info("output_written", path=str(path), rows=len(df))
    return path


def write_json(payload: Any, path: PathLike) -> Path:
    path = Path(path)
    with atomic_path(path) as tmp:
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("output_written", path=str(path))
    return path


def write_results_csv(records: Iterable[RunRecord], path: PathLike) -> Path:
    return write_frame(_frame(records, RESULT_COLUMNS), path)


def write_sweep_csv(rows: Iterable[SweepRow], path: PathLike) -> Path:
    return write_frame(_frame(rows, SWEEP_COLUMNS), path)


def write_compare_csv(rows: Iterable[CompareRow], path: PathLike) -> Path:
    return write_frame(_frame(rows, COMPARE_COLUMNS), path)


def write_plot_data(rows: Iterable[SweepRow], out_dir: PathLike) -> List[Path]:
    """
    One whitespace-separated data file per (algorithm, speed) with columns
    hom, ttt_or_factor, optimize_ratio, ready for gnuplot bar charts.
    """
    df = _frame(rows, SWEEP_COLUMNS)
    written: List[Path] = []
    if df.empty:
        return written
    for (algorithm, speed), group in df.groupby(["algorithm", "speed_kmh"], sort=True):
        data = group.rename(columns={"hom_db": "hom"})[DAT_COLUMNS].sort_values(["hom", "ttt_or_factor"])
        name = f"optimize_ratio_{str(algorithm).lower()}_{speed:g}kmh.dat"
        written.append(write_frame(data, Path(out_dir) / name, sep=" "))
    return written


def write_ho_events(events: Iterable[Dict[str, Any]], path: PathLike) -> Path:
    return write_frame(pd.DataFrame.from_records(list(events), columns=HO_EVENT_COLUMNS), path)


def write_channel_trace(rows: Sequence[tuple], columns: Sequence[str], path: PathLike) -> Path:
    return write_frame(pd.DataFrame.from_records(list(rows), columns=list(columns)), path)


def optima_payload(optima: Dict[tuple, SweepRow]) -> List[Dict[str, Any]]:
    return [
        {
            "algorithm": row.algorithm.value,
            "speed_kmh": row.speed_kmh,
            "hom_db": row.hom_db,
            "ttt_or_factor": row.ttt_or_factor,
            "optimize_ratio": row.optimize_ratio,
        }
        for row in optima.values()
    ]


def metadata(
    config: ScenarioConfig,
    table: CqiTable,
    seeds: Sequence[int],
    *,
    command: str,
    commit_hash: str,
    extra: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "command": command,
        "commit_hash": commit_hash,
        "config_hash": config_hash(config),
        "cqi_table_sha256": table.sha256,
        "seeds": list(seeds),
        "scenario": config.model_dump(mode="json"),
        "design_decisions": design_flags(config),
    }
    if extra:
        payload.update(extra)
    return payload


def write_improvement_csv(gains: Iterable[Dict[str, Any]], path: PathLike) -> Path:
    return write_frame(pd.DataFrame.from_records(list(gains), columns=IMPROVEMENT_COLUMNS), path)
