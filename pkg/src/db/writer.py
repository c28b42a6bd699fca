from __future__ import annotations

import sqlite3
from pathlib import Path
from typing import Any, Dict, Iterable, Union, Optional, List
import json

from dataclasses import is_dataclass
from src.db.tables import init_db

RowLike = Union[Dict[str, Any], Any]  # dict or Pydantic model


def _to_dict(obj: RowLike) -> Dict[str, Any]:
    if isinstance(obj, dict):
        return obj
    if hasattr(obj, "model_dump"):
        return obj.model_dump(mode="json")
    if is_dataclass(obj):
        from dataclasses import asdict
        return asdict(obj)
    raise TypeError(f"Unsupported row type: {type(obj)}")


def connect_sqlite(db_path: Union[str, Path]) -> sqlite3.Connection:
    Path(db_path).parent.mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(str(db_path))
    conn.row_factory = sqlite3.Row
    init_db(conn)
    return conn


# Workflow provenance
def upsert_invocation(
    conn: sqlite3.Connection,
    run_id: str,
    command: str,
    commit_hash: str,
    started_at: str,
    ended_at: Optional[str],
    duration_ms: Optional[int],
    status: str,
    config_hash: Optional[str] = None,
    cqi_table_sha256: Optional[str] = None,
    error_message: Optional[str] = None,
    error_type: Optional[str] = None,
) -> None:
    conn.execute(
        """
        INSERT INTO invocation (
          run_id, command, commit_hash,
          config_hash, cqi_table_sha256,
          started_at, ended_at, duration_ms,
          status, error_message, error_type
        )
        VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        ON CONFLICT(run_id) DO UPDATE SET
          command = excluded.command,
          commit_hash = excluded.commit_hash,
          config_hash = excluded.config_hash,
          cqi_table_sha256 = excluded.cqi_table_sha256,
          started_at = excluded.started_at,
          ended_at = excluded.ended_at,
          duration_ms = excluded.duration_ms,
          status = excluded.status,
          error_message = excluded.error_message,
          error_type = excluded.error_type
        ;
        """,
        (
            run_id, command, commit_hash,
            config_hash, cqi_table_sha256,
            started_at, ended_at, duration_ms,
            status, error_message, error_type,
        ),
    )
    conn.commit()


def upsert_step(
    conn: sqlite3.Connection,
    run_id: str,
    step_run_id: str,
    step_name: str,
    started_at: str,
    ended_at: Optional[str],
    success_count: Optional[int],
    error_count: Optional[int],
    duration_ms: Optional[int],
    status: str,
    inputs: List[str],
    outputs: List[str],
    error_message: Optional[str] = None,
    error_type: Optional[str] = None,
) -> None:
    inputs_json = json.dumps(inputs, ensure_ascii=False)
    outputs_json = json.dumps(outputs, ensure_ascii=False)

    conn.execute(
        """
        INSERT INTO invocation_step (
          step_run_id, run_id,
          step_name,
          started_at, ended_at, duration_ms,
          success_count, error_count,
          status, inputs_json, outputs_json,
          error_message, error_type
        )
        VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        ON CONFLICT(step_run_id) DO UPDATE SET
          ended_at = excluded.ended_at,
          duration_ms = excluded.duration_ms,
          success_count = excluded.success_count,
          error_count = excluded.error_count,
          status = excluded.status,
          inputs_json = excluded.inputs_json,
          outputs_json = excluded.outputs_json,
          error_message = excluded.error_message,
          error_type = excluded.error_type
        ;
        """,
        (
            step_run_id, run_id,
            step_name,
            started_at, ended_at, duration_ms,
            success_count, error_count,
            status, inputs_json, outputs_json,
            error_message, error_type,
        ),
    )
    conn.commit()


# Fine-grained provenance: one row per simulation
def upsert_simulation_run(
    conn: sqlite3.Connection,
    simulation_id: str,
    run_id: str,
    step_run_id: Optional[str],
    params: Dict[str, Any],
    started_at: str,
    finished_at: str,
    duration_ms: int,
    ok: int,
    error_type: Optional[str],
    error_message: Optional[str],
    metrics: Optional[Dict[str, Any]],
) -> None:
    m = metrics or {}
    conn.execute(
        """
        INSERT INTO simulation_run (
          simulation_id, run_id, step_run_id,
          algorithm, speed_kmh, hom_db, ttt_or_factor, seed, sim_time_ms,
          started_at, finished_at, duration_ms,
          ok, error_type, error_message,
          ho_total, ho_avg, total_throughput_bps, total_delay_ms, optimize_ratio
        )
        VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        ON CONFLICT(simulation_id) DO UPDATE SET
          finished_at = excluded.finished_at,
          duration_ms = excluded.duration_ms,
          ok = excluded.ok,
          error_type = excluded.error_type,
          error_message = excluded.error_message,
          ho_total = excluded.ho_total,
          ho_avg = excluded.ho_avg,
          total_throughput_bps = excluded.total_throughput_bps,
          total_delay_ms = excluded.total_delay_ms,
          optimize_ratio = excluded.optimize_ratio
        ;
        """,
        (
            simulation_id, run_id, step_run_id,
            params["algorithm"], params["speed_kmh"], params["hom_db"], params["ttt_or_factor"],
            params["seed"], params["sim_time_ms"],
            started_at, finished_at, duration_ms,
            ok, error_type, error_message,
            m.get("ho_total"), m.get("ho_avg"), m.get("total_throughput_bps"),
            m.get("total_delay_ms"), m.get("optimize_ratio"),
        ),
    )
    conn.commit()


def upsert_sweep_rows(conn: sqlite3.Connection, rows: Iterable[RowLike], run_id: str) -> int:
    count = 0
    for row in rows:
        d = _to_dict(row)
        conn.execute(
            """
            INSERT INTO sweep_result (
              algorithm, speed_kmh, hom_db, ttt_or_factor,
              run_id,
              st_bps, anoh, optimize_ratio, total_delay_ms, num_seeds
            )
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            ON CONFLICT(algorithm, speed_kmh, hom_db, ttt_or_factor) DO UPDATE SET
              run_id = excluded.run_id,
              st_bps = excluded.st_bps,
              anoh = excluded.anoh,
              optimize_ratio = excluded.optimize_ratio,
              total_delay_ms = excluded.total_delay_ms,
              num_seeds = excluded.num_seeds
            ;
            """,
            (
                d["algorithm"], d["speed_kmh"], d["hom_db"], d["ttt_or_factor"],
                run_id,
                d["st_bps"], d["anoh"], d["optimize_ratio"], d.get("total_delay_ms"), d.get("num_seeds", 1),
            ),
        )
        count += 1
    conn.commit()
    return count


def select_sweep_rows(conn: sqlite3.Connection) -> List[Dict[str, Any]]:
    cur = conn.execute(
        """
        SELECT algorithm, speed_kmh, hom_db, ttt_or_factor, st_bps, anoh, optimize_ratio, total_delay_ms, num_seeds
        FROM sweep_result
        ORDER BY algorithm, speed_kmh, hom_db, ttt_or_factor
        """
    )
    return [dict(r) for r in cur.fetchall()]
