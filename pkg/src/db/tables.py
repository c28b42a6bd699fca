from __future__ import annotations
import sqlite3

DDL_INVOCATION = """
CREATE TABLE IF NOT EXISTS invocation (
  run_id TEXT PRIMARY KEY,
  command TEXT NOT NULL,              -- run / sweep / compare / oracle
  commit_hash TEXT NOT NULL,
  config_hash TEXT,                   -- sha256 of the canonical scenario
  cqi_table_sha256 TEXT,
  started_at TEXT NOT NULL,           -- ISO UTC timestamp
  ended_at TEXT,                      -- NULL while running
  duration_ms INTEGER,                -- NULL while running
  status TEXT NOT NULL,               -- in_progress / completed / failed
  error_message TEXT,
  error_type TEXT
);
CREATE INDEX IF NOT EXISTS idx_invocation_command ON invocation(command);
"""

DDL_INVOCATION_STEP = """
CREATE TABLE IF NOT EXISTS invocation_step (
  step_run_id TEXT PRIMARY KEY,
  run_id TEXT NOT NULL,
  step_name TEXT NOT NULL,
  started_at TEXT NOT NULL,
  ended_at TEXT,
  duration_ms INTEGER,
  success_count INTEGER,
  error_count INTEGER,
  status TEXT NOT NULL,               -- in_progress / completed / failed / partial
  inputs_json TEXT NOT NULL,          -- JSON array
  outputs_json TEXT NOT NULL,         -- JSON array
  error_message TEXT,
  error_type TEXT,
  FOREIGN KEY (run_id) REFERENCES invocation(run_id)
);
CREATE INDEX IF NOT EXISTS idx_invocation_step_run ON invocation_step(run_id);
CREATE INDEX IF NOT EXISTS idx_invocation_step_name ON invocation_step(step_name);
"""

DDL_SIMULATION_RUN = """
CREATE TABLE IF NOT EXISTS simulation_run (
  simulation_id TEXT PRIMARY KEY,
  run_id TEXT NOT NULL,
  step_run_id TEXT,

  --- Parameters
  algorithm TEXT NOT NULL,            -- HOA1..HOA4
  speed_kmh REAL NOT NULL,
  hom_db REAL NOT NULL,
  ttt_or_factor REAL NOT NULL,
  seed INTEGER NOT NULL,
  sim_time_ms INTEGER NOT NULL,

  --- Trace
  started_at TEXT NOT NULL,
  finished_at TEXT,
  duration_ms INTEGER,
  ok INTEGER NOT NULL,                -- 1/0
  error_type TEXT,
  error_message TEXT,

  --- Metrics (NULL when the simulation failed)
  ho_total INTEGER,
  ho_avg REAL,
  total_throughput_bps REAL,
  total_delay_ms REAL,
  optimize_ratio REAL,

  FOREIGN KEY (run_id) REFERENCES invocation(run_id),
  FOREIGN KEY (step_run_id) REFERENCES invocation_step(step_run_id)
);
CREATE INDEX IF NOT EXISTS idx_simulation_run_run ON simulation_run(run_id);
CREATE INDEX IF NOT EXISTS idx_simulation_run_point ON simulation_run(algorithm, speed_kmh, hom_db, ttt_or_factor);
"""

DDL_SWEEP_RESULT = """
CREATE TABLE IF NOT EXISTS sweep_result (
  algorithm TEXT NOT NULL,
  speed_kmh REAL NOT NULL,
  hom_db REAL NOT NULL,
  ttt_or_factor REAL NOT NULL,

  --- Provenance
  run_id TEXT NOT NULL,               -- invocation that produced the row

  --- Metrics (averaged over seeds)
  st_bps REAL NOT NULL,
  anoh REAL NOT NULL,
  optimize_ratio REAL NOT NULL,
  total_delay_ms REAL,
  num_seeds INTEGER NOT NULL,

  PRIMARY KEY (algorithm, speed_kmh, hom_db, ttt_or_factor),
  FOREIGN KEY (run_id) REFERENCES invocation(run_id)
);
"""


def init_db(conn: sqlite3.Connection) -> None:
    conn.execute("PRAGMA foreign_keys = ON;")
    conn.executescript(DDL_INVOCATION)
    conn.executescript(DDL_INVOCATION_STEP)
    conn.executescript(DDL_SIMULATION_RUN)
    conn.executescript(DDL_SWEEP_RESULT)
    conn.commit()
