from typing import List, Any, Optional
from datetime import datetime, timezone
import uuid
from dataclasses import dataclass, field

from src.db.writer import upsert_invocation, upsert_step


@dataclass
class RunContext:
    """One CLI invocation (run / sweep / compare / oracle)."""

    command: str
    commit_hash: str
    conn: Any
    config_hash: Optional[str] = None
    cqi_table_sha256: Optional[str] = None
    started_at: datetime = field(init=False)

    run_id: str = field(default_factory=lambda: str(uuid.uuid4()))

    def _write(self, ended_at, duration_ms, status, error_message=None, error_type=None):
        upsert_invocation(
            conn=self.conn,
            run_id=self.run_id,
            command=self.command,
            commit_hash=self.commit_hash,
            config_hash=self.config_hash,
            cqi_table_sha256=self.cqi_table_sha256,
            started_at=self.started_at.isoformat(),
            ended_at=ended_at,
            duration_ms=duration_ms,
            status=status,
            error_message=error_message,
            error_type=error_type,
        )

    def __enter__(self):
        self.started_at = datetime.now(timezone.utc)
        self._write(ended_at=None, duration_ms=None, status="in_progress")
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        ended_at = datetime.now(timezone.utc)
        duration_ms = int((ended_at - self.started_at).total_seconds() * 1000)
        self._write(
            ended_at=ended_at.isoformat(),
            duration_ms=duration_ms,
            status="completed" if exc_type is None else "failed",
            error_message=str(exc_value)[:1000] if exc_value else None,
            error_type=exc_type.__name__ if exc_type else None,
        )
        return False  # Propagate exceptions


@dataclass
class StepContext:
    run_id: str
    step_name: str
    inputs: List[str]
    outputs: List[str]
    conn: Any

    started_at: datetime = field(init=False)
    success_count: int = 0
    error_count: int = 0
    step_run_id: str = field(default_factory=lambda: str(uuid.uuid4()))

    def __enter__(self):
        self.started_at = datetime.now(timezone.utc)
        upsert_step(
            conn=self.conn,
            run_id=self.run_id,
            step_run_id=self.step_run_id,
            step_name=self.step_name,
            success_count=None,
            error_count=None,
            started_at=self.started_at.isoformat(),
            ended_at=None,
            duration_ms=None,
            status="in_progress",
            inputs=self.inputs,
            outputs=self.outputs,
        )
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        ended_at = datetime.now(timezone.utc)
        duration_ms = int((ended_at - self.started_at).total_seconds() * 1000)
        if exc_type is not None:
            status = "failed"
        elif self.error_count:
            status = "partial"
        else:
            status = "completed"

        upsert_step(
            conn=self.conn,
            run_id=self.run_id,
            step_run_id=self.step_run_id,
            step_name=self.step_name,
            success_count=self.success_count,
            error_count=self.error_count,
            started_at=self.started_at.isoformat(),
            ended_at=ended_at.isoformat(),
            duration_ms=duration_ms,
            status=status,
            inputs=self.inputs,
            outputs=self.outputs,
            error_message=str(exc_value) if exc_value else None,
            error_type=exc_type.__name__ if exc_type else None,
        )
        return False  # Propagate exceptions

    def add_output(self, path: str) -> None:
        self.outputs.append(path)
