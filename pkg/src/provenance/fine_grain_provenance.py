from datetime import datetime, timezone
import uuid
from typing import Any, Dict, Optional
from dataclasses import dataclass, field

import structlog

from src.db.writer import upsert_simulation_run
from src.utils import utc_now_iso

logger = structlog.get_logger(__name__)


@dataclass
class SimulationContext:
    """
    Fine-grained trace of one simulation (one policy x speed x seed).
    Parameters are fixed at construction; metrics are attached before exit.
    A failing simulation is recorded with ok = 0 and its error, then re-raised.
    """

    run_id: str
    step_run_id: Optional[str]
    params: Dict[str, Any]
    conn: Any

    metrics: Optional[Dict[str, Any]] = None
    simulation_id: str = field(default_factory=lambda: str(uuid.uuid4()))
    started_at: datetime = field(init=False)

    def __enter__(self):
        self.started_at = datetime.now(timezone.utc)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        finished_at = datetime.now(timezone.utc)
        duration_ms = int((finished_at - self.started_at).total_seconds() * 1000)
        if exc_type:
            logger.warning("simulation_failed", error_type=exc_type.__name__, error=str(exc_value), **self.params)
        if exc_type is None and self.metrics is None:
            logger.warning("simulation_without_metrics", **self.params)

        upsert_simulation_run(
            conn=self.conn,
            simulation_id=self.simulation_id,
            run_id=self.run_id,
            step_run_id=self.step_run_id,
            params=self.params,
            started_at=self.started_at.isoformat(),
            finished_at=finished_at.isoformat(),
            duration_ms=duration_ms,
            ok=1 if exc_type is None else 0,
            error_type=exc_type.__name__ if exc_type else None,
            error_message=str(exc_value) if exc_value else None,
            metrics=self.metrics,
        )
        return False  # Propagate exceptions

    def set_metrics(self, metrics: Dict[str, Any]) -> None:
        self.metrics = dict(metrics)


def record_outcome(
    conn: Any,
    run_id: str,
    step_run_id: Optional[str],
    params: Dict[str, Any],
    metrics: Optional[Dict[str, Any]] = None,
    error_type: Optional[str] = None,
    error_message: Optional[str] = None,
) -> str:
    """
    Record a simulation that ran elsewhere (a sweep worker); timing columns
    hold the collection instant.
    """
    now = utc_now_iso()
    simulation_id = str(uuid.uuid4())
    upsert_simulation_run(
        conn=conn,
        simulation_id=simulation_id,
        run_id=run_id,
        step_run_id=step_run_id,
        params=params,
        started_at=now,
        finished_at=now,
        duration_ms=0,
        ok=0 if error_type else 1,
        error_type=error_type,
        error_message=error_message,
        metrics=metrics,
    )
    return simulation_id
