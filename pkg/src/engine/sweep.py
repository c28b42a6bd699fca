"""
Parameter sweep harness.

Every (grid point, seed) pair is an independent simulation at the sweep
horizon. Pairs run in-process (workers=1) or on a process pool; results are
merged by sorting, so the output does not depend on completion order. A
failing pair is recorded and the sweep continues.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import structlog

from src.config.loader import expand_grid
from src.engine.simulation import run, run_record
from src.link.cqi import CqiTable, load_cqi_table
from src.metrics.optimize import average_over_seeds
from src.schema.results import RunRecord, SweepFailure, SweepRow
from src.schema.scenario import GridPoint, PolicySpec, ScenarioConfig, SweepGrid

logger = structlog.get_logger(__name__)


class SweepError(RuntimeError):
    pass


@dataclass
class SweepResult:
    rows: List[SweepRow] = field(default_factory=list)
    records: List[RunRecord] = field(default_factory=list)
    failures: List[SweepFailure] = field(default_factory=list)


Task = Tuple[GridPoint, int]


def point_config(config: ScenarioConfig, point: GridPoint, seed: int, sim_time_ms: int) -> ScenarioConfig:
    return config.model_copy(update={"ue_speed_kmh": point.speed_kmh, "sim_time_ms": sim_time_ms, "seed": seed})


def run_point(
    config: ScenarioConfig, point: GridPoint, seed: int, sim_time_ms: int, table: Optional[CqiTable] = None
) -> RunRecord:
    cfg = point_config(config, point, seed, sim_time_ms)
    policy = PolicySpec.from_point(point)
    ledger, _ = run(cfg, policy, seed, table=table)
    return run_record(cfg, policy, seed, ledger)


def _run_task(args) -> Tuple[Task, Optional[RunRecord], Optional[SweepFailure]]:
    config, point, seed, sim_time_ms, table = args
    try:
        return (point, seed), run_point(config, point, seed, sim_time_ms, table), None
    except Exception as exc:
        failure = SweepFailure(
            algorithm=point.algorithm,
            speed_kmh=point.speed_kmh,
            hom_db=point.hom_db,
            ttt_or_factor=point.param,
            seed=seed,
            error_type=type(exc).__name__,
            error_message=str(exc),
        )
        return (point, seed), None, failure


def run_points(
    config: ScenarioConfig,
    points: Sequence[GridPoint],
    seeds: Sequence[int],
    *,
    sim_time_ms: int,
    workers: int = 1,
    table: Optional[CqiTable] = None,
    on_result: Optional[Callable[[Task, Optional[RunRecord], Optional[SweepFailure]], None]] = None,
) -> SweepResult:
    """
    Run every (point, seed) pair; records and failures come back sorted.
    """
    if not seeds:
        raise SweepError("at least one seed is required")
    if workers < 1:
        raise SweepError("workers must be >= 1")
    if table is None:
        table = load_cqi_table(config.cqi_table_path or None, bler_target=config.bler_target)
    tasks = [(config, point, seed, sim_time_ms, table) for point in points for seed in seeds]
    if workers == 1:
        result = _collect(map(_run_task, tasks), len(tasks), on_result)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            result = _collect(pool.map(_run_task, tasks, chunksize=4), len(tasks), on_result)
    result.records.sort(key=lambda r: (r.algorithm.value, r.speed_kmh, r.hom_db, r.ttt_or_factor, r.seed))
    result.failures.sort(key=lambda f: (f.algorithm.value, f.speed_kmh, f.hom_db, f.ttt_or_factor, f.seed))
    return result


def run_sweep(
    config: ScenarioConfig,
    grid: SweepGrid,
    seeds: Sequence[int],
    *,
    workers: int = 1,
    sim_time_ms: Optional[int] = None,
    on_result: Optional[Callable[[Task, Optional[RunRecord], Optional[SweepFailure]], None]] = None,
) -> SweepResult:
    horizon = config.sweep_time_ms if sim_time_ms is None else sim_time_ms
    points = expand_grid(grid)
    logger.info("sweep_started", points=len(points), seeds=list(seeds), workers=workers, sim_time_ms=horizon)
    result = run_points(config, points, seeds, sim_time_ms=horizon, workers=workers, on_result=on_result)
    result.rows = average_over_seeds(result.records)
    logger.info("sweep_finished", rows=len(result.rows), runs=len(result.records), failures=len(result.failures))
    return result


def _collect(outcomes, total: int, on_result) -> SweepResult:
    result = SweepResult()
    for done, (task, record, failure) in enumerate(outcomes, start=1):
        if record is not None:
            result.records.append(record)
        else:
            result.failures.append(failure)
            logger.warning("sweep_point_failed", algorithm=failure.algorithm.value, speed_kmh=failure.speed_kmh,
                           hom_db=failure.hom_db, param=failure.ttt_or_factor, seed=failure.seed,
                           error_type=failure.error_type, error=failure.error_message)
        if on_result is not None:
            on_result(task, record, failure)
        if done % 50 == 0 or done == total:
            logger.info("sweep_progress", done=done, total=total)
    return result
