from __future__ import annotations

from src.engine.sweep import run_points, run_sweep
from src.metrics.optimize import select_optimum
from src.schema.scenario import Algorithm, GridPoint, ScenarioConfig, SweepGrid

CONFIG = ScenarioConfig(num_users=5, sweep_time_ms=100)
GRID = SweepGrid(
    algorithms=[Algorithm.HOA1, Algorithm.HOA3],
    hom_db_values=[0.0, 3.0],
    ttt_values=[0.0],
    alpha_beta_values=[0.5],
    speeds_kmh=[30.0],
)


def test_tiny_sweep_shape():
    result = run_sweep(CONFIG, GRID, [1, 2])
    assert len(result.records) == 8
    assert len(result.rows) == 4
    assert result.failures == []
    assert all(row.num_seeds == 2 for row in result.rows)
    optima = select_optimum(result.rows)
    assert set(optima) == {(Algorithm.HOA1, 30.0), (Algorithm.HOA3, 30.0)}


def test_worker_count_does_not_change_results():
    serial = run_sweep(CONFIG, GRID, [1, 2], workers=1)
    parallel = run_sweep(CONFIG, GRID, [1, 2], workers=2)
    assert serial.rows == parallel.rows
    assert serial.records == parallel.records


def test_sweep_horizon_override():
    result = run_sweep(CONFIG, GRID, [1], sim_time_ms=50)
    assert len(result.records) == 4


def test_failing_point_is_recorded_and_the_rest_runs():
    seen = []
    points = [
        GridPoint(Algorithm.HOA2, 3.0, 1.0, 1.5),  # beta outside (0, 1]
        GridPoint(Algorithm.HOA1, 3.0, 1.0, 0.0),
    ]
    result = run_points(CONFIG, points, [3], sim_time_ms=50, on_result=lambda *args: seen.append(args))
    assert len(seen) == 2
    assert len(result.records) == 1
    (failure,) = result.failures
    assert failure.algorithm == Algorithm.HOA2
    assert failure.error_type == "ValidationError"
