import argparse
import os
import sqlite3
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import structlog
from dotenv import load_dotenv
from pydantic import ValidationError

from src.config.loader import (
    ScenarioError,
    ScenarioValidationError,
    config_hash,
    load_grid,
    load_optima,
    load_scenario,
    scenario_from_mapping,
    validation_message,
)
from src.db.writer import connect_sqlite, upsert_sweep_rows
from src.engine.simulation import run, run_record
from src.engine.sweep import SweepError, run_points, run_sweep
from src.engine.trace import CHANNEL_TRACE_COLUMNS, RunTrace
from src.export import (
    metadata,
    optima_payload,
    write_channel_trace,
    write_compare_csv,
    write_ho_events,
    write_improvement_csv,
    write_json,
    write_plot_data,
    write_results_csv,
    write_sweep_csv,
)
from src.link.cqi import CqiTable, CqiTableError, load_cqi_table
from src.metrics.ledger import summarize
from src.metrics.optimize import (
    average_compare_rows,
    improvement,
    optimize_ratio,
    select_optimum,
    sum_over_speeds,
)
from src.oracles import run_oracles
from src.provenance.fine_grain_provenance import SimulationContext, record_outcome
from src.provenance.workflow_provenance import RunContext, StepContext
from src.schema.results import RunRecord, RunSummary
from src.schema.scenario import Algorithm, GridPoint, PolicySpec, ScenarioConfig, SweepGrid
from src.utils import configure_logging

load_dotenv()

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_ORACLE = 3

REFERENCE_OPTIMA = Path(__file__).parent / "configs" / "reference_optima.json"
COMPARE_SEEDS = [1, 2, 3, 4, 5]


def _commit_hash() -> str:
    return os.getenv("COMMIT_HASH", "unknown")


def _load_config(args) -> ScenarioConfig:
    config = load_scenario(args.scenario) if args.scenario else ScenarioConfig()
    overrides = {}
    if getattr(args, "speed", None) is not None:
        overrides["ue_speed_kmh"] = args.speed
    if getattr(args, "sim_time", None) is not None and args.command != "sweep":
        overrides["sim_time_ms"] = args.sim_time
    if overrides:
        config = scenario_from_mapping({**config.model_dump(), **overrides})
    return config


def _load_table(config: ScenarioConfig) -> CqiTable:
    return load_cqi_table(config.cqi_table_path or None, bler_target=config.bler_target)


def policy_from_args(args) -> PolicySpec:
    """Build the policy of `run` (or a `compare` override) from the CLI flags."""
    if args.algo is None:
        raise ScenarioValidationError("--algo is required")
    if args.hom is None:
        raise ScenarioValidationError("--hom is required")
    algorithm = Algorithm.parse(args.algo)
    factor = args.beta if algorithm == Algorithm.HOA2 else args.alpha
    try:
        return PolicySpec(
            algorithm=algorithm,
            hom_db=args.hom,
            ttt_ms=args.ttt if algorithm.uses_ttt else None,
            factor=None if algorithm.uses_ttt else factor,
        )
    except ValidationError as exc:
        raise ScenarioValidationError(validation_message(exc)) from exc


def _point_params(point: GridPoint, seed: int, sim_time_ms: int) -> Dict[str, object]:
    return {
        "algorithm": point.algorithm.value,
        "speed_kmh": point.speed_kmh,
        "hom_db": point.hom_db,
        "ttt_or_factor": point.param,
        "seed": seed,
        "sim_time_ms": sim_time_ms,
    }


def _record_metrics(record: RunRecord) -> Dict[str, object]:
    return {
        "ho_avg": record.ho_avg,
        "total_throughput_bps": record.total_throughput_bps,
        "total_delay_ms": record.total_delay_ms,
        "optimize_ratio": record.optimize_ratio,
    }


def _ho_event_rows(trace: RunTrace, policy: PolicySpec) -> List[Dict[str, object]]:
    return [
        {
            "time_ms": e.time_ms,
            "ue_id": e.ue_id,
            "source": e.source_cell,
            "target": e.target_cell,
            "algorithm": policy.algorithm.value,
            "hom": policy.hom_db,
            "ttt_or_alpha_beta": policy.param,
        }
        for e in trace.handovers
    ]


def _trace_name(stem: str, seed: int, many: bool) -> str:
    return f"{stem}_seed{seed}.csv" if many else f"{stem}.csv"


def run_simulations(conn, run_id: str, config: ScenarioConfig, policy: PolicySpec, seeds: Sequence[int],
                    table: CqiTable, dump_channel: bool, dump_events: bool):
    """
    Step 1: simulate one policy for every seed, keeping per-seed summaries
    and (optionally) the event traces.
    """
    records: List[RunRecord] = []
    summaries: List[Dict[str, object]] = []
    traces: Dict[int, RunTrace] = {}

    with StepContext(run_id=run_id, step_name="simulate", inputs=[], outputs=[], conn=conn) as step:
        for seed in seeds:
            cfg = config.model_copy(update={"seed": seed})
            params = _point_params(GridPoint(policy.algorithm, cfg.ue_speed_kmh, policy.hom_db, policy.param), seed, cfg.sim_time_ms)
            with SimulationContext(run_id, step.step_run_id, params, conn) as sim:
                ledger, trace = run(cfg, policy, seed, table=table, record_channel=dump_channel)
                record = run_record(cfg, policy, seed, ledger)
                sim.set_metrics({**_record_metrics(record), "ho_total": ledger.ho_total})
            records.append(record)
            summaries.append(summarize(ledger))
            if dump_channel or dump_events:
                traces[seed] = trace
            step.success_count += 1
    return records, summaries, traces


def _mean(values: Sequence[float]) -> float:
    return float(sum(values) / len(values)) if values else 0.0


def _elementwise_mean(rows: Sequence[Sequence[float]]) -> List[float]:
    return [_mean(col) for col in zip(*rows)] if rows else []


def build_summary(config: ScenarioConfig, policy: PolicySpec, seeds: Sequence[int], summaries, meta) -> RunSummary:
    ho_avg = _mean([s["ho_avg"] for s in summaries])
    throughput = _mean([s["total_throughput_bps"] for s in summaries])
    return RunSummary(
        algorithm=policy.algorithm,
        speed_kmh=config.ue_speed_kmh,
        hom_db=policy.hom_db,
        ttt_or_factor=policy.param,
        seeds=list(seeds),
        ho_avg=ho_avg,
        ho_total_per_seed=[int(s["ho_total"]) for s in summaries],
        ping_pong_total_per_seed=[int(s["ping_pong_total"]) for s in summaries],
        ping_pong_rate=_mean([s["ping_pong_rate"] for s in summaries]),
        total_throughput_bps=throughput,
        total_delay_ms=_mean([s["total_delay_ms"] for s in summaries]),
        cell_throughput_bps=_elementwise_mean([s["cell_throughput_bps"] for s in summaries]),
        cell_delay_ms=_elementwise_mean([s["cell_delay_ms"] for s in summaries]),
        optimize_ratio=optimize_ratio(throughput, ho_avg),
        metadata=meta,
    )


def cmd_run(args) -> int:
    config = _load_config(args)
    policy = policy_from_args(args)
    table = _load_table(config)
    seeds = args.seed or [config.seed]
    out_dir = Path(args.out)
    conn = connect_sqlite(out_dir / "provenance.sqlite")

    with RunContext("run", _commit_hash(), conn, config_hash(config), table.sha256) as run_ctx:
        records, summaries, traces = run_simulations(
            conn, run_ctx.run_id, config, policy, seeds, table,
            args.dump_channel_trace, args.dump_ho_events,
        )

        # Step 2: write outputs
        inputs = [args.scenario] if args.scenario else []
        with StepContext(run_id=run_ctx.run_id, step_name="write_outputs", inputs=inputs, outputs=[], conn=conn) as step:
            meta = metadata(config, table, seeds, command="run", commit_hash=_commit_hash(), extra={"run_id": run_ctx.run_id})
            summary = build_summary(config, policy, seeds, summaries, meta)
            step.add_output(str(write_json(summary.model_dump(mode="json"), out_dir / "metrics.json")))
            step.add_output(str(write_results_csv(records, out_dir / "results.csv")))
            step.add_output(str(write_json(meta, out_dir / "metadata.json")))
            many = len(seeds) > 1
            for seed, trace in traces.items():
                if args.dump_channel_trace:
                    path = out_dir / _trace_name("channel_trace", seed, many)
                    step.add_output(str(write_channel_trace(trace.channel_rows, CHANNEL_TRACE_COLUMNS, path)))
                if args.dump_ho_events:
                    path = out_dir / _trace_name("ho_events", seed, many)
                    step.add_output(str(write_ho_events(_ho_event_rows(trace, policy), path)))
            step.success_count = len(step.outputs)

    print(
        f"run {policy.algorithm.value} speed={config.ue_speed_kmh:g}km/h hom={policy.hom_db:g} param={policy.param:g} "
        f"seeds={len(seeds)}: HO_avg={summary.ho_avg:.4f} ST={summary.total_throughput_bps:.4e}bps "
        f"delay={summary.total_delay_ms:.3f}ms ratio={summary.optimize_ratio:.4e} -> {out_dir}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args)
    grid = load_grid(args.grid) if args.grid else SweepGrid()
    table = _load_table(config)
    seeds = args.seed or [config.seed]
    horizon = args.sim_time if args.sim_time is not None else config.sweep_time_ms
    out_dir = Path(args.out)
    conn = connect_sqlite(out_dir / "provenance.sqlite")

    with RunContext("sweep", _commit_hash(), conn, config_hash(config), table.sha256) as run_ctx:
        # Step 1: run the grid
        inputs = [p for p in (args.scenario, args.grid) if p]
        with StepContext(run_id=run_ctx.run_id, step_name="sweep", inputs=inputs, outputs=[], conn=conn) as step:

            def on_result(task, record, failure):
                point, seed = task
                params = _point_params(point, seed, horizon)
                if record is not None:
                    record_outcome(conn, run_ctx.run_id, step.step_run_id, params, metrics=_record_metrics(record))
                    step.success_count += 1
                else:
                    record_outcome(conn, run_ctx.run_id, step.step_run_id, params,
                                   error_type=failure.error_type, error_message=failure.error_message)
                    step.error_count += 1

            result = run_sweep(config, grid, seeds, workers=args.workers, sim_time_ms=horizon, on_result=on_result)
            upsert_sweep_rows(conn, result.rows, run_ctx.run_id)

        optima = select_optimum(result.rows)

        # Step 2: write outputs
        with StepContext(run_id=run_ctx.run_id, step_name="write_outputs", inputs=[], outputs=[], conn=conn) as step:
            meta = metadata(config, table, seeds, command="sweep", commit_hash=_commit_hash(),
                            extra={"run_id": run_ctx.run_id, "grid": grid.model_dump(mode="json"), "sweep_time_ms": horizon})
            step.add_output(str(write_sweep_csv(result.rows, out_dir / "sweep.csv")))
            step.add_output(str(write_results_csv(result.records, out_dir / "results.csv")))
            step.add_output(str(write_json(optima_payload(optima), out_dir / "optima.json")))
            step.add_output(str(write_json([f.model_dump(mode="json") for f in result.failures], out_dir / "failures.json")))
            for path in write_plot_data(result.rows, out_dir):
                step.add_output(str(path))
            step.add_output(str(write_json(meta, out_dir / "metadata.json")))
            step.success_count = len(step.outputs)

    print(f"sweep: {len(result.rows)} points, {len(result.records)} runs, {len(result.failures)} failures")
    for (algorithm, speed), row in optima.items():
        print(f"  optimum {algorithm.value} {speed:g}km/h: hom={row.hom_db:g} param={row.ttt_or_factor:g} ratio={row.optimize_ratio:.4e}")
    return EXIT_OK


def compare_points(args) -> List[GridPoint]:
    """
    Evaluation parameters: --optima (or the shipped reference optima), with
    the entries of --algo replaced by the explicit --hom/--ttt/--alpha/--beta
    values at every speed.
    """
    points = load_optima(args.optima) if args.optima else load_optima(REFERENCE_OPTIMA)
    if args.algo is not None:
        policy = policy_from_args(args)
        speeds = sorted({p.speed_kmh for p in points}) or [3.0, 30.0, 120.0]
        points = [p for p in points if p.algorithm != policy.algorithm]
        points += [GridPoint(policy.algorithm, s, policy.hom_db, policy.param) for s in speeds]
    if args.speed is not None:
        points = [p for p in points if p.speed_kmh == args.speed]
    if not points:
        raise ScenarioValidationError("no evaluation points selected")
    return sorted(points, key=lambda p: (p.algorithm.value, p.speed_kmh))


def cmd_compare(args) -> int:
    points = compare_points(args)
    config = load_scenario(args.scenario) if args.scenario else ScenarioConfig()
    if args.sim_time is not None:
        config = scenario_from_mapping({**config.model_dump(), "sim_time_ms": args.sim_time})
    table = _load_table(config)
    seeds = args.seed or COMPARE_SEEDS
    out_dir = Path(args.out)
    conn = connect_sqlite(out_dir / "provenance.sqlite")

    with RunContext("compare", _commit_hash(), conn, config_hash(config), table.sha256) as run_ctx:
        # Step 1: evaluate every (algorithm, speed) at its parameters
        inputs = [p for p in (args.scenario, args.optima) if p]
        with StepContext(run_id=run_ctx.run_id, step_name="evaluate", inputs=inputs, outputs=[], conn=conn) as step:

            def on_result(task, record, failure):
                point, seed = task
                params = _point_params(point, seed, config.sim_time_ms)
                if record is not None:
                    record_outcome(conn, run_ctx.run_id, step.step_run_id, params, metrics=_record_metrics(record))
                    step.success_count += 1
                else:
                    record_outcome(conn, run_ctx.run_id, step.step_run_id, params,
                                   error_type=failure.error_type, error_message=failure.error_message)
                    step.error_count += 1

            result = run_points(config, points, seeds, sim_time_ms=config.sim_time_ms, workers=args.workers,
                                table=table, on_result=on_result)

        rows = average_compare_rows(result.records)
        sums = sum_over_speeds(rows)
        gains = improvement(sums)

        # Step 2: write outputs
        with StepContext(run_id=run_ctx.run_id, step_name="write_outputs", inputs=[], outputs=[], conn=conn) as step:
            meta = metadata(config, table, seeds, command="compare", commit_hash=_commit_hash(),
                            extra={"run_id": run_ctx.run_id, "points": [p._asdict() for p in points]})
            step.add_output(str(write_compare_csv(rows + sums, out_dir / "compare.csv")))
            step.add_output(str(write_improvement_csv(gains, out_dir / "improvement.csv")))
            step.add_output(str(write_results_csv(result.records, out_dir / "results.csv")))
            step.add_output(str(write_json([f.model_dump(mode="json") for f in result.failures], out_dir / "failures.json")))
            step.add_output(str(write_json(meta, out_dir / "metadata.json")))
            step.success_count = len(step.outputs)

    print(f"compare: {len(rows)} rows over {len(seeds)} seeds, {len(result.failures)} failures")
    for row in sums:
        print(f"  {row.algorithm.value} sum: HO_avg={row.ho_avg:.4f} ST={row.total_throughput_bps:.4e}bps delay={row.total_delay_ms:.3f}ms")
    for gain in gains:
        print(
            f"  {gain['reference']} vs {gain['other']}: HO_avg -{100 * gain['ho_avg_reduction']:.1f}% "
            f"ST +{100 * gain['throughput_gain']:.1f}% delay -{100 * gain['delay_reduction']:.1f}%"
        )
    return EXIT_OK


def cmd_oracle(args) -> int:
    results = run_oracles()
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: expected={r.expected:.6g} actual={r.actual:.6g} tol={r.tolerance:g}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error("oracle_failed", failed=failed)
        return EXIT_ORACLE
    return EXIT_OK


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", type=str.lower, choices=["hoa1", "hoa2", "hoa3", "hoa4"])
    p.add_argument("--hom", type=float, help="HOM in dB (FDIF threshold for hoa3)")
    p.add_argument("--ttt", type=float, help="time-to-trigger in ms (hoa1, hoa4)")
    p.add_argument("--alpha", type=float, help="integrator factor (hoa3)")
    p.add_argument("--beta", type=float, help="RSS filter factor (hoa2)")


def build_parser() -> argparse.ArgumentParser:
    default_out = os.getenv("SIM_OUTPUT_DIR", "results")
    parser = argparse.ArgumentParser(prog="lte-handover", description="LTE downlink handover simulator")
    parser.add_argument("--log-level", default=os.getenv("SIM_LOG_LEVEL", "INFO"))
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file (key = value); defaults apply when omitted")
    common.add_argument("--seed", type=int, action="append", help="seed; repeat for several seeds")
    common.add_argument("--out", default=default_out, help="output directory")

    p_run = sub.add_parser("run", parents=[common], help="simulate one policy")
    _add_policy_flags(p_run)
    p_run.add_argument("--speed", type=float, help="UE speed in km/h (overrides the scenario)")
    p_run.add_argument("--sim-time", type=int, help="horizon in ms (overrides the scenario)")
    p_run.add_argument("--dump-channel-trace", action="store_true")
    p_run.add_argument("--dump-ho-events", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common], help="optimize HOM/TTT or HOM/alpha-beta")
    p_sweep.add_argument("--grid", help="grid file (key = value)")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--sim-time", type=int, help="sweep horizon in ms (default: sweep_time_ms)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", parents=[common], help="evaluate all algorithms at their optima")
    _add_policy_flags(p_cmp)
    p_cmp.add_argument("--optima", help="optima.json from a sweep (default: shipped reference optima)")
    p_cmp.add_argument("--speed", type=float, help="evaluate a single speed")
    p_cmp.add_argument("--sim-time", type=int, help="horizon in ms (overrides the scenario)")
    p_cmp.add_argument("--workers", type=int, default=1)
    p_cmp.set_defaults(func=cmd_compare)

    p_oracle = sub.add_parser("oracle", help="check closed-form values")
    p_oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except (ScenarioError, CqiTableError, SweepError, FileNotFoundError) as exc:
        logger.error("configuration_error", error_type=type(exc).__name__, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, sqlite3.Error) as exc:
        logger.error("output_error", error_type=type(exc).__name__, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
