"""
Per-TTI simulation loop.

Order inside one TTI is fixed:
1. advance UEs
2. update channels (shadowing redrawn at measurement instants)
3. measurement reports and policy decisions
4. execute handovers (at most one per UE per report)
5. traffic arrival, CQI feedback, scheduling and transmission
6. HARQ feedback due at this TTI
7. metric samples
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import structlog

from src.engine.rng import spawn_streams
from src.engine.trace import RunTrace
from src.handover.execution import UeState, execute_handover
from src.handover.measurement import MeasurementReport, is_report_instant
from src.handover.policies import decide, initial_state, timer_running
from src.link.cqi import CqiPipeline, CqiTable, cqi_from_sinr, load_cqi_table, transport_block_bits
from src.link.harq import HarqProcess, HarqStatus, combined_after, feedback_for, harq_step, transmit
from src.link.scheduler import RoundRobinCycle, schedule_round_robin
from src.link.traffic import generate_traffic
from src.metrics.ledger import MetricsLedger, avg_handovers, total_delay, total_throughput
from src.metrics.optimize import optimize_ratio
from src.radio.channel import ChannelModel
from src.radio.layout import build_layout
from src.radio.mobility import advance, place_users, to_arrays
from src.schema.results import RunRecord
from src.schema.scenario import PolicySpec, ScenarioConfig

logger = structlog.get_logger(__name__)


@dataclass
class SimulationRun:
    config: ScenarioConfig
    policy: PolicySpec
    seed: int
    table: Optional[CqiTable] = None
    record_channel: bool = False

    def __post_init__(self) -> None:
        c = self.config
        if self.table is None:
            self.table = load_cqi_table(c.cqi_table_path or None, bler_target=c.bler_target)
        self.streams = spawn_streams(self.seed)
        self.layout = build_layout(c.cell_radius_m, c.num_cells)
        self.clock_ms = 0
        self._max_tx = 1 + c.max_retransmissions
        self._tbs_per_rb = np.array(
            [transport_block_bits(q, 1, self.table, c.data_res_per_rb) for q in range(16)], dtype=np.int64
        )

    def _setup(self) -> None:
        c = self.config
        J = c.num_users
        kinematics = place_users(J, c.bounding_rect_m, self.streams.placement, c.ue_speed_mps)
        self.positions, self.velocities = to_arrays(kinematics)
        self.channel = ChannelModel(c, self.layout, J, self.streams.shadowing, self.streams.fading)
        first_serving = np.argmax(self.channel.initial_rsrp(self.positions), axis=1)
        self.ues = [
            UeState(ue_id=j, serving_cell=int(first_serving[j]), policy_state=initial_state(self.policy, window_tu_ms=c.window_tu_ms))
            for j in range(J)
        ]
        self.cycles = {
            cell: RoundRobinCycle(cell, [j for j in range(J) if first_serving[j] == cell])
            for cell in range(self.layout.num_cells)
        }
        self.cqi = CqiPipeline(J, c.cqi_delay_ms)
        self.reports: List[Optional[MeasurementReport]] = [None] * J
        self.ledger = MetricsLedger.empty(J, self.layout.num_cells, c.sim_time_ms, c.tti_ms)
        self.trace = RunTrace.empty(J, self.layout.num_cells, c.sim_time_ms, c.tti_ms)

    def serving_cells(self) -> np.ndarray:
        return np.array([ue.serving_cell for ue in self.ues], dtype=int)

    # -- 3. measurement and decisions --
    def _decide(self, t: int) -> Dict[int, int]:
        c = self.config
        if is_report_instant(t, c.measurement_interval_ms):
            rsrp = self.channel.rsrp_dbm()
            for ue in self.ues:
                self.reports[ue.ue_id] = MeasurementReport(
                    ue_id=ue.ue_id,
                    time_ms=t,
                    rsrp_dbm=tuple(float(v) for v in rsrp[ue.ue_id]),
                    serving_cell=ue.serving_cell,
                )
            if self.record_channel:
                self._record_channel(t, rsrp)
            candidates = self.ues
        else:
            candidates = [ue for ue in self.ues if timer_running(ue.policy_state)]

        decisions: Dict[int, int] = {}
        for ue in candidates:
            report = self.reports[ue.ue_id]
            if report is None or ue.blocked_report_ms == report.time_ms:
                continue
            ue.policy_state, target = decide(report, ue.policy_state, t)
            if target is not None:
                decisions[ue.ue_id] = target
        return decisions

    def _record_channel(self, t: int, rsrp: np.ndarray) -> None:
        ch = self.channel
        for j in range(self.config.num_users):
            for cell in range(self.layout.num_cells):
                self.trace.channel_rows.append(
                    (t, j, cell, float(ch.pathloss_db[j, cell]), float(ch.shadow_db[j, cell]),
                     float(ch.fading_db[j, cell]), float(ch.rx_dbm[j, cell]), float(rsrp[j, cell]))
                )

    # -- 4. handover execution --
    def _handover(self, t: int, decisions: Dict[int, int]) -> None:
        for j, target in decisions.items():
            ue = self.ues[j]
            ping_pongs = ue.ping_pongs
            event = execute_handover(
                ue, ue.serving_cell, target, t,
                cycles=self.cycles, cqi=self.cqi, ping_pong_window_ms=self.config.ping_pong_window_ms,
            )
            ue.blocked_report_ms = self.reports[j].time_ms
            ping_pong = ue.ping_pongs > ping_pongs
            self.ledger.record_handover(event, ping_pong=ping_pong)
            self.trace.handover(event, ping_pong)

    # -- 5. traffic, link adaptation, scheduling, transmission --
    def _transmit(self, t: int) -> None:
        c = self.config
        for ue in self.ues:
            generate_traffic(ue.queue, t, c.traffic_rate_bps, tti_ms=c.tti_ms, packet_size_bits=c.packet_size_bits)

        sinr = self.channel.sinr_db(self.serving_cells())
        self.cqi.push(t, cqi_from_sinr(sinr, self.table))
        usable = self.cqi.usable(t)
        block_rng = self.streams.block_error

        for cell in range(self.layout.num_cells):
            cycle = self.cycles[cell]
            free = c.num_rbs
            busy = set()
            for j in cycle.rotation():
                ue = self.ues[j]
                for k, proc in enumerate(ue.harq):
                    if proc.schedulable and proc.num_rbs <= free:
                        effective = combined_after(proc, float(sinr[j]))
                        error = bool(block_rng.random() < self.table.bler(proc.cqi, effective))
                        ue.harq[k] = transmit(
                            proc, t, float(sinr[j]),
                            ack_delay_ms=c.harq_ack_delay_ms, block_error=error, max_transmissions=self._max_tx,
                        )
                        free -= proc.num_rbs
                        busy.add(j)
                        break

            demand: Dict[int, int] = {}
            for j in cycle.members:
                q = int(usable[j])
                queued = self.ues[j].queue.queued_bits
                if j in busy or q <= 0 or queued == 0:
                    continue
                demand[j] = math.ceil(queued / self._tbs_per_rb[q])

            allocation = schedule_round_robin(cycle, demand, free, first_rb=c.num_rbs - free)
            for j, rbs in allocation.items():
                ue = self.ues[j]
                q = int(usable[j])
                tbs = transport_block_bits(q, len(rbs), self.table, c.data_res_per_rb)
                payload = ue.queue.dequeue(tbs)
                error = bool(block_rng.random() < self.table.bler(q, float(sinr[j])))
                proc = HarqProcess(ue_id=j, payload_bits=payload, cqi=q, num_rbs=len(rbs))
                ue.harq.append(
                    transmit(
                        proc, t, float(sinr[j]),
                        ack_delay_ms=c.harq_ack_delay_ms, block_error=error, max_transmissions=self._max_tx,
                    )
                )

    # -- 6. HARQ feedback --
    def _feedback(self, t: int) -> None:
        for ue in self.ues:
            if not ue.harq:
                continue
            kept: List[HarqProcess] = []
            for proc in ue.harq:
                if proc.pending_ack_ms != t:
                    kept.append(proc)
                    continue
                result = harq_step(proc, feedback_for(proc), t, max_transmissions=self._max_tx)
                if result.status == HarqStatus.DELIVERED:
                    if result.credited_bits:
                        self.ledger.credit(result.credit_ms, ue.ue_id, result.credited_bits)
                        self.trace.deliver(result.credit_ms, ue.ue_id, result.credited_bits)
                elif result.status == HarqStatus.RETRANSMIT:
                    kept.append(result.process)
                else:
                    self.trace.dropped_blocks += 1
            ue.harq = kept

    def execute(self) -> Tuple[MetricsLedger, RunTrace]:
        c = self.config
        started = time.perf_counter()
        self._setup()
        dt_s = c.tti_ms / 1000.0
        for t in range(0, c.sim_time_ms, c.tti_ms):
            self.clock_ms = t
            if t > 0:
                self.positions, self.velocities = advance(self.positions, self.velocities, dt_s, c.bounding_rect_m)
            self.channel.update(self.positions, t)
            decisions = self._decide(t)
            self._handover(t, decisions)
            self._transmit(t)
            self._feedback(t)
            hol = np.array([ue.queue.hol_delay_ms(t) for ue in self.ues], dtype=np.int64)
            serving = self.serving_cells()
            self.ledger.sample(t, serving, hol)
            self.trace.sample(t, serving, hol)
        logger.info(
            "simulation_finished",
            algorithm=self.policy.algorithm.value,
            speed_kmh=c.ue_speed_kmh,
            hom_db=self.policy.hom_db,
            param=self.policy.param,
            seed=self.seed,
            sim_time_ms=c.sim_time_ms,
            ho_total=self.ledger.ho_total,
            duration_ms=int((time.perf_counter() - started) * 1000),
        )
        return self.ledger, self.trace


def run(
    config: ScenarioConfig,
    policy: PolicySpec,
    seed: int,
    *,
    table: Optional[CqiTable] = None,
    record_channel: bool = False,
) -> Tuple[MetricsLedger, RunTrace]:
    return SimulationRun(config, policy, seed, table=table, record_channel=record_channel).execute()


def run_record(config: ScenarioConfig, policy: PolicySpec, seed: int, ledger: MetricsLedger) -> RunRecord:
    ho_avg = avg_handovers(ledger)
    throughput = total_throughput(ledger)
    return RunRecord(
        algorithm=policy.algorithm,
        speed_kmh=config.ue_speed_kmh,
        hom_db=policy.hom_db,
        ttt_or_factor=policy.param,
        seed=seed,
        ho_avg=ho_avg,
        total_throughput_bps=throughput,
        total_delay_ms=total_delay(ledger),
        optimize_ratio=optimize_ratio(throughput, ho_avg),
    )
