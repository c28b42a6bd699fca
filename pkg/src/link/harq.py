"""
HARQ with chase combining.

One process carries one transport block of one UE. Each (re)transmission
adds its effective linear SINR to the process, the block-error draw is made
against the combined SINR at transmission time and the ACK/NACK is revealed
harq_ack_delay_ms later. A block is dropped after 1 + max_retransmissions
failed attempts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, NamedTuple, Optional

import numpy as np

from src.utils import db_to_linear, linear_to_db


class HarqProtocolError(RuntimeError):
    pass


class HarqOutcome(str, Enum):
    ACK = "ACK"
    NACK = "NACK"


class HarqStatus(str, Enum):
    RETRANSMIT = "retransmit"  # NACKed, waiting for a retransmission grant
    DELIVERED = "delivered"
    DROPPED = "dropped"


@dataclass(frozen=True)
class HarqProcess:
    ue_id: int
    payload_bits: int
    cqi: int
    num_rbs: int
    transmissions_used: int = 0
    sinr_linear_sum: float = 0.0
    pending_ack_ms: Optional[int] = None
    last_tx_ms: Optional[int] = None
    block_error: bool = False

    @property
    def awaiting_ack(self) -> bool:
        return self.pending_ack_ms is not None

    @property
    def schedulable(self) -> bool:
        return self.pending_ack_ms is None and self.transmissions_used > 0

    @property
    def effective_sinr_db(self) -> float:
        return float(linear_to_db(self.sinr_linear_sum))


class HarqStepResult(NamedTuple):
    status: HarqStatus
    process: HarqProcess
    credited_bits: int = 0
    credit_ms: Optional[int] = None


def combined_sinr_db(sinrs_db: Iterable[float]) -> float:
    """Chase combining: effective linear SINRs add across attempts."""
    return float(linear_to_db(np.sum(db_to_linear(np.asarray(list(sinrs_db), dtype=float)))))


def transmit(
    proc: HarqProcess,
    now_ms: int,
    sinr_db: float,
    *,
    ack_delay_ms: int,
    block_error: bool,
    max_transmissions: int = 4,
) -> HarqProcess:
    """
    Record one (re)transmission. `block_error` is the outcome drawn by the
    caller against the combined SINR; it stays hidden until the feedback is due.
    """
    if proc.awaiting_ack:
        raise HarqProtocolError(f"UE {proc.ue_id}: transmit while awaiting ACK at {proc.pending_ack_ms} ms")
    if proc.transmissions_used >= max_transmissions:
        raise HarqProtocolError(f"UE {proc.ue_id}: transmission budget of {max_transmissions} exhausted")
    return replace(
        proc,
        transmissions_used=proc.transmissions_used + 1,
        sinr_linear_sum=proc.sinr_linear_sum + float(db_to_linear(sinr_db)),
        pending_ack_ms=now_ms + ack_delay_ms,
        last_tx_ms=now_ms,
        block_error=block_error,
    )


def combined_after(proc: HarqProcess, sinr_db: float) -> float:
    """Effective SINR in dB the next transmission would be decoded at."""
    return float(linear_to_db(proc.sinr_linear_sum + float(db_to_linear(sinr_db))))


def harq_step(
    proc: HarqProcess, outcome: HarqOutcome, now_ms: int, *, max_transmissions: int = 4
) -> HarqStepResult:
    if not proc.awaiting_ack:
        raise HarqProtocolError(f"UE {proc.ue_id}: {outcome.value} for an idle HARQ process")
    if now_ms != proc.pending_ack_ms:
        raise HarqProtocolError(
            f"UE {proc.ue_id}: {outcome.value} at {now_ms} ms, expected at {proc.pending_ack_ms} ms"
        )
    idle = replace(proc, pending_ack_ms=None)
    if outcome == HarqOutcome.ACK:
        return HarqStepResult(HarqStatus.DELIVERED, idle, proc.payload_bits, proc.last_tx_ms)
    if proc.transmissions_used < max_transmissions:
        return HarqStepResult(HarqStatus.RETRANSMIT, idle)
    return HarqStepResult(HarqStatus.DROPPED, idle)


def feedback_for(proc: HarqProcess) -> HarqOutcome:
    return HarqOutcome.NACK if proc.block_error else HarqOutcome.ACK
