from __future__ import annotations

from collections import deque
from typing import Deque, List, Tuple


class UeQueue:
    """
    eNodeB downlink buffer of one UE: FIFO of [arrival_ms, bits] packets.
    Transport blocks may take part of the head packet; the remainder keeps
    its original arrival time.
    """

    def __init__(self) -> None:
        self._packets: Deque[List[int]] = deque()
        self._queued_bits = 0
        self.pending_bits = 0.0  # source bits not yet packetised
        self.enqueued_bits = 0

    def __len__(self) -> int:
        return len(self._packets)

    @property
    def queued_bits(self) -> int:
        return self._queued_bits

    def packets(self) -> List[Tuple[int, int]]:
        return [(arrival, bits) for arrival, bits in self._packets]

    def enqueue(self, now_ms: int, bits: int) -> None:
        if self._packets and now_ms < self._packets[-1][0]:
            raise ValueError("arrival times must be nondecreasing")
        self._packets.append([int(now_ms), int(bits)])
        self._queued_bits += int(bits)
        self.enqueued_bits += int(bits)

    def dequeue(self, max_bits: int) -> int:
        taken = 0
        while self._packets and taken < max_bits:
            head = self._packets[0]
            chunk = min(head[1], max_bits - taken)
            head[1] -= chunk
            taken += chunk
            if head[1] == 0:
                self._packets.popleft()
        self._queued_bits -= taken
        return taken

    def hol_delay_ms(self, now_ms: int) -> int:
        return now_ms - self._packets[0][0] if self._packets else 0

    def extend(self, packets: List[Tuple[int, int]]) -> None:
        for arrival, bits in packets:
            self.enqueue(arrival, bits)


def generate_traffic(
    queue: UeQueue, now_ms: int, rate_bps: float, *, tti_ms: int = 1, packet_size_bits: int = 1000
) -> UeQueue:
    """
    Constant bit rate source: rate_bps * tti_ms bits per TTI, packetised in
    packet_size_bits units (one 1000-bit packet per 1 ms TTI at 1 Mbps).
    """
    if rate_bps <= 0:
        return queue
    queue.pending_bits += rate_bps * tti_ms / 1000.0
    while queue.pending_bits >= packet_size_bits - 1e-9:
        queue.enqueue(now_ms, packet_size_bits)
        queue.pending_bits -= packet_size_bits
    return queue
