from __future__ import annotations

from typing import Dict, Iterable, List, Mapping


class RoundRobinCycle:
    """
    Per-cell cyclic order of attached UEs plus the position the next TTI
    starts from. UEs arriving by handover join the end of the cycle.
    """

    def __init__(self, cell: int, members: Iterable[int] = ()):
        self.cell = cell
        self._order: List[int] = []
        self._next = 0
        for ue in members:
            self.add(ue)

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, ue: int) -> bool:
        return ue in self._order

    @property
    def members(self) -> List[int]:
        return list(self._order)

    def add(self, ue: int) -> None:
        if ue not in self._order:
            self._order.append(ue)

    def remove(self, ue: int) -> None:
        idx = self._order.index(ue)
        self._order.pop(idx)
        if idx < self._next:
            self._next -= 1
        if self._next >= len(self._order):
            self._next = 0

    def rotation(self) -> List[int]:
        return self._order[self._next:] + self._order[: self._next]

    def advance_past(self, ue: int) -> None:
        self._next = (self._order.index(ue) + 1) % len(self._order)


def schedule_round_robin(
    cycle: RoundRobinCycle, demand: Mapping[int, int], num_rbs: int, *, first_rb: int = 0
) -> Dict[int, range]:
    """
    Grant RBs one per UE per pass in cyclic order, starting after the UE
    served last in the previous TTI, until RBs run out or no UE in the cycle
    has demand left. `demand` is the RB count each UE can use this TTI; UEs
    missing from it (or at 0) are skipped. Each UE's RBs are contiguous,
    numbered from first_rb in rotation order.
    """
    order = cycle.rotation()
    remaining = {ue: int(demand.get(ue, 0)) for ue in order}
    grants: Dict[int, int] = {}
    free = num_rbs
    last_served = None
    while free > 0 and any(r > 0 for r in remaining.values()):
        for ue in order:
            if free == 0:
                break
            if remaining[ue] <= 0:
                continue
            grants[ue] = grants.get(ue, 0) + 1
            remaining[ue] -= 1
            free -= 1
            last_served = ue
    if last_served is not None:
        cycle.advance_past(last_served)

    allocation: Dict[int, range] = {}
    rb = first_rb
    for ue in order:
        if ue in grants:
            allocation[ue] = range(rb, rb + grants[ue])
            rb += grants[ue]
    return allocation
