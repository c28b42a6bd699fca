"""
Sweep aggregation and parameter selection.

All merges sort their inputs first, so the result does not depend on the
order in which concurrent runs finished.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Dict, Iterable, List, Tuple

from src.schema.results import CompareRow, RunRecord, SweepRow
from src.schema.scenario import Algorithm

ANOH_ZERO_SUBSTITUTE = 0.5

PointKey = Tuple[Algorithm, float, float, float]


def optimize_ratio(st_bps: float, anoh: float) -> float:
    if st_bps < 0:
        raise ValueError("st_bps must be non-negative")
    return st_bps / (ANOH_ZERO_SUBSTITUTE if anoh == 0 else anoh)


def _point_key(record) -> PointKey:
    return (record.algorithm, record.speed_kmh, record.hom_db, record.ttt_or_factor)


def _order(key: PointKey):
    algorithm, speed, hom, param = key
    return (algorithm.value, speed, hom, param)


def average_over_seeds(records: Iterable[RunRecord]) -> List[SweepRow]:
    """
    One SweepRow per grid point: throughput, handover rate and delay are
    averaged over seeds first, the ratio is computed from the averages.
    """
    groups: Dict[PointKey, List[RunRecord]] = defaultdict(list)
    for record in records:
        groups[_point_key(record)].append(record)
    rows: List[SweepRow] = []
    for key in sorted(groups, key=_order):
        members = sorted(groups[key], key=lambda r: r.seed)
        n = len(members)
        st = sum(r.total_throughput_bps for r in members) / n
        anoh = sum(r.ho_avg for r in members) / n
        delay = sum(r.total_delay_ms for r in members) / n
        algorithm, speed, hom, param = key
        rows.append(
            SweepRow(
                algorithm=algorithm,
                speed_kmh=speed,
                hom_db=hom,
                ttt_or_factor=param,
                st_bps=st,
                anoh=anoh,
                optimize_ratio=optimize_ratio(st, anoh),
                total_delay_ms=delay,
                num_seeds=n,
            )
        )
    return rows


def select_optimum(rows: Iterable[SweepRow]) -> Dict[Tuple[Algorithm, float], SweepRow]:
    """
    Highest optimize_ratio per (algorithm, speed); ties go to the smaller
    HOM, then the smaller TTT/factor.
    """
    best: Dict[Tuple[Algorithm, float], SweepRow] = {}
    for row in rows:
        key = (row.algorithm, row.speed_kmh)
        current = best.get(key)
        rank = (-row.optimize_ratio, row.hom_db, row.ttt_or_factor)
        if current is None or rank < (-current.optimize_ratio, current.hom_db, current.ttt_or_factor):
            best[key] = row
    return {k: best[k] for k in sorted(best, key=lambda k: (k[0].value, k[1]))}


def average_compare_rows(records: Iterable[RunRecord]) -> List[CompareRow]:
    """Seed-averaged evaluation rows, one per (algorithm, speed)."""
    groups: Dict[Tuple[Algorithm, float], List[RunRecord]] = defaultdict(list)
    for record in records:
        groups[(record.algorithm, record.speed_kmh)].append(record)
    rows: List[CompareRow] = []
    for key in sorted(groups, key=lambda k: (k[0].value, k[1])):
        members = groups[key]
        n = len(members)
        rows.append(
            CompareRow(
                algorithm=key[0],
                speed_kmh=key[1],
                hom_db=members[0].hom_db,
                ttt_or_factor=members[0].ttt_or_factor,
                ho_avg=sum(r.ho_avg for r in members) / n,
                total_throughput_bps=sum(r.total_throughput_bps for r in members) / n,
                total_delay_ms=sum(r.total_delay_ms for r in members) / n,
            )
        )
    return rows


def sum_over_speeds(rows: Iterable[CompareRow]) -> List[CompareRow]:
    totals: Dict[Algorithm, List[CompareRow]] = defaultdict(list)
    for row in rows:
        if row.speed_kmh is not None:
            totals[row.algorithm].append(row)
    return [
        CompareRow(
            algorithm=algorithm,
            speed_kmh=None,
            ho_avg=sum(r.ho_avg for r in totals[algorithm]),
            total_throughput_bps=sum(r.total_throughput_bps for r in totals[algorithm]),
            total_delay_ms=sum(r.total_delay_ms for r in totals[algorithm]),
        )
        for algorithm in sorted(totals, key=lambda a: a.value)
    ]


def _relative(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator != 0 else 0.0


def improvement(sums: Iterable[CompareRow], reference: Algorithm = Algorithm.HOA4) -> List[Dict[str, object]]:
    """
    Advantage of `reference` over every other algorithm on three-speed sums:
    fewer handovers and less delay as (other - ref) / other, more throughput
    as (ref - other) / other.
    """
    by_algorithm = {row.algorithm: row for row in sums}
    if reference not in by_algorithm:
        return []
    ref = by_algorithm[reference]
    out: List[Dict[str, object]] = []
    for algorithm in sorted(by_algorithm, key=lambda a: a.value):
        if algorithm == reference:
            continue
        other = by_algorithm[algorithm]
        out.append(
            {
                "reference": reference.value,
                "other": algorithm.value,
                "ho_avg_reduction": _relative(other.ho_avg - ref.ho_avg, other.ho_avg),
                "throughput_gain": _relative(ref.total_throughput_bps - other.total_throughput_bps, other.total_throughput_bps),
                "delay_reduction": _relative(other.total_delay_ms - ref.total_delay_ms, other.total_delay_ms),
            }
        )
    return out
