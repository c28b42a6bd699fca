"""
UE placement and constant-velocity motion inside a reflecting rectangle.

The rectangle is axis aligned, centered on the central eNodeB and given by
its half-extents. A UE keeps its heading for the whole session except at the
rectangle edges, where the trajectory is mirrored (x-component negated at
vertical edges, y-component at horizontal edges, both at corners).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

Rect = Tuple[float, float]


@dataclass(frozen=True)
class UeKinematics:
    position: Tuple[float, float]
    heading_rad: float
    speed_mps: float

    @property
    def velocity(self) -> Tuple[float, float]:
        return (self.speed_mps * math.cos(self.heading_rad), self.speed_mps * math.sin(self.heading_rad))


def _fold(coord: np.ndarray, half: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Fold an unconstrained coordinate back into [-half, half] by repeated
    mirror reflection. Returns the folded coordinate and a +1/-1 factor for
    the velocity component (-1 after an odd number of reflections).
    """
    period = 4.0 * half
    u = np.mod(coord + half, period)
    mirrored = u > 2.0 * half
    folded = np.where(mirrored, 3.0 * half - u, u - half)
    return folded, np.where(mirrored, -1.0, 1.0)


def advance(positions: np.ndarray, velocities: np.ndarray, dt_s: float, rect: Rect) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised motion step for (J, 2) positions and velocities in m/s.
    """
    if dt_s == 0:
        return positions.copy(), velocities.copy()
    raw = positions + velocities * dt_s
    x, sx = _fold(raw[:, 0], rect[0])
    y, sy = _fold(raw[:, 1], rect[1])
    new_pos = np.stack([x, y], axis=1)
    new_vel = velocities * np.stack([sx, sy], axis=1)
    return new_pos, new_vel


def heading_of(velocities: np.ndarray) -> np.ndarray:
    return np.mod(np.arctan2(velocities[:, 1], velocities[:, 0]), 2.0 * math.pi)


def place_users(n: int, rect: Rect, rng: np.random.Generator, speed_mps: float = 0.0) -> List[UeKinematics]:
    """
    n UEs i.i.d. uniform over the rectangle with i.i.d. uniform headings in [0, 2pi).
    """
    if n <= 0:
        raise ValueError("n must be strictly positive")
    xs = rng.uniform(-rect[0], rect[0], size=n)
    ys = rng.uniform(-rect[1], rect[1], size=n)
    headings = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return [
        UeKinematics(position=(float(x), float(y)), heading_rad=float(h), speed_mps=float(speed_mps))
        for x, y, h in zip(xs, ys, headings)
    ]


def step(ue: UeKinematics, dt_ms: float, rect: Rect) -> UeKinematics:
    if dt_ms == 0:
        return ue
    pos = np.array([ue.position], dtype=float)
    vel = np.array([ue.velocity], dtype=float)
    new_pos, new_vel = advance(pos, vel, dt_ms / 1000.0, rect)
    heading = float(heading_of(new_vel)[0]) if ue.speed_mps > 0 else ue.heading_rad
    return UeKinematics(
        position=(float(new_pos[0, 0]), float(new_pos[0, 1])),
        heading_rad=heading,
        speed_mps=ue.speed_mps,
    )


def to_arrays(ues: List[UeKinematics]) -> Tuple[np.ndarray, np.ndarray]:
    positions = np.array([ue.position for ue in ues], dtype=float)
    velocities = np.array([ue.velocity for ue in ues], dtype=float)
    return positions, velocities
