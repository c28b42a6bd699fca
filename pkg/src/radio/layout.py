from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class CellLayout:
    """
    Seven-cell hexagonal cluster. Cell 0 sits at the origin, cells 1..6 on a
    ring at sqrt(3) * radius at angles 30 deg + k * 60 deg.
    """

    centers: np.ndarray  # shape (num_cells, 2), meters
    radius_m: float

    @property
    def num_cells(self) -> int:
        return int(self.centers.shape[0])

    def center(self, cell: int) -> Tuple[float, float]:
        x, y = self.centers[cell]
        return float(x), float(y)

    def distances(self, positions: np.ndarray) -> np.ndarray:
        """Planar distance from each position (J, 2) to each cell center -> (J, C)."""
        diff = positions[:, None, :] - self.centers[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


def build_layout(radius_m: float, num_cells: int = 7) -> CellLayout:
    if radius_m <= 0:
        raise ValueError("radius_m must be strictly positive")
    if not 1 <= num_cells <= 7:
        raise ValueError("the hexagonal cluster holds 1 to 7 cells")
    ring = math.sqrt(3.0) * radius_m
    centers = [(0.0, 0.0)]
    for k in range(6):
        angle = math.radians(30.0 + 60.0 * k)
        centers.append((ring * math.cos(angle), ring * math.sin(angle)))
    return CellLayout(centers=np.array(centers[:num_cells], dtype=float), radius_m=float(radius_m))
