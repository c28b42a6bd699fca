from __future__ import annotations

from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

# Distances below this are clamped before taking the logarithm.
MIN_DISTANCE_M = 1.0


def mobile_antenna_correction(f_mhz: float, hm_m: float) -> float:
    """a(hm) for small/medium cities."""
    log_f = np.log10(f_mhz)
    return (1.1 * log_f - 0.7) * hm_m - (1.56 * log_f - 0.8)


def cost231_pathloss(
    d_m: ArrayLike,
    f_mhz: float,
    hb_m: float,
    hm_m: float,
    *,
    city_correction_db: float = 0.0,
    clamp: bool = False,
) -> ArrayLike:
    """
    Cost-231 Hata urban pathloss in dB.

    PL = 46.3 + 33.9 log10 f - 13.82 log10 hb - a(hm)
         + (44.9 - 6.55 log10 hb) log10 d_km + C

    The formula is applied at every distance (the nominal 1 km lower bound is
    ignored). With clamp=True distances are raised to MIN_DISTANCE_M, which is
    how the channel model calls it; otherwise d_m <= 0 raises.
    """
    d = np.asarray(d_m, dtype=float)
    if clamp:
        d = np.maximum(d, MIN_DISTANCE_M)
    elif np.any(d <= 0):
        raise ValueError("cost231_pathloss needs d_m > 0")
    log_hb = np.log10(hb_m)
    pl = (
        46.3
        + 33.9 * np.log10(f_mhz)
        - 13.82 * log_hb
        - mobile_antenna_correction(f_mhz, hm_m)
        + (44.9 - 6.55 * log_hb) * np.log10(d / 1000.0)
        + city_correction_db
    )
    if np.ndim(pl) == 0:
        return float(pl)
    return pl
