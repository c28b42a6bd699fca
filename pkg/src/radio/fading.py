"""
Non-frequency-selective Rayleigh fading.

Each (UE, cell) link carries a sum-of-sinusoids process

    h(t) = M^-1/2 * sum_n exp(j (2 pi f_d t cos(theta_n) + phi_n))

with arrival angles theta_n and phases phi_n drawn once per link. The power
gain |h(t)|^2 has mean exactly 1 and is approximately exponential; the
Doppler f_d = v f_c / c follows the UE speed, so the process decorrelates
faster for faster users. The gain is the same on every RB of a link.
"""

from __future__ import annotations

import math

import numpy as np

SPEED_OF_LIGHT_MPS = 3.0e8


def doppler_hz(speed_mps: float, carrier_freq_mhz: float) -> float:
    return speed_mps * carrier_freq_mhz * 1e6 / SPEED_OF_LIGHT_MPS


def sample_fading(rng: np.random.Generator, size=None):
    """
    i.i.d. Rayleigh power gain: |CN(0, 1)|^2, i.e. exponential with mean 1.
    """
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return 0.5 * (re * re + im * im)


class SumOfSinusoidsFading:
    """
    Time-correlated fading for a (num_ues, num_cells) grid of links.
    """

    def __init__(self, shape, doppler: float, rng: np.random.Generator, num_sinusoids: int = 16):
        self.doppler = float(doppler)
        self.num_sinusoids = int(num_sinusoids)
        full = tuple(shape) + (self.num_sinusoids,)
        angles = rng.uniform(0.0, 2.0 * math.pi, size=full)
        self._omega_cos = 2.0 * math.pi * self.doppler * np.cos(angles)
        self._phase = rng.uniform(0.0, 2.0 * math.pi, size=full)
        self._scale = 1.0 / math.sqrt(self.num_sinusoids)

    def power_gain(self, t_s: float) -> np.ndarray:
        arg = self._omega_cos * t_s + self._phase
        re = np.cos(arg).sum(axis=-1) * self._scale
        im = np.sin(arg).sum(axis=-1) * self._scale
        return re * re + im * im

    def gain_db(self, t_s: float) -> np.ndarray:
        # the floor keeps log10 finite in the (measure-zero) exact-null case
        return 10.0 * np.log10(np.maximum(self.power_gain(t_s), 1e-12))
