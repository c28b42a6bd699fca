"""
Downlink channel layer.

Per (UE, cell) link the received power per RB is

    rx_dbm = tx_per_rb_dbm - pathloss_db + shadow_db + fading_db

Pathloss follows the UE position every TTI, shadowing is redrawn at every
measurement instant and fast fading is regenerated every TTI. Fading is
flat, so every RB of a link sees the same gain and the per-RB SINR of a UE
is one value broadcast over the band. Reported RSRP averages the received
power over a window of TTIs, so fast fading is mostly filtered out of
handover decisions at vehicular speeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.radio.fading import SumOfSinusoidsFading, doppler_hz
from src.radio.layout import CellLayout
from src.radio.pathloss import cost231_pathloss
from src.schema.scenario import ScenarioConfig
from src.utils import db_to_linear, linear_to_db


@dataclass
class RadioLink:
    pathloss_db: float
    shadow_db: float = 0.0
    fading_gain_db: np.ndarray = field(default_factory=lambda: np.zeros(1))
    rsrp_dbm: Optional[float] = None


@dataclass(frozen=True)
class SinrReport:
    sinr_db: np.ndarray  # one value per RB
    timestamp_ms: int


def sample_shadowing(rng: np.random.Generator, std_db: float, size=None):
    if std_db < 0:
        raise ValueError("std_db must be non-negative")
    if std_db == 0:
        return 0.0 if size is None else np.zeros(size)
    return rng.normal(0.0, std_db, size)


def rsrp_per_rb(tx_per_rb_dbm: float, link: RadioLink) -> np.ndarray:
    fading = np.atleast_1d(np.asarray(link.fading_gain_db, dtype=float))
    return tx_per_rb_dbm - link.pathloss_db + link.shadow_db + fading


def rsrp(tx_per_rb_dbm: float, link: RadioLink) -> float:
    """Wideband RSRP: linear mean of the per-RB received powers, in dBm."""
    per_rb = rsrp_per_rb(tx_per_rb_dbm, link)
    return float(linear_to_db(np.mean(db_to_linear(per_rb))))


def clamp_sinr(sinr_db, floor_db: float = -30.0, ceiling_db: float = 40.0):
    # -inf (zero serving power) lands on the floor; NaN is not expected
    return np.clip(sinr_db, floor_db, ceiling_db)


def sinr_per_rb(
    links: Sequence[RadioLink],
    serving: int,
    tx_per_rb_dbm: float,
    noise_dbm: float,
    *,
    time_ms: int = 0,
    floor_db: float = -30.0,
    ceiling_db: float = 40.0,
) -> SinrReport:
    """
    SINR on each RB for a UE served by links[serving]; every other link is a
    full-load interferer on the same RB.
    """
    rx_mw = np.array([db_to_linear(rsrp_per_rb(tx_per_rb_dbm, link)) for link in links])
    signal = rx_mw[serving]
    interference = rx_mw.sum(axis=0) - signal
    with np.errstate(divide="ignore"):
        sinr_db = linear_to_db(signal / (interference + db_to_linear(noise_dbm)))
    return SinrReport(sinr_db=clamp_sinr(sinr_db, floor_db, ceiling_db), timestamp_ms=time_ms)


class ShadowingProcess:
    """
    Log-normal shadowing per link, redrawn every measurement interval with
    AR(1) correlation rho = 0.5 ** (distance_moved / decorrelation_m).
    decorrelation_m = 0 gives i.i.d. redraws.
    """

    def __init__(self, shape, std_db: float, decorrelation_m: float, rng: np.random.Generator):
        self.std_db = float(std_db)
        self.decorrelation_m = float(decorrelation_m)
        self._rng = rng
        self.values = np.asarray(sample_shadowing(rng, self.std_db, size=tuple(shape)), dtype=float)

    def correlation(self, distance_m: float) -> float:
        if self.decorrelation_m == 0:
            return 0.0
        return float(0.5 ** (distance_m / self.decorrelation_m))

    def redraw(self, distance_m: float) -> np.ndarray:
        rho = self.correlation(distance_m)
        innovation = sample_shadowing(self._rng, self.std_db, size=self.values.shape)
        self.values = rho * self.values + np.sqrt(1.0 - rho * rho) * innovation
        return self.values


class ChannelModel:
    """
    Vectorised channel state for all (UE, cell) links of one run.

    The RSRP handed to measurement reports is the linear mean of the per-TTI
    received power over the last `rsrp_window_ms`; SINR and CQI always see
    the instantaneous channel.
    """

    def __init__(
        self,
        config: ScenarioConfig,
        layout: CellLayout,
        num_ues: int,
        shadow_rng: np.random.Generator,
        fading_rng: np.random.Generator,
    ):
        self.config = config
        self.layout = layout
        shape = (num_ues, layout.num_cells)
        self.shadowing = ShadowingProcess(
            shape, config.shadow_std_db, config.shadow_decorrelation_m, shadow_rng
        )
        self.fading = SumOfSinusoidsFading(
            shape,
            doppler_hz(config.ue_speed_mps, config.carrier_freq_mhz),
            fading_rng,
            num_sinusoids=config.fading_sinusoids,
        )
        self._noise_mw = float(db_to_linear(config.noise_per_rb_dbm))
        self._shadow_step_m = config.ue_speed_mps * config.measurement_interval_ms / 1000.0
        self.time_ms = -1
        self.pathloss_db = np.zeros(shape)
        self.fading_db = np.zeros(shape)
        self.rx_dbm = np.zeros(shape)
        # ring buffer of linear received power, one slot per TTI of the window
        self._window_mw = np.zeros((max(1, config.rsrp_window_ms // config.tti_ms),) + shape)
        self._samples = 0

    def pathloss(self, positions: np.ndarray) -> np.ndarray:
        c = self.config
        return cost231_pathloss(
            self.layout.distances(positions), c.carrier_freq_mhz, c.bs_height_m, c.ue_height_m, clamp=True
        )

    def initial_rsrp(self, positions: np.ndarray) -> np.ndarray:
        """RSRP at t = 0 without fast fading; used to pick the first serving cell."""
        return self.config.tx_per_rb_dbm - self.pathloss(positions) + self.shadowing.values

    def update(self, positions: np.ndarray, time_ms: int) -> np.ndarray:
        if time_ms > 0 and time_ms % self.config.measurement_interval_ms == 0:
            self.shadowing.redraw(self._shadow_step_m)
        self.time_ms = time_ms
        self.pathloss_db = self.pathloss(positions)
        self.fading_db = self.fading.gain_db(time_ms / 1000.0)
        self.rx_dbm = self.config.tx_per_rb_dbm - self.pathloss_db + self.shadowing.values + self.fading_db
        self._window_mw[self._samples % len(self._window_mw)] = db_to_linear(self.rx_dbm)
        self._samples += 1
        return self.rx_dbm

    @property
    def shadow_db(self) -> np.ndarray:
        return self.shadowing.values

    @property
    def window_samples(self) -> int:
        return min(self._samples, len(self._window_mw))

    def rsrp_dbm(self) -> np.ndarray:
        """Reported RSRP (J, C): linear mean of the samples in the window, in dBm."""
        filled = self.window_samples
        if filled == 0:
            return self.rx_dbm.copy()
        return linear_to_db(self._window_mw[:filled].mean(axis=0))

    def sinr_db(self, serving: np.ndarray) -> np.ndarray:
        """Clamped SINR (J,) for each UE on its serving cell; identical on every RB."""
        rx_mw = db_to_linear(self.rx_dbm)
        rows = np.arange(rx_mw.shape[0])
        signal = rx_mw[rows, serving]
        interference = rx_mw.sum(axis=1) - signal
        with np.errstate(divide="ignore"):
            sinr = linear_to_db(signal / (interference + self._noise_mw))
        return clamp_sinr(sinr, self.config.sinr_floor_db, self.config.sinr_ceiling_db)

    def links_for(self, ue: int) -> List[RadioLink]:
        """Instantaneous per-RB view of one UE's links, as `sinr_per_rb` takes them."""
        num_rbs = self.config.num_rbs
        return [
            RadioLink(
                pathloss_db=float(self.pathloss_db[ue, c]),
                shadow_db=float(self.shadowing.values[ue, c]),
                fading_gain_db=np.full(num_rbs, self.fading_db[ue, c]),
                rsrp_dbm=float(self.rx_dbm[ue, c]),
            )
            for c in range(self.layout.num_cells)
        ]
