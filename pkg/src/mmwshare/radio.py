"""Antenna patterns, the three-state mmWave channel, noise and the rate map."""

from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import geometry
from .units import db_to_linear, dbm_to_watts


class LinkClass(IntEnum):
    LOS = 0
    NLOS = 1
    OUTAGE = 2


@dataclass(frozen=True)
class AntennaPattern:
    """Sector pattern: gain `main_db` within +-beamwidth/2 of boresight, `back_db` elsewhere."""

    main_db: float
    back_db: float
    beamwidth_deg: float

    def __post_init__(self):
        if not self.main_db > self.back_db:
            raise ValueError("main lobe gain must exceed back lobe gain")
        if not 0 < self.beamwidth_deg < 360:
            raise ValueError("beamwidth must lie in (0, 360) degrees")

    @property
    def main(self) -> float:
        return float(db_to_linear(self.main_db))

    @property
    def back(self) -> float:
        return float(db_to_linear(self.back_db))


BS_PATTERN = AntennaPattern(20.0, -10.0, 5.0)
UE_PATTERN = AntennaPattern(10.0, -10.0, 30.0)


def antenna_gain(pattern: AntennaPattern, phi):
    """Linear gain at angle `phi` (degrees) off boresight."""
    off = geometry.angle_diff(phi, 0.0)
    g = np.where(off <= pattern.beamwidth_deg / 2.0, pattern.main, pattern.back)
    return g if np.ndim(g) else float(g)


@dataclass(frozen=True)
class PathLossParams:
    intercept_db: float
    exponent: float
    shadowing_db: float

    def path_loss_db(self, d):
        return self.intercept_db + 10.0 * self.exponent * np.log10(d)


@dataclass(frozen=True)
class ChannelParams:
    los: PathLossParams
    nlos: PathLossParams
    outage_decay_m: float
    outage_offset: float
    los_decay_m: float
    frequency_ghz: float = 73.0

    def __post_init__(self):
        for name, p in (("los", self.los), ("nlos", self.nlos)):
            if p.shadowing_db < 0:
                raise ValueError(f"{name}.shadowing_db must be >= 0")
            if p.exponent <= 0:
                raise ValueError(f"{name}.exponent must be > 0")
        if self.outage_decay_m <= 0 or self.los_decay_m <= 0:
            raise ValueError("decay lengths must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelParams":
        return cls(
            los=PathLossParams(**d["los"]),
            nlos=PathLossParams(**d["nlos"]),
            outage_decay_m=float(d["outage_decay_m"]),
            outage_offset=float(d["outage_offset"]),
            los_decay_m=float(d["los_decay_m"]),
            frequency_ghz=float(d.get("frequency_ghz", 73.0)),
        )

    @classmethod
    def load(cls, path=None) -> "ChannelParams":
        """Read a channel YAML file; the bundled 73 GHz defaults when path is None."""
        if path is None:
            text = resources.files("mmwshare").joinpath("data/channel_73ghz.yaml").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_dict(yaml.safe_load(text))

    def to_dict(self) -> dict:
        return {
            "frequency_ghz": self.frequency_ghz,
            "los": vars(self.los).copy(),
            "nlos": vars(self.nlos).copy(),
            "outage_decay_m": self.outage_decay_m,
            "outage_offset": self.outage_offset,
            "los_decay_m": self.los_decay_m,
        }

    def state_probabilities(self, d):
        """(p_los, p_nlos, p_outage) at distance d."""
        d = np.asarray(d, dtype=float)
        p_out = np.maximum(0.0, 1.0 - np.exp(-d / self.outage_decay_m + self.outage_offset))
        p_los = (1.0 - p_out) * np.exp(-d / self.los_decay_m)
        return p_los, 1.0 - p_out - p_los, p_out


@dataclass(frozen=True)
class LinkState:
    link_class: LinkClass
    shadowing_db: float
    mean_path_gain: float


def draw_link_states(d, params: ChannelParams, rng: np.random.Generator):
    """Vectorized link draw. Returns (class, shadowing_db, mean_path_gain) arrays.

    One uniform and one standard normal are consumed per link regardless of
    the outcome, so the stream position never depends on the link classes.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("link distance must be positive")
    u = rng.random(d.shape)
    z = rng.standard_normal(d.shape)
    p_los, p_nlos, _ = params.state_probabilities(d)
    cls = np.where(u < p_los, LinkClass.LOS,
                   np.where(u < p_los + p_nlos, LinkClass.NLOS, LinkClass.OUTAGE)).astype(np.int8)
    los = cls == LinkClass.LOS
    nlos = cls == LinkClass.NLOS
    shadow = np.where(los, params.los.shadowing_db * z,
                      np.where(nlos, params.nlos.shadowing_db * z, 0.0))
    pl = np.where(los, params.los.path_loss_db(d), params.nlos.path_loss_db(d))
    gain = np.where(cls == LinkClass.OUTAGE, 0.0, db_to_linear(-(pl + shadow)))
    return cls, shadow, gain


def draw_link_state(d: float, params: ChannelParams, rng: np.random.Generator) -> LinkState:
    if d <= 0:
        raise ValueError("link distance must be positive")
    cls, shadow, gain = draw_link_states(np.array([d]), params, rng)
    return LinkState(LinkClass(int(cls[0])), float(shadow[0]), float(gain[0]))


def fading_sample(rng: np.random.Generator, size=None):
    """Rayleigh power gain: unit-mean exponential."""
    return rng.exponential(1.0, size=size)


@dataclass(frozen=True)
class RateModel:
    alpha: float = 0.2
    beta: float = 0.5
    noise_figure_db: float = 7.0
    noise_psd_dbm_hz: float = -174.0
    tx_power_dbm: float = 30.0

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError("overhead alpha must lie in [0, 1)")
        if not 0 < self.beta <= 1:
            raise ValueError("loss beta must lie in (0, 1]")

    @property
    def tx_power_w(self) -> float:
        return float(dbm_to_watts(self.tx_power_dbm))


def noise_power(model: RateModel, bandwidth_hz):
    """Thermal noise plus receiver noise figure over the band, in watts."""
    return db_to_linear(model.noise_figure_db) * dbm_to_watts(model.noise_psd_dbm_hz) * np.asarray(bandwidth_hz, dtype=float)


def rate(model: RateModel, bandwidth_hz, sinr):
    """Shannon fit (1 - alpha) W log2(1 + beta SINR), bits/s."""
    return (1.0 - model.alpha) * np.asarray(bandwidth_hz, dtype=float) * np.log2(1.0 + model.beta * np.asarray(sinr, dtype=float))


@dataclass(frozen=True)
class Transmission:
    """An interfering downlink: a BS beaming at its own scheduled UE."""

    bs_xy: tuple
    target_xy: tuple
    path_gain: float  # slow gain from this BS to the victim
    fading: float = 1.0


def interference_power(victim_xy, serving_bs_xy, transmissions, region: geometry.Region,
                       bs_pattern: AntennaPattern = BS_PATTERN,
                       ue_pattern: AntennaPattern = UE_PATTERN,
                       tx_power_w: float = 1.0) -> float:
    """Total interference at a victim whose beam points at its serving BS."""
    total = 0.0
    for tx in transmissions:
        phi_d = geometry.angle_from_boresight(tx.bs_xy, tx.target_xy, victim_xy, region)
        phi_a = geometry.angle_from_boresight(victim_xy, serving_bs_xy, tx.bs_xy, region)
        total += (tx_power_w * antenna_gain(bs_pattern, phi_d) * antenna_gain(ue_pattern, phi_a)
                  * tx.path_gain * tx.fading)
    return total
