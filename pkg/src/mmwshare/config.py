"""Scenario configuration: dataclasses, validation, YAML loading and hashing."""

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import yaml

from .geometry import Region
from .radio import BS_PATTERN, UE_PATTERN, AntennaPattern, ChannelParams, RateModel


class ConfigError(ValueError):
    """Invalid scenario; `errors` lists one message per offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


class SharingRegime(str, Enum):
    NO_SHARING = "NO_SHARING"
    BS_SHARING_ONLY = "BS_SHARING_ONLY"
    SPECTRUM_SHARING_ONLY = "SPECTRUM_SHARING_ONLY"
    FULL_SHARING = "FULL_SHARING"

    @property
    def shared_bs(self) -> bool:
        return self in (SharingRegime.BS_SHARING_ONLY, SharingRegime.FULL_SHARING)

    @property
    def shared_spectrum(self) -> bool:
        return self in (SharingRegime.SPECTRUM_SHARING_ONLY, SharingRegime.FULL_SHARING)


class SchedulerPolicy(str, Enum):
    TEMPORAL_FAIR_OPPORTUNISTIC = "TEMPORAL_FAIR_OPPORTUNISTIC"
    ROUND_ROBIN = "ROUND_ROBIN"


class InterferenceMode(str, Enum):
    SINR = "SINR"
    SNR_ONLY = "SNR_ONLY"


class BsSharingScheduler(str, Enum):
    """Scheduling domain for a shared BS when spectrum stays exclusive.

    PER_BS: one scheduler per BS over all attached UEs; the slot goes out on
    the band of whichever UE wins. PER_BAND: one scheduler per operator band
    at each BS, so a shared BS can transmit on every band in the same slot.
    """

    PER_BS = "PER_BS"
    PER_BAND = "PER_BAND"


@dataclass(frozen=True)
class OperatorConfig:
    bandwidth_hz: float
    bs_density: float  # per km^2
    ue_density: float  # per km^2


@dataclass(frozen=True)
class ScenarioConfig:
    operators: tuple
    regime: SharingRegime = SharingRegime.NO_SHARING
    region: Region = field(default_factory=Region)
    bs_antenna: AntennaPattern = BS_PATTERN
    ue_antenna: AntennaPattern = UE_PATTERN
    channel: ChannelParams = field(default_factory=ChannelParams.load)
    rate_model: RateModel = field(default_factory=RateModel)
    slots: int = 10_000
    drops: int = 20
    policy: SchedulerPolicy = SchedulerPolicy.TEMPORAL_FAIR_OPPORTUNISTIC
    interference: InterferenceMode = InterferenceMode.SINR
    bs_sharing_scheduler: BsSharingScheduler = BsSharingScheduler.PER_BS
    seed: int = 0
    name: str = "scenario"

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    @property
    def total_bandwidth_hz(self) -> float:
        return float(sum(op.bandwidth_hz for op in self.operators))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "regime": self.regime.value,
            "region": {"side_m": self.region.side_length, "wraparound": self.region.wraparound},
            "operators": [vars(op).copy() for op in self.operators],
            "antennas": {"bs": vars(self.bs_antenna).copy(), "ue": vars(self.ue_antenna).copy()},
            "channel": self.channel.to_dict(),
            "rate_model": vars(self.rate_model).copy(),
            "slots": self.slots,
            "drops": self.drops,
            "policy": self.policy.value,
            "interference": self.interference.value,
            "bs_sharing_scheduler": self.bs_sharing_scheduler.value,
        }

    def config_hash(self) -> str:
        """Digest of the canonical config (seed included, name excluded)."""
        d = self.to_dict()
        d.pop("name")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "ScenarioConfig":
        return _parse_scenario(d, base_dir)


def _enum(errors, key, enum_cls, value, default):
    if value is None:
        return default
    try:
        return enum_cls(str(value).upper())
    except ValueError:
        errors.append(f"{key}: {value!r} is not one of {[e.value for e in enum_cls]}")
        return default


def _number(errors, key, value, default, *, integer=False, minimum=None, strict=False):
    if value is None:
        return default
    if isinstance(value, str):
        # YAML 1.1 reads exponent forms such as 500e6 as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{key}: expected a number, got {value!r}")
        return default
    if integer and int(value) != value:
        errors.append(f"{key}: expected an integer, got {value!r}")
        return default
    if minimum is not None and (value <= minimum if strict else value < minimum):
        errors.append(f"{key}: must be {'>' if strict else '>='} {minimum}, got {value!r}")
        return default
    return int(value) if integer else float(value)


_TOP_KEYS = {"name", "seed", "regime", "region", "operators", "antennas", "channel",
             "rate_model", "slots", "drops", "policy", "interference", "bs_sharing_scheduler"}


def _parse_scenario(d, base_dir=None) -> ScenarioConfig:
    errors = []
    if not isinstance(d, dict):
        raise ConfigError(["<root>: expected a mapping"])
    for key in sorted(set(d) - _TOP_KEYS):
        errors.append(f"{key}: unknown field")

    ops = []
    raw_ops = d.get("operators")
    if not isinstance(raw_ops, list) or not raw_ops:
        errors.append("operators: expected a nonempty list")
        raw_ops = []
    for i, op in enumerate(raw_ops):
        if not isinstance(op, dict):
            errors.append(f"operators[{i}]: expected a mapping")
            continue
        vals = {k: _number(errors, f"operators[{i}].{k}", op.get(k), None, minimum=0)
                for k in ("bandwidth_hz", "bs_density", "ue_density")}
        for k, v in vals.items():
            if op.get(k) is None:
                errors.append(f"operators[{i}].{k}: required")
        if all(v is not None for v in vals.values()):
            ops.append(OperatorConfig(**vals))

    reg = d.get("region") or {}
    side = _number(errors, "region.side_m", reg.get("side_m"), 1000.0, minimum=0, strict=True)
    region = Region(side, bool(reg.get("wraparound", True)))

    ant = d.get("antennas") or {}
    patterns = {}
    for which, default in (("bs", BS_PATTERN), ("ue", UE_PATTERN)):
        a = ant.get(which)
        if a is None:
            patterns[which] = default
            continue
        try:
            patterns[which] = AntennaPattern(float(a["main_db"]), float(a["back_db"]),
                                             float(a["beamwidth_deg"]))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"antennas.{which}: {exc}")
            patterns[which] = default

    ch = d.get("channel")
    try:
        if ch is None or ch == "default":
            channel = ChannelParams.load()
        elif isinstance(ch, str):
            path = Path(ch)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            channel = ChannelParams.load(path)
        else:
            channel = ChannelParams.from_dict(ch)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        errors.append(f"channel: {exc}")
        channel = ChannelParams.load()

    rm = d.get("rate_model") or {}
    try:
        rate_model = RateModel(**{k: float(v) for k, v in rm.items()})
    except (TypeError, ValueError) as exc:
        errors.append(f"rate_model: {exc}")
        rate_model = RateModel()

    cfg = ScenarioConfig(
        operators=tuple(ops),
        regime=_enum(errors, "regime", SharingRegime, d.get("regime"), SharingRegime.NO_SHARING),
        region=region,
        bs_antenna=patterns["bs"],
        ue_antenna=patterns["ue"],
        channel=channel,
        rate_model=rate_model,
        slots=_number(errors, "slots", d.get("slots"), 10_000, integer=True, minimum=1),
        drops=_number(errors, "drops", d.get("drops"), 20, integer=True, minimum=1),
        policy=_enum(errors, "policy", SchedulerPolicy, d.get("policy"),
                     SchedulerPolicy.TEMPORAL_FAIR_OPPORTUNISTIC),
        interference=_enum(errors, "interference", InterferenceMode, d.get("interference"),
                           InterferenceMode.SINR),
        bs_sharing_scheduler=_enum(errors, "bs_sharing_scheduler", BsSharingScheduler,
                                   d.get("bs_sharing_scheduler"), BsSharingScheduler.PER_BS),
        seed=_number(errors, "seed", d.get("seed"), 0, integer=True, minimum=0),
        name=str(d.get("name", "scenario")),
    )
    if errors:
        raise ConfigError(errors)
    return cfg


def load_yaml(path):
    path = Path(path)
    try:
        return yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML ({exc})"]) from exc
