"""Empirical network-externality curves h(n) from network-size sweeps.

A network of size n holds a fraction n of the subscribers and, depending on
the open-resource scenario, a fraction n of the BS density and/or spectrum.
h(n) is the fifth-percentile UE rate of that network, normalized by the
no-open-resources network at n = 1.
"""

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from . import netsim
from .config import OperatorConfig, ScenarioConfig, SharingRegime


class OpenResourceScenario(str, Enum):
    NO_OPEN_RESOURCES = "NO_OPEN_RESOURCES"
    OPEN_BS_DEPLOYMENT = "OPEN_BS_DEPLOYMENT"
    OPEN_SPECTRUM = "OPEN_SPECTRUM"


@dataclass(frozen=True)
class ResourceCaps:
    bs_density: float = 100.0
    bandwidth_hz: float = 1e9
    ue_density: float = 500.0

    def __post_init__(self):
        if min(self.bs_density, self.bandwidth_hz, self.ue_density) <= 0:
            raise ValueError("resource caps must be positive")


def _default_grid():
    dense = np.round(np.arange(0.05, 0.3 + 1e-9, 0.025), 3)
    coarse = np.round(np.arange(0.35, 1.0 + 1e-9, 0.05), 3)
    return tuple(float(x) for x in np.concatenate([dense, coarse]))


DEFAULT_GRID = _default_grid()
OPEN_BS_EPSILON = 0.01


def scenario_resources(n: float, scenario: OpenResourceScenario, caps: ResourceCaps,
                       coalition=()):
    """(BS density, bandwidth, UE density) held by a network of size n.

    With a nonempty sharing coalition the pooled size sum(coalition) replaces
    n on every dimension that scales with network size.
    """
    if not 0.0 <= n <= 1.0:
        raise ValueError(f"network size must lie in [0, 1], got {n}")
    coalition = tuple(coalition)
    if any(x < 0 for x in coalition) or sum(coalition) > 1.0 + 1e-12:
        raise ValueError("coalition sizes must be nonnegative and sum to at most 1")
    pooled = sum(coalition) if coalition else n
    scenario = OpenResourceScenario(scenario)
    bs = caps.bs_density if scenario is OpenResourceScenario.OPEN_BS_DEPLOYMENT else pooled * caps.bs_density
    bw = caps.bandwidth_hz if scenario is OpenResourceScenario.OPEN_SPECTRUM else pooled * caps.bandwidth_hz
    return bs, bw, n * caps.ue_density


def network_config(base: ScenarioConfig, n: float, scenario, caps: ResourceCaps) -> ScenarioConfig:
    bs, bw, ue = scenario_resources(n, scenario, caps)
    return base.with_(operators=(OperatorConfig(bw, bs, ue),), regime=SharingRegime.NO_SHARING,
                      name=f"{OpenResourceScenario(scenario).value.lower()}_n{n:g}")


class PointCache:
    """On-disk store of fifth-percentile results keyed by config hash."""

    def __init__(self, directory):
        self.dir = Path(directory)

    def _path(self, key):
        return self.dir / f"{key}.json"

    def get(self, key):
        p = self._path(key)
        if p.exists():
            return json.loads(p.read_text())
        return None

    def put(self, key, value: dict):
        self.dir.mkdir(parents=True, exist_ok=True)
        tmp = self._path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(value, sort_keys=True))
        os.replace(tmp, self._path(key))


def fifth_percentile_point(cfg: ScenarioConfig, cache: PointCache = None, threads: int = 1) -> dict:
    """Simulate (or fetch) one network; returns raw rate and its bootstrap CI.

    The returned dict carries `computed_at` (UTC, from the original run) and
    `cached`, telling whether this call reused a stored result.
    """
    key = cfg.config_hash()
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return {**hit, "cached": True}
    dist = netsim.simulate(cfg, threads=threads)
    if dist.rates.size == 0:
        raise ValueError(f"{cfg.name}: no UEs in any drop; raise the UE density or drop count")
    lo, hi = dist.fifth_percentile_ci()
    point = {"config_hash": key, "rate_bps": dist.fifth_percentile(), "ci_lo": lo, "ci_hi": hi,
             "n_samples": int(dist.rates.size),
             "computed_at": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    if cache is not None:
        cache.put(key, point)
    return {**point, "cached": False}


@dataclass
class ExternalityCurve:
    scenario: OpenResourceScenario
    n: np.ndarray
    h: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    raw_rate: np.ndarray
    normalization_bps: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        if np.any(np.diff(self.n) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(self.h < 0):
            raise ValueError("h must be nonnegative")

    def __call__(self, x):
        """Piecewise-linear interpolant of h."""
        return np.interp(x, self.n, self.h)

    @classmethod
    def analytic(cls, func, n=None, scenario=OpenResourceScenario.NO_OPEN_RESOURCES):
        n = np.linspace(0.0, 1.0, 201) if n is None else np.asarray(n, dtype=float)
        h = np.asarray(func(n), dtype=float)
        return cls(scenario, n, h, h, h, h, 1.0, {"analytic": True})


def baseline_rate(base: ScenarioConfig, caps: ResourceCaps, cache=None, threads=1) -> float:
    """Raw fifth-percentile rate of the no-open-resources network at n = 1."""
    cfg = network_config(base, 1.0, OpenResourceScenario.NO_OPEN_RESOURCES, caps)
    return fifth_percentile_point(cfg, cache, threads)["rate_bps"]


def estimate_h(scenario, caps: ResourceCaps, n_grid, base: ScenarioConfig,
               normalization_bps=None, cache=None, threads=1,
               epsilon=OPEN_BS_EPSILON) -> ExternalityCurve:
    """Sweep network size and build h(n) for one open-resource scenario.

    Without open BSs a zero-size network has neither BSs nor spectrum, so
    h(0) = 0 is prepended; with open BSs h(0) is the network at size epsilon.
    """
    scenario = OpenResourceScenario(scenario)
    grid = [float(x) for x in n_grid]
    if not grid or any(not 0.0 < x <= 1.0 for x in grid):
        raise ValueError("grid points must lie in (0, 1]")
    if normalization_bps is None:
        normalization_bps = baseline_rate(base, caps, cache, threads)
    if normalization_bps <= 0:
        raise ValueError("baseline fifth-percentile rate is zero; cannot normalize")

    rows = []
    if scenario is OpenResourceScenario.OPEN_BS_DEPLOYMENT:
        pt = fifth_percentile_point(network_config(base, epsilon, scenario, caps), cache, threads)
        rows.append((0.0, {**pt, "simulated_n": epsilon}))
    else:
        rows.append((0.0, {"rate_bps": 0.0, "ci_lo": 0.0, "ci_hi": 0.0, "analytic": True}))
    for x in sorted(grid):
        rows.append((x, fifth_percentile_point(network_config(base, x, scenario, caps), cache, threads)))

    n = np.array([r[0] for r in rows])
    raw = np.array([r[1]["rate_bps"] for r in rows])
    lo = np.array([r[1]["ci_lo"] for r in rows])
    hi = np.array([r[1]["ci_hi"] for r in rows])
    return ExternalityCurve(scenario, n, raw / normalization_bps, lo / normalization_bps,
                            hi / normalization_bps, raw, float(normalization_bps),
                            {"seed": base.seed, "slots": base.slots, "drops": base.drops,
                             "points": [{"n": x, **pt} for x, pt in rows]})


def fit_slope(curve: ExternalityCurve, n_min: float) -> float:
    """Least-squares slope of h over the grid points with n >= n_min."""
    mask = curve.n >= n_min - 1e-12
    if mask.sum() < 2:
        raise ValueError(f"need at least two grid points with n >= {n_min}")
    return float(np.polyfit(curve.n[mask], curve.h[mask], 1)[0])


# operating points used by the duopoly game: scenario -> lower end of the linear region
SLOPE_REGIONS = {
    OpenResourceScenario.NO_OPEN_RESOURCES: 0.25,
    OpenResourceScenario.OPEN_BS_DEPLOYMENT: 0.35,
    OpenResourceScenario.OPEN_SPECTRUM: 0.45,
}
