"""Poisson deployments on a square (optionally toroidal) region.

Coordinates are in meters, intensities in points per km^2. Operators are
indexed from 0 internally; output files use 1-based operator ids.
"""

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Region:
    side_length: float = 1000.0
    wraparound: bool = True

    def __post_init__(self):
        if not self.side_length > 0:
            raise ValueError(f"side_length must be positive, got {self.side_length}")

    @property
    def area_km2(self) -> float:
        return (self.side_length / 1000.0) ** 2


@dataclass(frozen=True)
class Deployment:
    bs_xy: np.ndarray  # (K, 2)
    bs_op: np.ndarray  # (K,)
    ue_xy: np.ndarray  # (U, 2)
    ue_op: np.ndarray  # (U,)
    region: Region

    @property
    def n_bs(self) -> int:
        return len(self.bs_xy)

    @property
    def n_ue(self) -> int:
        return len(self.ue_xy)


def sample_hppp(intensity: float, region: Region, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on the region; returns an (N, 2) array of points."""
    if intensity < 0:
        raise ValueError(f"intensity must be nonnegative, got {intensity}")
    count = rng.poisson(intensity * region.area_km2)
    return rng.uniform(0.0, region.side_length, size=(count, 2))


def sample_deployment(bs_intensities, ue_intensities, region: Region,
                      rng: np.random.Generator) -> Deployment:
    """Independent BS and UE processes per operator (all BSs sampled first)."""
    bs = [sample_hppp(lam, region, rng) for lam in bs_intensities]
    ue = [sample_hppp(lam, region, rng) for lam in ue_intensities]
    return Deployment(
        bs_xy=np.concatenate(bs) if bs else np.zeros((0, 2)),
        bs_op=np.concatenate([np.full(len(p), i) for i, p in enumerate(bs)]).astype(int),
        ue_xy=np.concatenate(ue) if ue else np.zeros((0, 2)),
        ue_op=np.concatenate([np.full(len(p), i) for i, p in enumerate(ue)]).astype(int),
        region=region,
    )


def displacement(a, b, region: Region) -> np.ndarray:
    """Vector from a to b; minimum-image convention on a torus. Broadcasts."""
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    if region.wraparound:
        L = region.side_length
        d = d - L * np.round(d / L)
    return d


def distance(a, b, region: Region):
    d = displacement(a, b, region)
    return np.hypot(d[..., 0], d[..., 1])


def bearing(a, b, region: Region):
    """Direction of b seen from a, in degrees (-180, 180]."""
    d = displacement(a, b, region)
    return np.degrees(np.arctan2(d[..., 1], d[..., 0]))


def angle_diff(x, y):
    """Absolute difference of two bearings folded into [0, 180]."""
    return np.abs((np.asarray(x) - np.asarray(y) + 180.0) % 360.0 - 180.0)


def angle_from_boresight(source, boresight_target, other, region: Region) -> float:
    """Offset of `other` from the beam source -> boresight_target, in degrees."""
    if distance(source, boresight_target, region) == 0:
        raise GeometryError("boresight target coincides with source")
    return float(angle_diff(bearing(source, other, region),
                            bearing(source, boresight_target, region)))


def pairwise_distance_and_bearing(src_xy, dst_xy, region: Region):
    """(len(src), len(dst)) matrices of distance and bearing src -> dst."""
    d = displacement(src_xy[:, None, :], dst_xy[None, :, :], region)
    return np.hypot(d[..., 0], d[..., 1]), np.degrees(np.arctan2(d[..., 1], d[..., 0]))
