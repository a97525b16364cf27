"""Quasi-static Rayleigh fading with distance path loss and a fixed BN layout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelRealization, SystemParams

# "power": |h|^2 = |h~|^2 d^-n  (n is the usual power-law exponent)
# "amplitude": h = h~ d^-n, i.e. |h|^2 = |h~|^2 d^-2n
PATHLOSS_MODELS = ("power", "amplitude")


@dataclass(frozen=True, eq=False)
class Geometry:
    source_bn_distance: np.ndarray
    bn_receiver_distance: np.ndarray
    source_receiver_distance: float = 40.0

    def __post_init__(self):
        d0 = np.asarray(self.source_bn_distance, dtype=float).reshape(-1)
        d = np.asarray(self.bn_receiver_distance, dtype=float).reshape(-1)
        if d0.shape != d.shape or d0.size == 0:
            raise ValueError("distance lists must be nonempty and of equal length")
        if np.any(d0 <= 0) or np.any(d <= 0) or not self.source_receiver_distance > 0:
            raise ValueError("all distances must be > 0")
        object.__setattr__(self, "source_bn_distance", d0)
        object.__setattr__(self, "bn_receiver_distance", d)
        object.__setattr__(self, "source_receiver_distance", float(self.source_receiver_distance))

    @property
    def num_bns(self) -> int:
        return self.source_bn_distance.size


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    realization_index: int = 0

    def __post_init__(self):
        if self.realization_index < 0:
            raise ValueError("realization_index must be >= 0")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        # keyed on (seed, index): realization i never depends on who drew i-1
        return np.random.default_rng(np.random.SeedSequence([self.master_seed, self.realization_index]))


def default_geometry(num_bns: int, source_receiver_distance: float = 40.0) -> Geometry:
    """BNs evenly spaced on the source-receiver segment between 1/4 and 3/4 of it.

    For the default 40 m segment that is 10 m to 30 m from the source; a single
    BN sits at the midpoint.
    """
    if num_bns < 1:
        raise ValueError("num_bns must be >= 1")
    scale = source_receiver_distance / 40.0
    if num_bns == 1:
        x = np.array([20.0])
    else:
        x = 10.0 + 20.0 * np.arange(num_bns) / (num_bns - 1)
    x = x * scale
    return Geometry(x, source_receiver_distance - x, source_receiver_distance)


def _unit_rayleigh_power(rng: np.random.Generator, k: int) -> np.ndarray:
    """|x|^2 for x ~ CN(0, 1)."""
    while True:
        z = rng.standard_normal((2, k))
        p = 0.5 * (z[0] ** 2 + z[1] ** 2)
        if np.all(p > 0):
            return p


def pathloss(distance, exponent: float, model: str = "power"):
    """Power attenuation d^-n ("power") or d^-2n ("amplitude")."""
    if model == "power":
        return np.asarray(distance, dtype=float) ** (-exponent)
    if model == "amplitude":
        return np.asarray(distance, dtype=float) ** (-2.0 * exponent)
    raise ValueError(f"unknown pathloss model {model!r}, expected one of {PATHLOSS_MODELS}")


def sample_fading(seed: SeedSpec, num_bns: int):
    """Small-scale power gains |h~_k|^2, |g~_k|^2 for one realization."""
    rng = seed.generator()
    return _unit_rayleigh_power(rng, num_bns), _unit_rayleigh_power(rng, num_bns)


def sample_realization(params: SystemParams, geometry: Geometry, seed: SeedSpec,
                       pathloss_model: str = "power") -> ChannelRealization:
    """Draw one channel realization and sort it into SIC order."""
    k = params.num_bns
    if geometry.num_bns != k:
        raise ValueError(f"geometry has {geometry.num_bns} BNs, params expect {k}")
    fh, fg = sample_fading(seed, k)
    n = params.pathloss_exponent
    h2 = fh * pathloss(geometry.source_bn_distance, n, pathloss_model)
    g2 = fg * pathloss(geometry.bn_receiver_distance, n, pathloss_model)
    return ChannelRealization.from_gains(params, h2, g2)
