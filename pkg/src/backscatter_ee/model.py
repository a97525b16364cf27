"""Network parameters, channel/allocation containers and the direct evaluation
of throughput, energy and energy efficiency for a bistatic NOMA backscatter
slot.

Everything here works in linear units (watts, joules per unit-length slot,
bits/s/Hz).  The allocation containers accept batched values: scalar fields
may be arrays of any shape ``S`` as long as ``reflection`` has shape
``S + (K,)``.  The grid oracle relies on this to score a whole lattice in one
call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

LN2 = np.log(2.0)

# Relative slack used for the energy-causality check (a reflection coefficient
# chosen to make the constraint tight never satisfies it exactly in floating
# point).
CAUSALITY_RTOL = 1e-9
# Slack for the box/time constraints, which are only ever off by rounding.
BOX_RTOL = 1e-12


def dbm_to_watts(x):
    """Convert dBm to watts."""
    w = 10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0)
    return float(w) if w.ndim == 0 else w


def watts_to_dbm(p):
    """Convert watts to dBm."""
    return 10.0 * np.log10(p) + 30.0


def _per_bn(value, k: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(k, float(arr))
    if arr.shape != (k,):
        raise ValueError(f"{name} must be a scalar or have length {k}, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemParams:
    """Static scalars of the network.

    ``bn_circuit_power`` and ``harvest_efficiency`` accept a scalar, which is
    broadcast to every BN.
    """

    num_bns: int
    p_max: float
    noise_power: float
    pa_efficiency: float
    source_circuit_power: float
    receiver_circuit_power: float
    bn_circuit_power: np.ndarray
    harvest_efficiency: np.ndarray
    pathloss_exponent: float

    def __post_init__(self):
        k = self.num_bns
        if int(k) != k or k < 1:
            raise ValueError(f"num_bns must be a positive integer, got {k!r}")
        object.__setattr__(self, "num_bns", int(k))
        object.__setattr__(self, "bn_circuit_power", _per_bn(self.bn_circuit_power, k, "bn_circuit_power"))
        object.__setattr__(self, "harvest_efficiency", _per_bn(self.harvest_efficiency, k, "harvest_efficiency"))
        for name in ("p_max", "noise_power", "pa_efficiency", "source_circuit_power",
                     "receiver_circuit_power", "pathloss_exponent"):
            object.__setattr__(self, name, float(getattr(self, name)))

        if not self.p_max > 0:
            raise ValueError(f"p_max must be > 0, got {self.p_max}")
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be > 0, got {self.noise_power}")
        if not 0 < self.pa_efficiency <= 1:
            raise ValueError(f"pa_efficiency must lie in (0, 1], got {self.pa_efficiency}")
        if self.source_circuit_power < 0 or self.receiver_circuit_power < 0:
            raise ValueError("circuit powers must be >= 0")
        if np.any(self.bn_circuit_power < 0):
            raise ValueError("bn_circuit_power must be >= 0")
        if np.any(self.harvest_efficiency <= 0) or np.any(self.harvest_efficiency > 1):
            raise ValueError("harvest_efficiency must lie in (0, 1]")
        if not self.pathloss_exponent >= 0:
            raise ValueError(f"pathloss_exponent must be >= 0, got {self.pathloss_exponent}")

    @classmethod
    def table_one(cls, num_bns: int = 2, p_max_dbm: float = 30.0, **overrides) -> "SystemParams":
        """Default simulation parameters (powers given here in watts).

        Keyword overrides replace any field, e.g. ``pathloss_exponent=2.5``.
        """
        values = dict(
            num_bns=num_bns,
            p_max=dbm_to_watts(p_max_dbm),
            noise_power=dbm_to_watts(-100.0),
            pa_efficiency=0.9,
            source_circuit_power=dbm_to_watts(20.0),
            receiver_circuit_power=dbm_to_watts(10.0),
            bn_circuit_power=dbm_to_watts(0.0),
            harvest_efficiency=0.6,
            pathloss_exponent=3.0,
        )
        values.update(overrides)
        return cls(**values)

    def replace(self, **changes) -> "SystemParams":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return SystemParams(**values)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Per-BN link gains for one coherence interval, in SIC order.

    Use :meth:`from_gains` to build one; it derives ``snr_gain``,
    ``circuit_demand`` and ``mu`` and sorts BNs by descending
    ``bn_receiver_gain``.
    """

    source_bn_gain: np.ndarray
    bn_receiver_gain: np.ndarray
    snr_gain: np.ndarray
    circuit_demand: np.ndarray
    mu: float
    # original BN index of each sorted entry
    order: np.ndarray = None

    def __post_init__(self):
        if self.order is None:
            object.__setattr__(self, "order", np.arange(len(self.source_bn_gain)))

    @classmethod
    def from_gains(cls, params: SystemParams, source_bn_gain, bn_receiver_gain,
                   sort: bool = True) -> "ChannelRealization":
        h2 = np.asarray(source_bn_gain, dtype=float).reshape(-1)
        g2 = np.asarray(bn_receiver_gain, dtype=float).reshape(-1)
        k = params.num_bns
        if h2.shape != (k,) or g2.shape != (k,):
            raise ValueError(f"expected {k} gains per link, got {h2.shape} and {g2.shape}")
        if np.any(h2 <= 0) or np.any(g2 <= 0):
            raise ValueError("channel gains must be > 0")
        order = np.argsort(-g2, kind="stable") if sort else np.arange(k)
        h2, g2 = h2[order], g2[order]
        # per-BN parameters follow their BN through the sort
        p_tc = params.bn_circuit_power[order]
        eta = params.harvest_efficiency[order]
        snr = h2 * g2 / params.noise_power
        demand = p_tc / (eta * h2)
        mu = 1.0 - float(np.dot(demand, snr))
        for a in (h2, g2, snr, demand, order):
            a.setflags(write=False)
        return cls(h2, g2, snr, demand, mu, order)

    @property
    def num_bns(self) -> int:
        return self.source_bn_gain.shape[0]


def _bn_params(params: SystemParams, channels: ChannelRealization):
    """(P_tc, eta) arranged in the realization's BN order."""
    order = channels.order
    return params.bn_circuit_power[order], params.harvest_efficiency[order]


@dataclass(frozen=True, eq=False)
class Allocation:
    """A candidate decision: source power, sleep/active split and reflections."""

    source_power: np.ndarray | float
    sleep_fraction: np.ndarray | float
    active_fraction: np.ndarray | float
    reflection: np.ndarray

    @classmethod
    def from_active(cls, source_power, active_fraction, reflection) -> "Allocation":
        tau_a = np.asarray(active_fraction, dtype=float)
        return cls(np.asarray(source_power, dtype=float), 1.0 - tau_a, tau_a,
                   np.asarray(reflection, dtype=float))

    def __post_init__(self):
        for name in ("source_power", "sleep_fraction", "active_fraction", "reflection"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))


@dataclass(frozen=True, eq=False)
class Evaluation:
    per_user_rate: np.ndarray
    sum_rate: np.ndarray | float
    total_energy: np.ndarray | float
    energy_efficiency: np.ndarray | float
    harvested_sleep: np.ndarray
    harvested_active: np.ndarray
    feasible: np.ndarray | bool


class Feasibility(NamedTuple):
    feasible: bool
    violations: tuple


def harvested_energy(params: SystemParams, channels: ChannelRealization, alloc: Allocation):
    """Energy each BN harvests in the sleep and active phases."""
    _, eta = _bn_params(params, channels)
    incident = eta * np.asarray(alloc.source_power)[..., None] * channels.source_bn_gain
    e_sleep = incident * np.asarray(alloc.sleep_fraction)[..., None]
    e_active = incident * (1.0 - alloc.reflection) * np.asarray(alloc.active_fraction)[..., None]
    return e_sleep, e_active


def _received_snr(channels, alloc):
    return alloc.reflection * np.asarray(alloc.source_power)[..., None] * channels.snr_gain


def per_user_rates(params: SystemParams, channels: ChannelRealization, alloc: Allocation) -> np.ndarray:
    """SIC rate of every BN; BN k sees interference only from BNs decoded after it."""
    s = _received_snr(channels, alloc)
    # sum over j > k, accumulated from the tail so no large term is subtracted back out
    tail = np.flip(np.cumsum(np.flip(s, axis=-1), axis=-1), axis=-1)
    later = np.zeros_like(tail)
    later[..., :-1] = tail[..., 1:]
    return np.asarray(alloc.active_fraction)[..., None] * np.log1p(s / (later + 1.0)) / LN2


def sum_rate(params: SystemParams, channels: ChannelRealization, alloc: Allocation):
    s = _received_snr(channels, alloc)
    return alloc.active_fraction * np.log1p(s.sum(axis=-1)) / LN2


def total_energy(params: SystemParams, alloc: Allocation):
    """Source transmit energy plus source and receiver circuit energy over one slot."""
    tx = alloc.source_power / params.pa_efficiency + params.source_circuit_power
    return alloc.sleep_fraction * tx + alloc.active_fraction * (tx + params.receiver_circuit_power)


def _constraint_masks(params, channels, alloc, e_sleep=None, e_active=None):
    """Boolean arrays, True where each constraint holds."""
    p = alloc.source_power
    tau_s, tau_a, beta = alloc.sleep_fraction, alloc.active_fraction, alloc.reflection
    if e_sleep is None:
        e_sleep, e_active = harvested_energy(params, channels, alloc)
    p_tc, _ = _bn_params(params, channels)
    demand = p_tc * tau_a[..., None]
    supply = e_sleep + e_active
    slack = CAUSALITY_RTOL * np.maximum(np.abs(demand), np.abs(supply))
    return {
        "C1": (p >= 0) & (p <= params.p_max * (1 + BOX_RTOL)),
        "C2": (tau_s >= -BOX_RTOL) & (tau_a > 0),
        "C3": np.abs(tau_s + tau_a - 1.0) <= BOX_RTOL,
        "C4": np.all((beta >= 0) & (beta <= 1), axis=-1),
        "C5": np.all(demand <= supply + slack, axis=-1),
    }


def check_feasibility(params: SystemParams, channels: ChannelRealization, alloc: Allocation) -> Feasibility:
    """Check C1-C5 for a single allocation and name the violated ones."""
    masks = _constraint_masks(params, channels, alloc)
    violations = tuple(name for name, ok in masks.items() if not bool(np.all(ok)))
    return Feasibility(not violations, violations)


def evaluate(params: SystemParams, channels: ChannelRealization, alloc: Allocation) -> Evaluation:
    """Rates, energy and EE of an allocation.  Infeasible points get EE = 0."""
    e_sleep, e_active = harvested_energy(params, channels, alloc)
    rates = per_user_rates(params, channels, alloc)
    r_sum = sum_rate(params, channels, alloc)
    e_total = total_energy(params, alloc)
    masks = _constraint_masks(params, channels, alloc, e_sleep, e_active)
    feasible = np.logical_and.reduce(list(masks.values()))
    with np.errstate(divide="ignore", invalid="ignore"):
        ee = np.where(feasible & (e_total > 0), r_sum / np.where(e_total > 0, e_total, 1.0), 0.0)
    if np.ndim(feasible) == 0:
        feasible, ee = bool(feasible), float(ee)
        r_sum, e_total = float(r_sum), float(e_total)
    return Evaluation(rates, r_sum, e_total, ee, e_sleep, e_active, feasible)
