"""Brute-force check of the solver: score a (P_s, tau_a) lattice directly.

For every lattice point the reflection coefficients are set to the largest
value energy causality allows (the rate grows with each beta_k and the energy
does not depend on beta), then the unreduced throughput/energy formulas in
:mod:`backscatter_ee.model` score the point.  Nothing here uses the
effective-power reduction the solver is built on.

Both axes use ``j = 1..n`` nodes, so an ``n``-point lattice is a subset of
the ``2n``-point one and refining never lowers the best EE.

At low power budgets the best active fraction can sit many decades below 1,
where no fixed lattice of a few hundred nodes is dense enough.
``zoom_levels > 0`` re-grids a window of ``zoom_halfwidth`` cells around the
incumbent with a fresh lattice of the same size, keeping the best point seen
over all levels.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .model import Allocation, ChannelRealization, SystemParams, evaluate
from .optimizer import SolverConfig, dinkelbach_solve

SPACINGS = ("linear", "geometric")


@dataclass(frozen=True)
class GridSpec:
    power_points: int = 500
    time_points: int = 500
    # lower end of the power axis; None means 0 (linear) or p_max * power_floor (geometric)
    power_low: Optional[float] = None
    time_min: float = 1e-4
    spacing: str = "linear"
    # geometric spacing only: smallest power as a fraction of P_max
    power_floor: float = 1e-6
    zoom_levels: int = 0
    zoom_halfwidth: int = 50

    @classmethod
    def certification(cls, points: int = 500) -> "GridSpec":
        """Geometric lattice down to tau_a = 1e-10 with six zoom rounds."""
        return cls(points, points, time_min=1e-10, spacing="geometric", zoom_levels=6)

    def __post_init__(self):
        if self.power_points < 2 or self.time_points < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not 0 < self.time_min < 1:
            raise ValueError("time_min must lie in (0, 1)")
        if self.spacing not in SPACINGS:
            raise ValueError(f"spacing must be one of {SPACINGS}")
        if not 0 < self.power_floor < 1:
            raise ValueError("power_floor must lie in (0, 1)")
        if self.zoom_levels < 0 or self.zoom_halfwidth < 1:
            raise ValueError("zoom_levels must be >= 0 and zoom_halfwidth >= 1")

    def refined(self, factor: int = 2) -> "GridSpec":
        return replace(self, power_points=self.power_points * factor,
                       time_points=self.time_points * factor)

    def power_axis(self, p_max: float) -> np.ndarray:
        n = self.power_points
        j = np.arange(1, n + 1)
        if self.spacing == "linear":
            lo = 0.0 if self.power_low is None else self.power_low
            if lo >= p_max:
                raise ValueError("power range is empty")
            return lo + (p_max - lo) * j / n
        lo = p_max * self.power_floor if self.power_low is None else self.power_low
        if not 0 < lo < p_max:
            raise ValueError("geometric power axis needs 0 < low < p_max")
        return p_max * (lo / p_max) ** ((n - j) / n)

    def time_axis(self) -> np.ndarray:
        n = self.time_points
        j = np.arange(1, n + 1)
        if self.spacing == "linear":
            return self.time_min + (1.0 - self.time_min) * j / n
        return self.time_min ** ((n - j) / n)


def causality_beta(params: SystemParams, channels: ChannelRealization, source_power, active_fraction):
    """Largest beta in [0, 1] with P_tc tau_a <= eta P_s |h|^2 (tau_s + (1 - beta) tau_a)."""
    from .model import _bn_params

    p_tc, eta = _bn_params(params, channels)
    p = np.asarray(source_power, dtype=float)[..., None]
    tau_a = np.asarray(active_fraction, dtype=float)[..., None]
    tau_s = 1.0 - tau_a
    with np.errstate(divide="ignore"):
        bound = (tau_s + tau_a) / tau_a - p_tc * tau_a / (eta * p * channels.source_bn_gain * tau_a)
    return np.clip(bound, 0.0, 1.0)


def _score(params, channels, power, tau_a, beta_fn, evaluate_fn):
    p2, t2 = np.meshgrid(power, tau_a, indexing="ij")
    beta = beta_fn(params, channels, p2, t2)
    ev = evaluate_fn(params, channels, Allocation(p2, 1.0 - t2, t2, beta))
    ee = np.where(ev.feasible, ev.energy_efficiency, 0.0)
    i, j = np.unravel_index(int(np.argmax(ee)), ee.shape)
    best = Allocation(float(p2[i, j]), float(1.0 - t2[i, j]), float(t2[i, j]), beta[i, j].copy())
    return best, float(ee[i, j]), int(i), int(j)


def _window(axis, i, half, n):
    lo = axis[max(i - half, 0)]
    hi = axis[min(i + half, len(axis) - 1)]
    # keep the incumbent as the top node so a zoom level can only tie or improve
    return np.unique(np.concatenate([np.linspace(lo, hi, n), [axis[i]]]))


def grid_search(params: SystemParams, channels: ChannelRealization, grid: GridSpec = GridSpec(),
                beta_fn=causality_beta, evaluate_fn=evaluate):
    """Best lattice point: ``(Allocation, EE)``; EE is 0 when no point is feasible.

    Ties resolve to the lowest linear index (power-major order).  ``beta_fn``
    and ``evaluate_fn`` swap in another access scheme's reflection rule and
    scoring (the TDMA baseline uses this).
    """
    power = grid.power_axis(params.p_max)
    tau_a = grid.time_axis()
    best, best_ee, i, j = _score(params, channels, power, tau_a, beta_fn, evaluate_fn)
    for _ in range(grid.zoom_levels):
        if best_ee <= 0:
            break
        power = _window(power, i, grid.zoom_halfwidth, grid.power_points)
        tau_a = _window(tau_a, j, grid.zoom_halfwidth, grid.time_points)
        cand, cand_ee, i, j = _score(params, channels, power, tau_a, beta_fn, evaluate_fn)
        if cand_ee > best_ee:
            best, best_ee = cand, cand_ee
    return best, best_ee


def reduction_gap(params: SystemParams, channels: ChannelRealization, grid: GridSpec = GridSpec(),
                  config: SolverConfig = SolverConfig()) -> float:
    """(grid EE - solver EE) / grid EE, floored at 0."""
    _, grid_ee = grid_search(params, channels, grid)
    solver_ee = dinkelbach_solve(params, channels, config).energy_efficiency
    return max(0.0, (grid_ee - solver_ee) / max(grid_ee, np.finfo(float).tiny))


CERT_POWERS_DBM = (10.0, 20.0, 30.0, 40.0)
GAP_FIELDS = ("instance", "num_bns", "p_max_dbm", "solver_ee", "grid_ee", "coarse_grid_ee",
              "relative_gap", "resolution")


@dataclass(frozen=True)
class Certification:
    """Outcome of :func:`certify`; ``rows`` follow ``GAP_FIELDS``."""

    rows: tuple
    within_tolerance: float
    resolution_bound: float
    max_excess: float
    tolerance: float
    required_fraction: float

    @property
    def passed(self) -> bool:
        return (self.within_tolerance >= self.required_fraction
                and self.max_excess <= self.resolution_bound)


def certify(instances: int = 200, k_max: int = 3, points: int = 500, master_seed: int = 7,
            tolerance: float = 0.01, required_fraction: float = 0.95,
            config: SolverConfig = SolverConfig()) -> Certification:
    """Compare the solver against the grid on random Table-I instances.

    Instance ``i`` draws K from 1..k_max and P_max from ``CERT_POWERS_DBM``
    using its own seed, then a channel with the default geometry.  The grid
    resolution bound is the largest relative EE gain from the ``points/2``
    lattice to the ``points`` one; the solver may exceed the fine grid by at
    most that much.
    """
    from .channel import SeedSpec, default_geometry, sample_realization

    if instances < 1 or k_max < 1 or points < 4:
        raise ValueError("need instances >= 1, k_max >= 1 and points >= 4")
    fine = GridSpec.certification(points)
    coarse = GridSpec.certification(points // 2)
    rows = []
    for i in range(instances):
        rng = np.random.default_rng(np.random.SeedSequence([master_seed, i, 1]))
        k = int(rng.integers(1, k_max + 1))
        p_dbm = float(CERT_POWERS_DBM[int(rng.integers(len(CERT_POWERS_DBM)))])
        params = SystemParams.table_one(num_bns=k, p_max_dbm=p_dbm)
        channels = sample_realization(params, default_geometry(k), SeedSpec(master_seed, i))
        solver_ee = dinkelbach_solve(params, channels, config).energy_efficiency
        _, grid_ee = grid_search(params, channels, fine)
        _, coarse_ee = grid_search(params, channels, coarse)
        scale = max(grid_ee, np.finfo(float).tiny)
        rows.append((i, k, p_dbm, solver_ee, grid_ee, coarse_ee, (solver_ee - grid_ee) / scale,
                     (grid_ee - coarse_ee) / scale))
    gaps = np.array([r[6] for r in rows])
    return Certification(
        rows=tuple(rows),
        within_tolerance=float(np.mean(np.abs(gaps) <= tolerance)),
        resolution_bound=float(max(r[7] for r in rows)),
        max_excess=float(gaps.max()),
        tolerance=tolerance,
        required_fraction=required_fraction,
    )
