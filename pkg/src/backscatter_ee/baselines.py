"""Comparison schemes: fixed source power, no sleep phase, and TDMA (OMA).

Fixed-power and no-sleep reuse the proposed solver's Dinkelbach loop with
one mode branch restricted or removed, so their feasible sets are subsets of
the proposed one.

OMA splits the active phase into K equal sub-slots.  BN k reflects only in
its own sub-slot and pays its circuit power only there; it harvests over the
sleep phase, the other K-1 sub-slots and the unreflected share of its own
sub-slot.  The largest causal reflection is then
``beta_k = clip(K / tau_a - c_k / P_s, 0, 1)``, which in effective power reads
``beta_k P_s = clip(K P~ - c_k, 0, P_s)``.  The same kappa argument as for
NOMA puts kappa at max(1, P~/P_max), but the rate is a sum of K logs, so the
inner 1-D problem of each mode is solved by golden-section search.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .model import (CAUSALITY_RTOL, LN2, Allocation, ChannelRealization, Evaluation, SystemParams,
                    _bn_params, _constraint_masks, total_energy)
from .optimizer import (Candidate, Mode, Reduced, SolveResult, SolverConfig, dinkelbach, finish)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
# golden-section stopping width, relative to P_max
GOLDEN_RTOL = 1e-10
# each step shrinks the bracket by 0.618, so 400 steps span any double range
GOLDEN_MAX_STEPS = 400


class BaselineKind(str, Enum):
    FIXED_POWER = "FixedPower"
    NO_SLEEP = "NoSleep"
    OMA_TDMA = "OmaTdma"


def golden_section_max(fn, lo: float, hi: float, tol: float) -> float:
    """Maximizer of a unimodal ``fn`` on [lo, hi], to within ``tol``.

    ``tol`` is floored at a few ulps of the bracket ends so the loop stops
    even when the requested width is below float spacing.  The returned point is the best of the final bracket's probes and its
    ends, so a maximum sitting on a bound is returned exactly.
    """
    tol = max(tol, 8.0 * np.finfo(float).eps * max(abs(lo), abs(hi)))
    if hi - lo <= tol:
        return hi if fn(hi) >= fn(lo) else lo
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    steps = 0
    while b - a > tol and steps < GOLDEN_MAX_STEPS:
        steps += 1
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fn(d)
        else:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = fn(c)
    candidates = [(fn(lo), lo), (fc, c), (fd, d), (fn(hi), hi)]
    # ties go to the earliest entry, i.e. the lower end
    return max(candidates, key=lambda t: t[0])[1]


# -- fixed power / no sleep -----------------------------------------------------

def solve_fixed_power(params: SystemParams, channels: ChannelRealization,
                      config: SolverConfig = SolverConfig()) -> SolveResult:
    """P_s pinned to P_max; time split and reflections still optimized."""
    red = Reduced(params, channels)
    htt = red.htt_saturating if config.saturation else red.htt
    cand, trace, iterations, converged = dinkelbach([red.hot_at_budget, htt], config)
    return finish(params, channels, cand, trace, iterations, converged)


def solve_no_sleep(params: SystemParams, channels: ChannelRealization,
                   config: SolverConfig = SolverConfig()) -> SolveResult:
    """tau_s = 0: only the HoT branch."""
    red = Reduced(params, channels)
    cand, trace, iterations, converged = dinkelbach([red.hot], config)
    return finish(params, channels, cand, trace, iterations, converged)


# -- OMA (TDMA) ----------------------------------------------------------------

def oma_beta(params: SystemParams, channels: ChannelRealization, source_power, active_fraction):
    k = channels.num_bns
    bound = k / np.asarray(active_fraction, dtype=float)[..., None] \
        - channels.circuit_demand / np.asarray(source_power, dtype=float)[..., None]
    beta = np.clip(bound, 0.0, 1.0)
    return beta if beta.ndim > 1 else beta.reshape(-1)


def oma_harvested_energy(params: SystemParams, channels: ChannelRealization, alloc: Allocation):
    k = channels.num_bns
    _, eta = _bn_params(params, channels)
    incident = eta * np.asarray(alloc.source_power)[..., None] * channels.source_bn_gain
    tau_a = np.asarray(alloc.active_fraction)[..., None]
    e_sleep = incident * np.asarray(alloc.sleep_fraction)[..., None]
    e_active = incident * tau_a * ((k - 1) + (1.0 - alloc.reflection)) / k
    return e_sleep, e_active


def oma_rates(params: SystemParams, channels: ChannelRealization, alloc: Allocation):
    k = channels.num_bns
    s = alloc.reflection * np.asarray(alloc.source_power)[..., None] * channels.snr_gain
    return np.asarray(alloc.active_fraction)[..., None] / k * np.log1p(s) / LN2


def evaluate_oma(params: SystemParams, channels: ChannelRealization, alloc: Allocation) -> Evaluation:
    """Like :func:`model.evaluate` with TDMA rates and per-sub-slot circuit demand."""
    k = channels.num_bns
    e_sleep, e_active = oma_harvested_energy(params, channels, alloc)
    rates = oma_rates(params, channels, alloc)
    r_sum = rates.sum(axis=-1)
    e_total = total_energy(params, alloc)
    masks = _constraint_masks(params, channels, alloc, e_sleep, e_active)
    p_tc, _ = _bn_params(params, channels)
    demand = p_tc * np.asarray(alloc.active_fraction)[..., None] / k
    supply = e_sleep + e_active
    masks["C5"] = np.all(demand <= supply + CAUSALITY_RTOL * np.maximum(demand, supply), axis=-1)
    feasible = np.logical_and.reduce(list(masks.values()))
    with np.errstate(divide="ignore", invalid="ignore"):
        ee = np.where(feasible & (e_total > 0), r_sum / np.where(e_total > 0, e_total, 1.0), 0.0)
    if np.ndim(feasible) == 0:
        feasible, ee, r_sum, e_total = bool(feasible), float(ee), float(r_sum), float(e_total)
    return Evaluation(rates, r_sum, e_total, ee, e_sleep, e_active, feasible)


class _OmaReduced:
    def __init__(self, params: SystemParams, channels: ChannelRealization):
        self.k = channels.num_bns
        self.gamma = [float(g) for g in channels.snr_gain]
        self.demand = [float(c) for c in channels.circuit_demand]
        self.c_max = max(self.demand)
        self.p_max = params.p_max
        self.xi = params.pa_efficiency
        self.p_sc = params.source_circuit_power
        self.p_rc = params.receiver_circuit_power
        self.tol = GOLDEN_RTOL * params.p_max

    def rate(self, p_eff: float, kappa: float) -> float:
        p_s = p_eff / kappa
        total = 0.0
        for g, c in zip(self.gamma, self.demand):
            x = min(max(self.k * p_eff - c, 0.0), p_s)
            total += math.log1p(g * x)
        return total / (LN2 * self.k)

    def energy(self, p_eff: float, kappa: float) -> float:
        return p_eff / self.xi + kappa * self.p_sc + self.p_rc

    def _candidate(self, mode, p_eff):
        kappa = 1.0 if mode is Mode.HOT else p_eff / self.p_max
        return Candidate(mode, p_eff, kappa, self.rate(p_eff, kappa), self.energy(p_eff, kappa))

    def hot(self, alpha: float):
        lo = self.c_max / self.k
        if lo > self.p_max:
            return None
        p = golden_section_max(lambda x: self.rate(x, 1.0) - alpha * self.energy(x, 1.0),
                               lo, self.p_max, self.tol)
        return self._candidate(Mode.HOT, p)

    def htt(self, alpha: float):
        lo = max(self.p_max, self.c_max / self.k)
        hi = max(lo, (self.p_max + self.c_max) / self.k)

        def objective(x):
            kappa = x / self.p_max
            return self.rate(x, kappa) - alpha * self.energy(x, kappa)

        return self._candidate(Mode.HTT, golden_section_max(objective, lo, hi, self.tol))


def recover_oma_allocation(params, channels, cand: Candidate) -> Allocation:
    if cand.mode is Mode.HOT:
        p_s, tau_a = cand.effective_power, 1.0
    else:
        p_s, tau_a = params.p_max, params.p_max / cand.effective_power
    return Allocation(p_s, 1.0 - tau_a, tau_a, oma_beta(params, channels, p_s, tau_a))


def solve_oma(params: SystemParams, channels: ChannelRealization,
              config: SolverConfig = SolverConfig()) -> SolveResult:
    """EE-optimal TDMA schedule (equal sub-slots) by Dinkelbach iteration."""
    red = _OmaReduced(params, channels)
    cand, trace, iterations, converged = dinkelbach([red.hot, red.htt], config)
    return finish(params, channels, cand, trace, iterations, converged,
                  alloc_fn=recover_oma_allocation, evaluate_fn=evaluate_oma)


SOLVERS = {
    BaselineKind.FIXED_POWER: solve_fixed_power,
    BaselineKind.NO_SLEEP: solve_no_sleep,
    BaselineKind.OMA_TDMA: solve_oma,
}


def solve_baseline(kind, params: SystemParams, channels: ChannelRealization,
                   config: SolverConfig = SolverConfig()) -> SolveResult:
    return SOLVERS[BaselineKind(kind)](params, channels, config)
