"""Dinkelbach iteration with closed-form power/time updates.

The joint problem over (P_s, tau_a, beta) is handled in the reduced
variables kappa = 1/tau_a and effective power P~ = kappa * P_s.  With the
reflection coefficients at their energy-causality bound, for a fixed P~ the
objective decreases in kappa, so kappa sits at max(1, P~/P_max).  That
leaves two 1-D concave problems per Dinkelbach step:

* harvest-on-transmit (HoT): kappa = 1, P~ in [max_k c_k, P_max];
* harvest-then-transmit (HtT): P_s = P_max, kappa = P~/P_max, P~ >= P_max.

``c_k = P_tc,k / (eta_k |h_k|^2)`` is the circuit demand of BN k.

The textbook HtT range stops at ``P_max + min_k c_k``, the last point where
no reflection coefficient saturates at 1.  :func:`solve_htt` implements that
range.  :func:`solve_htt_saturating` continues past it up to
``P_max + max_k c_k``, where saturated BNs contribute ``gamma_k P_max``
instead of ``gamma_k (P~ - c_k)``.  The objective stays concave and piecewise
log-affine, so every segment still has a closed-form stationary point.
Without it, any instance with ``max c - min c > P_max`` is declared
infeasible even though a strictly positive EE is attainable.
``SolverConfig.saturation`` selects which HtT range the solver uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .model import LN2, Allocation, ChannelRealization, Evaluation, SystemParams, evaluate

# A log argument below 1 means P~ fell under some BN's circuit demand.
LOG_ARG_RTOL = 1e-9


class Mode(str, Enum):
    HOT = "HoT"
    HTT = "HtT"
    INFEASIBLE = "Infeasible"

    def __str__(self):
        return self.value


class ReductionError(ArithmeticError):
    """The reduced rate expression left its valid domain (a solver bug, not bad input)."""


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-8
    max_iterations: int = 100
    initial_alpha: float = 0.0
    saturation: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.initial_alpha < 0:
            raise ValueError("initial_alpha must be >= 0")


@dataclass(frozen=True, eq=False)
class SolveResult:
    allocation: Allocation
    mode: Mode
    evaluation: Evaluation
    alpha_trace: tuple
    iterations: int
    effective_power: float
    time_scale: float
    converged: bool = True

    @property
    def energy_efficiency(self) -> float:
        return float(self.evaluation.energy_efficiency)

    @property
    def final_alpha(self) -> float:
        return self.alpha_trace[-1] if self.alpha_trace else 0.0


class Candidate(NamedTuple):
    """Best point of one mode at the current alpha, in reduced variables."""

    mode: Mode
    effective_power: float
    time_scale: float
    rate: float  # log2 of the rate argument, i.e. R_sum / tau_a
    energy: float  # E_total / tau_a

    def objective(self, alpha: float) -> float:
        return self.rate - alpha * self.energy


class Reduced:
    """Per-realization quantities shared by every Dinkelbach step.

    Building one costs O(K log K) (a sort for the saturating HtT segments);
    each subproblem solve afterwards is O(K).
    """

    def __init__(self, params: SystemParams, channels: ChannelRealization):
        self.params = params
        self.gamma = np.asarray(channels.snr_gain, dtype=float)
        self.demand = np.asarray(channels.circuit_demand, dtype=float)
        self.mu = float(channels.mu)
        self.gamma_sum = float(self.gamma.sum())
        self.weighted_demand = float(np.dot(self.gamma, self.demand))
        self.c_max = float(self.demand.max())
        self.c_min = float(self.demand.min())
        self.p_max = params.p_max
        self.xi = params.pa_efficiency
        self.p_sc = params.source_circuit_power
        self.p_rc = params.receiver_circuit_power
        # HtT energy per unit P~ once P_s = P_max is fixed
        self.htt_slope = 1.0 / self.xi + self.p_sc / self.p_max

        order = np.argsort(self.demand, kind="stable")
        c_sorted = self.demand[order]
        g_sorted = self.gamma[order]
        self._breaks = c_sorted + self.p_max
        zero = np.zeros(1)
        # segment m: the m BNs with smallest demand are saturated
        g_cum = np.concatenate([zero, np.cumsum(g_sorted)])
        gc_cum = np.concatenate([zero, np.cumsum(g_sorted * c_sorted)])
        self._seg_slope = self.gamma_sum - g_cum
        self._seg_offset = 1.0 + self.p_max * g_cum - (self.weighted_demand - gc_cum)
        self._seg_lo = np.concatenate([[-np.inf], self._breaks])
        self._seg_hi = np.concatenate([self._breaks, [np.inf]])

    # -- reduced objective pieces -------------------------------------------
    def rate_argument(self, effective_power: float, source_power: float) -> float:
        """1 + sum_k gamma_k * min(P_s, P~ - c_k); equals mu + sum(gamma) P~ when nothing saturates."""
        arg = 1.0 + float(np.dot(self.gamma, np.minimum(source_power, effective_power - self.demand)))
        if arg < 1.0 - LOG_ARG_RTOL:
            raise ReductionError(f"rate argument {arg!r} < 1 at P~={effective_power!r}")
        return max(arg, 1.0)

    def rate(self, effective_power: float, time_scale: float) -> float:
        return float(np.log2(self.rate_argument(effective_power, effective_power / time_scale)))

    def energy(self, effective_power: float, time_scale: float) -> float:
        return effective_power / self.xi + time_scale * self.p_sc + self.p_rc

    def candidate(self, mode: Mode, effective_power: float) -> Candidate:
        kappa = 1.0 if mode is Mode.HOT else effective_power / self.p_max
        return Candidate(mode, effective_power, kappa,
                         self.rate(effective_power, kappa), self.energy(effective_power, kappa))

    def _critical_offset(self) -> float:
        # mu / sum(gamma), written to avoid subtracting two large numbers first
        return 1.0 / self.gamma_sum - self.weighted_demand / self.gamma_sum

    # -- bounds -------------------------------------------------------------
    def hot_bounds(self):
        if self.gamma_sum <= 0 or self.c_max > self.p_max:
            return None
        return self.c_max, self.p_max

    def htt_bounds(self):
        lo = max(self.p_max, self.c_max)
        hi = self.p_max + self.c_min
        if self.gamma_sum <= 0 or lo > hi:
            return None
        return lo, hi

    def htt_saturating_bounds(self):
        if self.gamma_sum <= 0:
            return None
        return max(self.p_max, self.c_max), self.p_max + self.c_max

    # -- subproblems ---------------------------------------------------------
    def hot(self, alpha: float) -> Optional[Candidate]:
        bounds = self.hot_bounds()
        if bounds is None:
            return None
        lo, hi = bounds
        if alpha <= 0:
            p = hi
        else:
            critical = self.xi / (alpha * LN2) - self._critical_offset()
            p = min(hi, max(lo, critical))
        return self.candidate(Mode.HOT, p)

    def hot_at_budget(self, alpha: float) -> Optional[Candidate]:
        """HoT restricted to P~ = P_max (the fixed-power baseline)."""
        if self.hot_bounds() is None:
            return None
        return self.candidate(Mode.HOT, self.p_max)

    def htt(self, alpha: float) -> Optional[Candidate]:
        bounds = self.htt_bounds()
        if bounds is None:
            return None
        lo, hi = bounds
        if alpha <= 0:
            p = hi
        else:
            critical = 1.0 / (alpha * LN2 * self.htt_slope) - self._critical_offset()
            p = min(hi, max(lo, critical))
        return self.candidate(Mode.HTT, p)

    def htt_saturating(self, alpha: float) -> Optional[Candidate]:
        bounds = self.htt_saturating_bounds()
        if bounds is None:
            return None
        lo, hi = bounds
        seg_lo = np.maximum(self._seg_lo, lo)
        seg_hi = np.minimum(self._seg_hi, hi)
        valid = seg_lo <= seg_hi
        slope = self._seg_slope
        with np.errstate(divide="ignore", invalid="ignore"):
            if alpha <= 0:
                critical = np.where(slope > 0, np.inf, -np.inf)
            else:
                critical = np.where(slope > 0,
                                    1.0 / (alpha * LN2 * self.htt_slope) - self._seg_offset / slope,
                                    -np.inf)
        p = np.clip(critical, seg_lo, seg_hi)
        arg = np.maximum(self._seg_offset + slope * p, np.finfo(float).tiny)
        value = np.log2(arg) - alpha * self.htt_slope * p
        value = np.where(valid, value, -np.inf)
        best = int(np.argmax(value))
        return self.candidate(Mode.HTT, float(p[best]))

    def objective(self, alpha: float, effective_power: float, time_scale: float) -> float:
        return self.rate(effective_power, time_scale) - alpha * self.energy(effective_power, time_scale)


# -- public closed-form operations ----------------------------------------------

def optimal_beta(params: SystemParams, channels: ChannelRealization, source_power, active_fraction):
    """Largest reflection coefficients allowed by energy causality, clipped to [0, 1]."""
    bound = 1.0 / np.asarray(active_fraction, dtype=float)[..., None] \
        - channels.circuit_demand / np.asarray(source_power, dtype=float)[..., None]
    beta = np.clip(bound, 0.0, 1.0)
    return beta if beta.ndim > 1 else beta.reshape(-1)


def hot_bounds(params: SystemParams, channels: ChannelRealization):
    """(max_k c_k, P_max), or None when no HoT point is feasible."""
    return Reduced(params, channels).hot_bounds()


def htt_bounds(params: SystemParams, channels: ChannelRealization):
    """(max(P_max, max_k c_k), P_max + min_k c_k), or None when empty."""
    return Reduced(params, channels).htt_bounds()


def _as_pair(cand: Optional[Candidate], alpha: float):
    return None if cand is None else (cand.effective_power, cand.objective(alpha))


def solve_hot(alpha: float, params: SystemParams, channels: ChannelRealization):
    """Best effective power without a sleep phase: (P~, objective) or None."""
    return _as_pair(Reduced(params, channels).hot(alpha), alpha)


def solve_htt(alpha: float, params: SystemParams, channels: ChannelRealization):
    """Best effective power with P_s = P_max on the non-saturating range: (P~, objective) or None."""
    return _as_pair(Reduced(params, channels).htt(alpha), alpha)


def solve_htt_saturating(alpha: float, params: SystemParams, channels: ChannelRealization):
    """As :func:`solve_htt`, but over the full range where reflections may saturate."""
    return _as_pair(Reduced(params, channels).htt_saturating(alpha), alpha)


# -- Dinkelbach driver -------------------------------------------------------------

Branch = Callable[[float], Optional[Candidate]]


def infeasible_result(params: SystemParams, channels: ChannelRealization, trace=(), iterations=0) -> SolveResult:
    """Placeholder for an instance with no feasible point: the BNs sleep all slot."""
    alloc = Allocation(0.0, 1.0, 0.0, np.zeros(channels.num_bns))
    return SolveResult(alloc, Mode.INFEASIBLE, evaluate(params, channels, alloc), tuple(trace),
                       iterations, 0.0, np.inf, True)


def dinkelbach(branches: Sequence[Branch], config: SolverConfig):
    """Generic Dinkelbach loop over mode branches.

    Each branch maps alpha to its best candidate (or None when the mode is
    infeasible).  Ties go to the earlier branch.  Returns
    ``(candidate, alpha_trace, iterations, converged)`` with ``candidate``
    None when every branch is infeasible.
    """
    alpha = config.initial_alpha
    trace = []
    best = None
    converged = False
    for _ in range(config.max_iterations):
        trace.append(alpha)
        best = None
        for branch in branches:
            cand = branch(alpha)
            if cand is not None and (best is None or cand.objective(alpha) > best.objective(alpha)):
                best = cand
        if best is None:
            return None, trace, len(trace), True
        if abs(best.objective(alpha)) < config.epsilon:
            converged = True
            break
        alpha = best.rate / best.energy
    return best, trace, len(trace), converged


def recover_allocation(params: SystemParams, channels: ChannelRealization, cand: Candidate) -> Allocation:
    """Map (P~, kappa) back to (P_s, tau_s, tau_a, beta)."""
    if cand.mode is Mode.HOT:
        p_s, tau_a = cand.effective_power, 1.0
    else:
        p_s, tau_a = params.p_max, params.p_max / cand.effective_power
    beta = optimal_beta(params, channels, p_s, tau_a)
    return Allocation(p_s, 1.0 - tau_a, tau_a, beta)


def finish(params, channels, cand, trace, iterations, converged, alloc_fn=recover_allocation,
           evaluate_fn=evaluate) -> SolveResult:
    if cand is None:
        return infeasible_result(params, channels, trace, iterations)
    alloc = alloc_fn(params, channels, cand)
    return SolveResult(alloc, cand.mode, evaluate_fn(params, channels, alloc), tuple(trace), iterations,
                       cand.effective_power, cand.time_scale, converged)


def dinkelbach_solve(params: SystemParams, channels: ChannelRealization,
                     config: SolverConfig = SolverConfig()) -> SolveResult:
    """Maximize EE by Dinkelbach iteration with HoT/HtT mode selection."""
    red = Reduced(params, channels)
    htt = red.htt_saturating if config.saturation else red.htt
    cand, trace, iterations, converged = dinkelbach([red.hot, htt], config)
    return finish(params, channels, cand, trace, iterations, converged)
