"""Energy-efficient sleep/transmit design for NOMA backscatter networks."""

__version__ = "0.1.0"

from .model import (Allocation, ChannelRealization, Evaluation, SystemParams, check_feasibility,
                    dbm_to_watts, evaluate, harvested_energy, per_user_rates, sum_rate, total_energy,
                    watts_to_dbm)
from .channel import Geometry, SeedSpec, default_geometry, sample_realization
from .optimizer import (Mode, SolveResult, SolverConfig, dinkelbach_solve, hot_bounds, htt_bounds,
                        optimal_beta, solve_hot, solve_htt, solve_htt_saturating)
from .baselines import BaselineKind, solve_baseline, solve_fixed_power, solve_no_sleep, solve_oma
from .oracle import GridSpec, grid_search, reduction_gap
