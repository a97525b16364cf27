# %% [markdown]
# The closed-form HtT range assumes no BN's reflection saturates at 1.  When
# circuit demands differ by more than P_max that range is empty, although the
# original problem still has feasible points.  The default solver extends the
# range and handles saturated BNs segment by segment.

# %%
import numpy as np

from backscatter_ee import (Mode, SeedSpec, SolverConfig, SystemParams, default_geometry, dinkelbach_solve,
                            grid_search, GridSpec, sample_realization)

literal = SolverConfig(saturation=False)
rows = []
for p_dbm in (20.0, 30.0, 40.0, 50.0):
    params = SystemParams.table_one(num_bns=2, p_max_dbm=p_dbm)
    n_inf = 0
    for i in range(300):
        ch = sample_realization(params, default_geometry(2), SeedSpec(8, i))
        n_inf += dinkelbach_solve(params, ch, literal).mode is Mode.INFEASIBLE
    rows.append((p_dbm, n_inf / 300))

for p_dbm, frac in rows:
    print(f"P_max {p_dbm:.0f} dBm: literal HtT range empty on {frac:.0%} of draws")

# %%
# one such draw, checked against the grid
params = SystemParams.table_one(num_bns=2, p_max_dbm=30.0)
ch = sample_realization(params, default_geometry(2), SeedSpec(8, 0))
print("c_k [W]:", np.round(ch.circuit_demand, 3), "P_max:", params.p_max)
print("literal:", dinkelbach_solve(params, ch, literal).mode)
res = dinkelbach_solve(params, ch)
print(f"extended: {res.mode}, EE {res.energy_efficiency:.6f}, beta {np.round(res.allocation.reflection, 4)}")
print(f"grid:     EE {grid_search(params, ch, GridSpec.certification(300))[1]:.6f}")
