# %% [markdown]
# How the time split moves as the source budget grows.  At low budgets the
# BNs sleep almost all slot; at high budgets a growing share of realizations
# needs no sleep phase at all.

# %%
from backscatter_ee.harness import builtin_sweeps, run_sweep

spec = builtin_sweeps()["fig2b_time_vs_pmax"].with_(realizations=200)
records = run_sweep(spec)

# %%
print(f"{'K':>2} {'P_max':>6} {'EE':>8} {'tau_s':>7} {'tau_a':>7} {'HoT':>5} {'HtT':>5}")
for r in records:
    print(f"{r.num_bns:>2} {r.value:>6.0f} {r.mean_ee:>8.4f} {r.mean_tau_s:>7.3f} {r.mean_tau_a:>7.3f} "
          f"{r.frac_hot:>5.2f} {r.frac_htt:>5.2f}")

# %% [markdown]
# Note the EE column keeps climbing up to 50 dBm: a bigger budget only adds
# options, so the optimal EE cannot fall with P_max.

# %%
for k in spec.k_values:
    ee = [r.mean_ee for r in records if r.num_bns == k]
    print(k, "monotone:", all(b >= a for a, b in zip(ee, ee[1:])))
