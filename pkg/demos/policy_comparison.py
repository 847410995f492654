"""
Comparing power-management policies on a hot/cold workload
==========================================================

Ten percent of the pages receive ninety percent of the accesses.  We run
every policy on the same trace and normalize to BASE, which never leaves ACT.
"""

from ramzzz import SimParams, compute_ed2, load_arch_spec, run_simulation
from ramzzz.trace import SyntheticTraceParams, generate_synthetic_trace

T = 10**6
SLOTS = 60
spec = load_arch_spec("DDR3")
trace = generate_synthetic_trace(SyntheticTraceParams(
    total_cycles=SLOTS * T, num_pages=256, hot_fraction=0.1, hot_share=0.9, access_rate=1e-4, seed=0))
common = dict(ranks=8, capacity_pages=32, slot_cycles=T, slots_per_epoch=10, duration_cycles=SLOTS * T)

base = run_simulation(trace, spec, SimParams(policy="base", **common))

# %%
# The adaptive policies, plus RZ-SD pinned to one self-refresh state
runs = {
    "oracle": SimParams(policy="oracle", **common),
    "ramzzz": SimParams(policy="ramzzz", **common),
    "rzsp": SimParams(policy="rzsp", **common),
    "rzsd:SR_FAST": SimParams(policy="rzsd", rzsd_state="SR_FAST", **common),
}
print(f"{'policy':<14}{'energy':>9}{'time':>9}{'ED2':>9}")
results = {}
for name, params in runs.items():
    m = run_simulation(trace, spec, params)
    n = compute_ed2(m, base)
    results[name] = m
    print(f"{name:<14}{n['energy']:>9.3f}{n['exec_time']:>9.3f}{n['ed2']:>9.3f}")

# %%
# Where the time goes.  Migration packs the cold pages together, so RAMZzz
# spends more rank-time in self-refresh than RZ-SP.
for name in ("ramzzz", "rzsp"):
    frac = results[name].residency_fractions()
    print(name, " ".join(f"{k}={v:.2f}" for k, v in frac.items()))
