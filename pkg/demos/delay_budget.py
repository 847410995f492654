"""
Sweeping the delay budget
=========================

The budget caps how much resynchronization stall each rank may predict per
slot.  Tight budgets keep ranks in shallow states; loose ones allow
self-refresh at the price of longer execution.
"""

from ramzzz import SimParams, compute_ed2, load_arch_spec, run_simulation
from ramzzz.trace import SyntheticTraceParams, generate_synthetic_trace

T = 10**6
spec = load_arch_spec("DDR3")
trace = generate_synthetic_trace(SyntheticTraceParams(
    total_cycles=40 * T, num_pages=256, access_rate=1e-4, seed=2))
common = dict(ranks=8, capacity_pages=32, slot_cycles=T, duration_cycles=40 * T)
base = run_simulation(trace, spec, SimParams(policy="base", **common))

print(f"{'budget':>7}{'energy':>9}{'time':>9}{'ED2':>9}{'stall %':>9}")
for budget in (0.0, 0.01, 0.02, 0.04, 0.08, 0.16):
    m = run_simulation(trace, spec, SimParams(policy="ramzzz", delay_budget_fraction=budget, **common))
    n = compute_ed2(m, base)
    stall = 100 * m.delay["resync"] / m.exec_time
    print(f"{budget:>7.2f}{n['energy']:>9.3f}{n['exec_time']:>9.3f}{n['ed2']:>9.3f}{stall:>9.2f}")
