"""
How many low-power states are worth having?
===========================================

The DDR3 chain is cut down to its first k states and RAMZzz is rerun.  A
solver that may leave any state unused cannot do worse with more of them.
"""

from ramzzz import SimParams, load_arch_spec, run_simulation
from ramzzz.trace import SyntheticTraceParams, generate_synthetic_trace

T = 10**6
spec = load_arch_spec("DDR3")
trace = generate_synthetic_trace(SyntheticTraceParams(
    total_cycles=60 * T, num_pages=256, access_rate=1e-4, seed=1))
common = dict(ranks=8, capacity_pages=32, slot_cycles=T, duration_cycles=60 * T)
base = run_simulation(trace, spec, SimParams(policy="base", **common))

for k in range(1, spec.M + 1):
    sub = spec.restrict(k)
    m = run_simulation(trace, sub, SimParams(policy="ramzzz", **common))
    deepest = sub.states[-1].name
    print(f"{k} states (down to {deepest:<13}) normalized ED2 {m.ed2 / base.ed2:.3f}")
