"""
How well does the next slot's idle histogram get predicted?
===========================================================

Within an epoch the last slot is carried forward.  At an epoch boundary pages
move, so the histogram is reweighted by each rank's new access mix.  Errors
are L1 distances over log2 length bins divided by the actual period count.
"""

from ramzzz import SimParams, load_arch_spec, run_simulation
from ramzzz.trace import SyntheticTraceParams, generate_synthetic_trace

T = 4 * 10**6
trace = generate_synthetic_trace(SyntheticTraceParams(
    total_cycles=30 * T, num_pages=256, access_rate=1e-3, seed=0))
m = run_simulation(trace, load_arch_spec("DDR3"),
                   SimParams(ranks=8, capacity_pages=32, slot_cycles=T, duration_cycles=30 * T))

for s in m.slots:
    err = s["prediction_error"]
    mark = "  <- epoch start" if s["slot"] % 10 == 0 else ""
    if not s["complete"]:
        # stalls push the last boundary past the trace; this stub slot is not scored
        mark += "  (partial slot)"
    print(f"slot {s['slot']:>2}  error {'-' if err is None else f'{err:.3f}'}{mark}")

print(f"mean over full slots after the first epoch: {m.mean_prediction_error(skip_slots=10):.3f}")
