"""Trace-driven DRAM rank power-management simulator with hotness-aware page
placement and adaptive power-down timeouts."""

from .arch import (
    ArchSpecError, DramArchSpec, PowerStateSpec, break_even_threshold, load_arch_spec, resync_cycles,
)
from .demotion import (
    DemotionConfig, DemotionError, Solution, break_even_config, evaluate, exhaustive_config,
    greedy_config, idle_energy, objective_value, total_delay, total_energy,
)
from .engine import (
    POLICIES, SimMetrics, SimParams, SimulationError, compute_ed2, full_system_energy, run_simulation,
)
from .idlehist import IdleHistogram, SparseHistogram
from .mq import MqStructure, mq_level_report
from .placement import (
    MigrationCost, MigrationGraph, MigrationSchedule, Move, Placement, RemapTable,
    build_migration_graph, eulerian_schedule, group_pages, interleave_map, match_groups_to_ranks,
    remap_lookup,
)
from .predictor import predict_after_migration, predict_carry_forward, prediction_error
from .trace import (
    MemoryAccess, SyntheticTraceParams, TraceFormatError, generate_synthetic_trace, parse_trace,
    trace_stats, write_trace,
)

__version__ = "0.1.0"
