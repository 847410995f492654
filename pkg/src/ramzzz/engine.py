"""Trace-driven rank power-state simulator.

Time model
----------
The processor stalls on every delay the power manager causes (waking a rank,
migrating pages, remap lookups), so an access recorded at trace cycle ``c``
reaches the memory at wall cycle ``c + stall`` where ``stall`` is everything
accumulated so far.  Execution time is therefore the trace duration plus the
total stall, and every rank's timeline covers it exactly.

Each rank serves requests FCFS with a fixed latency ``g``.  While idle it walks
down its demotion chain according to the timeouts chosen for the current slot;
an access to a rank in a low-power state pays that state's resynchronization
delay and energy.  Slots close the idle histograms and choose new timeouts;
every ``slots_per_epoch`` slots the pages are regrouped and migrated first.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, replace
from typing import Sequence

from .arch import DramArchSpec
from .demotion import (
    DemotionConfig, break_even_config, exhaustive_config, exhaustive_size, greedy_config,
)
from .idlehist import IdleHistogram, SparseHistogram
from .mq import MqStructure
from .placement import (
    MigrationCost, RemapTable, build_migration_graph, eulerian_schedule, group_pages,
    interleave_map, match_groups_to_ranks, schedule_delay,
)
from .predictor import (
    RankAccessProfile, histogram_l1, predict_after_migration, predict_carry_forward, rescale_histogram,
)
from .trace import MemoryAccess

POLICIES = ("base", "oracle", "ramzzz", "rzsp", "rzsd")
OTHERS = "OTHERS"

__all__ = [
    "POLICIES", "SimParams", "SimMetrics", "SimulationError", "run_simulation", "compute_ed2",
    "full_system_energy", "interleave_map",
]


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimParams:
    ranks: int = 8
    capacity_pages: int = 32
    slot_cycles: int = 100_000_000
    slots_per_epoch: int = 10
    delay_budget_fraction: float = 0.04
    # "rank": every rank may stall for the fraction of each slot; "system": ranks share it evenly
    budget_scope: str = "rank"
    objective: str = "ed2"
    policy: str = "ramzzz"
    rzsd_state: str | None = None
    service_cycles: int = 200
    duration_cycles: int | None = None
    mq_queues: int = 16
    mq_lifetime: int | None = None
    migration_page_cycles: int = 2048 * 4
    migration_page_energy: float = 2 * 1024.0
    concurrent_migration: bool = True
    remap_cycles: int = 4
    mq_access_cycles: int = 0
    commit_penalty_cycles: int = 0
    exponential_search: bool = False
    oracle_exhaustive_limit: int = 200_000
    # ORACLE replays: each pass solves from the histograms the previous pass produced
    oracle_passes: int = 2
    # timeouts for the first slot, before any history exists: "disabled" or "break-even"
    initial_timeouts: str = "disabled"
    # "system": a rank's ED^2 decision also counts the energy the other ranks
    # spend while its stalls hold up the processor; "rank": only its own
    objective_scope: str = "system"
    # measure idle lengths in access-latency steps in the post-migration predictor
    predict_in_access_steps: bool = True
    # scale carried-forward histograms when a migration window shrank the slot they came from
    window_correction: bool = True
    record_histograms: bool = False

    def __post_init__(self):
        if self.slot_cycles <= 0:
            raise SimulationError("slot_cycles must be positive")
        if self.slots_per_epoch <= 0:
            raise SimulationError("slots_per_epoch must be positive")
        if not 0 <= self.delay_budget_fraction < 1:
            raise SimulationError("delay_budget_fraction must lie in [0, 1)")
        if self.ranks <= 0 or self.capacity_pages <= 0:
            raise SimulationError("ranks and capacity_pages must be positive")
        if self.policy not in POLICIES:
            raise SimulationError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        if self.policy == "rzsd" and not self.rzsd_state:
            raise SimulationError("policy rzsd needs rzsd_state (the pre-selected low-power state)")
        if self.objective not in ("energy", "ed2"):
            raise SimulationError(f"unknown objective {self.objective!r}")
        if self.budget_scope not in ("system", "rank"):
            raise SimulationError("budget_scope must be 'system' or 'rank'")
        if self.service_cycles <= 0:
            raise SimulationError("service_cycles must be positive")
        if self.initial_timeouts not in ("disabled", "break-even"):
            raise SimulationError("initial_timeouts must be 'disabled' or 'break-even'")
        if self.objective_scope not in ("system", "rank"):
            raise SimulationError("objective_scope must be 'system' or 'rank'")
        if self.oracle_passes < 1:
            raise SimulationError("oracle_passes must be at least 1")

    @property
    def migrates(self) -> bool:
        return self.policy in ("ramzzz", "rzsd", "oracle")

    @property
    def rank_budget(self) -> float:
        b = self.delay_budget_fraction * self.slot_cycles
        return b / self.ranks if self.budget_scope == "system" else b

    def label(self) -> str:
        return f"rzsd:{self.rzsd_state}" if self.policy == "rzsd" else self.policy


@dataclass
class SimMetrics:
    policy: str
    arch: str
    state_names: list[str]
    params: dict
    trace_cycles: int
    exec_time: int
    energy: dict
    delay: dict
    residency: dict
    ranks: list[dict]
    migration: dict
    slots: list[dict]
    transitions: dict
    mq_levels: list
    ed2: float
    normalized: dict | None = None
    histograms: list | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "SimMetrics":
        return cls(**data)

    def residency_fractions(self) -> dict[str, float]:
        total = sum(self.residency.values())
        return {k: v / total for k, v in self.residency.items()} if total else {}

    def check(self, rel_tol: float = 1e-9) -> list[str]:
        """Accounting invariants; returns a description of every violation."""
        problems = []
        total = 0.0
        for r, rank in enumerate(self.ranks):
            if sum(rank["residency"].values()) != self.exec_time:
                problems.append(f"rank {r}: residency does not add up to the execution time")
            total += rank["energy"]["total"]
        if abs(total - self.energy["total"]) > rel_tol * max(1.0, abs(total)):
            problems.append("rank energies do not add up to the total")
        parts = sum(v for k, v in self.energy.items() if k != "total")
        if abs(parts - self.energy["total"]) > rel_tol * max(1.0, abs(parts)):
            problems.append("energy components do not add up to the total")
        if sum(self.residency.values()) != self.exec_time * len(self.ranks):
            problems.append("aggregate residency does not cover every rank")
        order = {n: i for i, n in enumerate(self.state_names)}
        for key in self.transitions:
            a, b = (order[x] for x in key.split("->"))
            if not (b > a or b == 0 < a):
                problems.append(f"illegal transition {key}")
        if self.delay["total"] != self.delay["resync"] + self.delay["migration"] + self.delay["remap"]:
            problems.append("delay components do not add up to the total")
        if self.exec_time < self.trace_cycles + self.delay["total"]:
            problems.append("execution time shorter than trace plus stalls")
        return problems

    def mean_prediction_error(self, skip_slots: int = 0) -> float | None:
        errs = [s["prediction_error"] for s in self.slots
                if s["complete"] and s["slot"] >= skip_slots and s["prediction_error"] is not None]
        return sum(errs) / len(errs) if errs else None


class _Rank:
    __slots__ = ("busy_until", "acct", "state", "active", "hist", "idle_res", "service",
                 "resync", "migration", "resync_energy", "migration_energy", "wakeups",
                 "slot_resync", "energy_mark", "slot_blocked", "prev_blocked", "remap")

    def __init__(self, M: int, T: int):
        self.busy_until = 0
        self.acct = 0
        self.state = 0
        self.active: list[tuple[int, int]] = []
        self.hist = IdleHistogram(T)
        self.idle_res = [0] * (M + 1)
        self.service = 0
        self.resync = 0
        self.migration = 0
        self.remap = 0
        self.resync_energy = 0.0
        self.migration_energy = 0.0
        self.wakeups = 0
        self.slot_resync = 0
        self.energy_mark = (0.0, 0.0)
        # cycles of the current / previous slot spent migrating instead of serving
        self.slot_blocked = 0
        self.prev_blocked = 0

    def set_config(self, cfg: DemotionConfig) -> None:
        # entering S_j happens once the idle time exceeds its timeout; for integer
        # idle lengths floor() of the timeout is equivalent
        self.active = [(int(math.floor(t)), j) for j, t in enumerate(cfg.timeouts, 1)
                       if math.isfinite(t)]


class _Simulator:
    def __init__(self, spec: DramArchSpec, params: SimParams,
                 oracle_hists: Sequence[Sequence[SparseHistogram]] | None = None):
        self.spec = spec
        self.p = params
        self.T = params.slot_cycles
        self.g = params.service_cycles
        self.M = spec.M
        self.powers = [s.normalized_power for s in spec.states]
        self.resync = [0] + spec.resync_delays()
        self.resync_e = [0.0] + spec.resync_energies()
        self.R = params.ranks
        self.C = params.capacity_pages
        self.footprint = self.R * self.C
        self.ranks = [_Rank(self.M, self.T) for _ in range(self.R)]
        self.mq = MqStructure(params.mq_queues, params.mq_lifetime or self.T)
        self.remap = RemapTable(self.R, self.C)
        self.cost = MigrationCost(params.migration_page_cycles, params.migration_page_energy,
                                  params.concurrent_migration)
        self.oracle_hists = oracle_hists
        self.demotes = params.policy != "base"
        self.migrates = params.migrates
        self.lookup_cycles = params.remap_cycles + params.mq_access_cycles if params.migrates else 0

        self.stall = 0
        self.delay_resync = 0
        self.delay_migration = 0
        self.delay_remap = 0
        self.slot = 0
        self.slot_start = 0
        self.next_boundary = self.T
        self.slot_counts: Counter = Counter()
        self.seen: set[int] = set()
        self.transitions: Counter = Counter()
        self.illegal_transitions = 0
        self.migration_log = {"epochs": 0, "pages_moved": 0, "segments": 0,
                              "delay_serialized": 0, "schedules": []}
        self.predicted: list[SparseHistogram | None] = [None] * self.R
        self.last_actual: list[SparseHistogram] = [SparseHistogram.empty(self.T)] * self.R
        self.slot_log: list[dict] = []
        self.hist_log: list[list[dict]] = []
        self.configs: list[DemotionConfig] = [DemotionConfig.disabled(self.M)] * self.R
        self.predicted_obj: list[float | None] = [None] * self.R
        self.slot_energy: list[tuple[float, float]] = []
        self._configure_initial()

    # -- power-state machinery -------------------------------------------------

    def _advance(self, rk: _Rank, until: int) -> None:
        """Account idle residency of ``rk`` up to ``until``, demoting on the way."""
        start = rk.acct if rk.acct > rk.busy_until else rk.busy_until
        if until <= start:
            return
        idle_start = rk.busy_until
        state = rk.state
        pos = start
        res = rk.idle_res
        for d, j in rk.active:
            if j <= state:
                continue
            tj = idle_start + d
            if tj >= until:
                break
            if tj > pos:
                res[state] += tj - pos
                pos = tj
            self.transitions[(state, j)] += 1
            state = j
        res[state] += until - pos
        rk.acct = until
        rk.state = state

    def _close_idle(self, rk: _Rank, at: int) -> None:
        """Bring an idle rank's accounting to ``at`` and record the idle piece in this slot."""
        self._advance(rk, at)
        piece = at - max(rk.busy_until, self.slot_start)
        if piece > 0:
            rk.hist.record_idle(piece)

    def _wake(self, rk: _Rank) -> int:
        k = rk.state
        if not k:
            return 0
        r = self.resync[k]
        rk.resync += r
        rk.slot_resync += r
        rk.resync_energy += self.resync_e[k]
        rk.wakeups += 1
        self.transitions[(k, 0)] += 1
        rk.state = 0
        return r

    def _energy(self, rk: _Rank) -> tuple[float, float]:
        """(total, idle-period part) energy of ``rk`` so far."""
        idle = sum(c * p for c, p in zip(rk.idle_res, self.powers)) + rk.resync_energy
        p_act = self.powers[0]
        return idle + (rk.service + rk.migration + rk.remap) * p_act + rk.migration_energy, idle

    # -- main loop -------------------------------------------------------------

    def _catch_up(self, w: int) -> int:
        """Process slot boundaries up to wall time ``w``; returns the (shifted) wall time."""
        while w >= self.next_boundary:
            before = self.stall
            self._boundary(self.next_boundary)
            w += self.stall - before
        return w

    def access(self, a: MemoryAccess) -> None:
        page = a.page
        if not 0 <= page < self.footprint:
            raise SimulationError(f"page {page} outside the configured footprint of {self.footprint} pages")
        w = self._catch_up(a.cycle + self.stall)
        if page in self.seen:
            r = self.remap.rank_of(page)
        else:
            r = self.remap.place(page)
            self.seen.add(page)
        rk = self.ranks[r]
        self.mq.on_access(page, w)
        self.slot_counts[page] += 1

        g = self.g
        if w < rk.busy_until:
            rk.busy_until += g
            rk.service += g
            return
        self._close_idle(rk, w)
        # the remap lookup delays a request only when it finds the queue empty
        extra = self.lookup_cycles
        wake = self._wake(rk)
        self.stall += extra + wake
        self.delay_remap += extra
        self.delay_resync += wake
        rk.remap += extra
        rk.busy_until = w + extra + wake + g
        rk.service += g
        rk.acct = rk.busy_until

    def _boundary(self, tau: int) -> None:
        for rk in self.ranks:
            if tau >= rk.busy_until:
                self._close_idle(rk, tau)
        self._end_slot(complete=True)
        self.slot += 1
        self.slot_start = tau
        self.next_boundary = tau + self.T
        self.mq.expire(tau)
        counts, self.slot_counts = self.slot_counts, Counter()
        moved = None
        if self.migrates and self.slot % self.p.slots_per_epoch == 0:
            moved = self._migrate(tau)
        self._configure(counts, moved)

    def _end_slot(self, complete: bool) -> None:
        actual = [rk.hist.freeze() for rk in self.ranks]
        self.slot_energy = []
        for rk in self.ranks:
            now = self._energy(rk)
            self.slot_energy.append((now[0] - rk.energy_mark[0], now[1] - rk.energy_mark[1]))
            rk.energy_mark = now
        diff = total = 0.0
        per_rank = []
        for r, rk in enumerate(self.ranks):
            pred = self.predicted[r]
            if pred is None:
                per_rank.append(None)
            else:
                d, t = histogram_l1(pred, actual[r])
                diff += d
                total += t
                per_rank.append(d / t if t else None)
        have_pred = any(p is not None for p in self.predicted)
        self.slot_log.append({
            "slot": self.slot,
            "complete": complete,
            "prediction_error": (diff / total if total else None) if have_pred else None,
            "prediction_error_per_rank": per_rank,
            "idle_periods": [int(a.total_count()) for a in actual],
            "resync_delay": [rk.slot_resync for rk in self.ranks],
            "predicted_objective": list(self.predicted_obj),
            "timeouts": [c.to_list() for c in self.configs],
            "max_histogram_storage": max(rk.hist.storage_size() for rk in self.ranks),
            "histogram_spilled": any(rk.hist.spilled for rk in self.ranks),
        })
        if self.p.record_histograms:
            self.hist_log.append([
                {"actual": [[int(l), c] for l, c in a.iter_buckets()],
                 "predicted": None if p is None else [[int(l), c] for l, c in p.iter_buckets()]}
                for a, p in zip(actual, self.predicted)
            ])
        self.last_actual = actual
        for rk in self.ranks:
            rk.hist.reset()
            rk.slot_resync = 0
            rk.prev_blocked, rk.slot_blocked = rk.slot_blocked, 0

    # -- migration -------------------------------------------------------------

    def _migrate(self, tau: int):
        prev = self.remap.placement()
        groups = group_pages(self.mq, self.R, self.C)
        mapping = match_groups_to_ranks(prev, groups)
        graph = build_migration_graph(prev, groups, mapping)
        self.migration_log["epochs"] += 1
        if not graph.edges:
            return None
        schedule = eulerian_schedule(graph, pack=self.p.concurrent_migration)
        old_sets = [set(s) for s in prev.pages_of_rank]
        self.remap.apply_moves(schedule.moves)
        new_sets = [set(s) for s in self.remap.placement().pages_of_rank]
        delay = schedule_delay(schedule, self.cost) + self.p.commit_penalty_cycles

        involved = sorted({m.src for m in schedule.moves} | {m.dst for m in schedule.moves})
        start = max([tau] + [self.ranks[r].busy_until for r in involved])
        wakes = {}
        for r in involved:
            rk = self.ranks[r]
            if start >= rk.busy_until:
                self._close_idle(rk, start)
            wakes[r] = self._wake(rk)
        wake = max(wakes.values())
        end = start + wake + delay
        moves_per_rank = Counter()
        for m in schedule.moves:
            moves_per_rank[m.src] += 1
            moves_per_rank[m.dst] += 1
        for r in involved:
            rk = self.ranks[r]
            rk.migration += end - start - wakes[r]
            rk.migration_energy += moves_per_rank[r] * self.cost.page_energy / 2
            rk.busy_until = end
            rk.acct = end
            rk.slot_blocked += end - start
        self.stall += wake + delay
        self.delay_resync += wake
        self.delay_migration += delay
        log = self.migration_log
        log["pages_moved"] += len(schedule.moves)
        log["segments"] += len(schedule.segments)
        log["delay_serialized"] += len(schedule.moves) * self.cost.page_cycles
        log["schedules"].append({"slot": self.slot, "moves": len(schedule.moves),
                                 "segments": len(schedule.segments), "delay": delay,
                                 "csv": schedule.to_csv()})
        return old_sets, new_sets

    # -- demotion configuration ------------------------------------------------

    def _solve(self, hist: SparseHistogram, r: int, exact_ok: bool = False):
        p = self.p
        offset = stall_power = 0.0
        if p.objective_scope == "system" and self.slot_energy:
            # energy outside this rank's idle periods, taken from the slot just ended
            offset = sum(e for e, _ in self.slot_energy) - self.slot_energy[r][1]
            stall_power = (sum(e for e, _ in self.slot_energy) - self.slot_energy[r][0]) / self.T
        kw = dict(budget=p.rank_budget, objective=p.objective, base_delay=self.T,
                  energy_offset=offset, stall_power=stall_power)
        if exact_ok and self.M <= 3 and exhaustive_size(self.M, len(hist) + 1) <= p.oracle_exhaustive_limit:
            return exhaustive_config(hist, self.spec, **kw)
        return greedy_config(hist, self.spec, exponential=p.exponential_search and not exact_ok, **kw)

    def _configure_initial(self) -> None:
        if not self.demotes:
            cfgs = [DemotionConfig.disabled(self.M)] * self.R
        elif self.oracle_hists is not None:
            self._configure(Counter(), None)
            return
        elif self.p.initial_timeouts == "break-even":
            # no history yet: time out at each state's break-even idle length
            cfgs = [break_even_config(self.spec)] * self.R
        else:
            cfgs = [DemotionConfig.disabled(self.M)] * self.R
        for rk, cfg in zip(self.ranks, cfgs):
            rk.set_config(cfg)
        self.configs = list(cfgs)

    def _configure(self, counts: Counter, moved) -> None:
        if not self.demotes:
            return
        T, g = self.T, self.g
        for r, rk in enumerate(self.ranks):
            if self.oracle_hists is not None:
                hist = self._oracle_hist(r)
                sol = self._solve(hist, r, exact_ok=True)
                self.predicted[r] = hist
            else:
                prev = self.last_actual[r]
                # time left for serving and idling once a migration window is taken out
                free_prev = T - min(rk.prev_blocked, T - 1)
                free_now = T - min(rk.slot_blocked, T - 1)
                if moved is not None and moved[0][r] != moved[1][r]:
                    old_sets, new_sets = moved
                    q_old = RankAccessProfile.from_counts([counts[x] for x in old_sets[r]], g, T).Q
                    q_new = RankAccessProfile.from_counts([counts[x] for x in new_sets[r]], g, T).Q
                    unit = g if self.p.predict_in_access_steps else 1.0
                    hist = predict_after_migration(prev, q_old, q_new, g, length_unit=unit, target=free_now)
                elif free_prev != free_now and self.p.window_correction:
                    hist = rescale_histogram(prev, free_now / free_prev)
                else:
                    hist = predict_carry_forward(prev)
                self.predicted[r] = hist
                sol = self._solve(hist, r)
            self.configs[r] = sol.config
            self.predicted_obj[r] = sol.objective
            rk.set_config(sol.config)

    def _oracle_hist(self, r: int) -> SparseHistogram:
        if self.slot < len(self.oracle_hists):
            return self.oracle_hists[self.slot][r]
        return predict_carry_forward(self.last_actual[r])

    # -- wrap-up ---------------------------------------------------------------

    def finish(self, duration: int) -> SimMetrics:
        while self.next_boundary < duration + self.stall:
            self._boundary(self.next_boundary)
        exec_time = max([duration + self.stall] + [rk.busy_until for rk in self.ranks])
        for rk in self.ranks:
            if exec_time >= rk.busy_until:
                self._close_idle(rk, exec_time)
        self._end_slot(complete=exec_time - self.slot_start == self.T)
        return self._metrics(duration, exec_time)

    def _metrics(self, duration: int, exec_time: int) -> SimMetrics:
        names = [s.name for s in self.spec.states]
        p_act = self.powers[0]
        per_rank = []
        agg_res = Counter()
        tot = Counter()
        for rk in self.ranks:
            others = rk.service + rk.resync + rk.migration + rk.remap
            residency = {n: rk.idle_res[i] for i, n in enumerate(names)}
            residency[OTHERS] = others
            if sum(residency.values()) != exec_time:
                raise SimulationError("internal error: rank residency does not cover execution time")
            background = sum(rk.idle_res[i] * self.powers[i] for i in range(self.M + 1))
            e = {
                "background": background,
                "service": rk.service * p_act,
                "migration_background": rk.migration * p_act,
                "remap": rk.remap * p_act,
                "resync": rk.resync_energy,
                "migration": rk.migration_energy,
            }
            e["total"] = sum(e.values())
            per_rank.append({
                "residency": residency,
                "energy": e,
                "others": {"service": rk.service, "resync": rk.resync, "migration": rk.migration,
                           "remap": rk.remap},
                "wakeups": rk.wakeups,
            })
            agg_res.update(residency)
            tot.update(e)
        energy = {k: float(tot[k]) for k in
                  ("background", "service", "migration_background", "remap", "resync", "migration", "total")}
        delay = {"resync": self.delay_resync, "migration": self.delay_migration,
                 "remap": self.delay_remap}
        delay["total"] = sum(delay.values())
        transitions = {f"{names[a]}->{names[b]}": n for (a, b), n in sorted(self.transitions.items())}
        params = asdict(self.p)
        return SimMetrics(
            policy=self.p.label(),
            arch=self.spec.name,
            state_names=names,
            params=params,
            trace_cycles=duration,
            exec_time=exec_time,
            energy=energy,
            delay=delay,
            residency={k: agg_res[k] for k in names + [OTHERS]},
            ranks=per_rank,
            migration={k: v for k, v in self.migration_log.items()},
            slots=self.slot_log,
            transitions=transitions,
            mq_levels=self.mq.level_report(),
            ed2=energy["total"] * float(exec_time) ** 2,
            histograms=self.hist_log if self.p.record_histograms else None,
        )


def _duration(trace: Sequence[MemoryAccess], params: SimParams) -> int:
    if params.duration_cycles is not None:
        if trace and trace[-1].cycle >= params.duration_cycles:
            raise SimulationError("trace extends beyond duration_cycles")
        return params.duration_cycles
    return trace[-1].cycle + 1 if trace else params.slot_cycles


def _run(trace, spec, params, oracle_hists=None) -> SimMetrics:
    sim = _Simulator(spec, params, oracle_hists)
    last = -1
    for a in trace:
        if a.cycle < last:
            raise SimulationError("trace cycles must be non-decreasing")
        last = a.cycle
        sim.access(a)
    return sim.finish(_duration(trace, params))


def run_simulation(trace: Sequence[MemoryAccess], spec: DramArchSpec, params: SimParams) -> SimMetrics:
    """Simulate one policy over a trace.  Deterministic for identical inputs."""
    if params.policy == "rzsd":
        spec = spec.only(params.rzsd_state)
    if params.policy != "oracle":
        return _run(trace, spec, params)
    # ORACLE: record each slot's real histograms under RAMZzz, then replay with
    # timeouts solved from them.  Stalls shift the idle periods a little, so
    # later passes start from the histograms of the previous replay.
    run = _run(trace, spec, replace(params, policy="ramzzz", record_histograms=True))
    for i in range(params.oracle_passes):
        hists = [
            [SparseHistogram.from_pairs(params.slot_cycles, rank["actual"]) for rank in slot]
            for slot in run.histograms
        ]
        last = i == params.oracle_passes - 1
        run = _run(trace, spec, params if last else replace(params, record_histograms=True),
                   oracle_hists=hists)
    return run


def compute_ed2(metrics: SimMetrics, baseline: SimMetrics | None) -> dict:
    """Energy, execution time and ED^2 normalized to a BASE run (stored on ``metrics``)."""
    if baseline is None:
        raise SimulationError("a BASE run on the same trace is required for normalization")
    norm = {
        "energy": metrics.energy["total"] / baseline.energy["total"],
        "exec_time": metrics.exec_time / baseline.exec_time,
        "ed2": metrics.ed2 / baseline.ed2,
    }
    metrics.normalized = norm
    return norm


def full_system_energy(metrics: SimMetrics | dict, baseline: SimMetrics | None = None,
                       mem_power_ratio: float = 0.4) -> dict:
    """Whole-system energy and ED^2 relative to BASE, when memory draws
    ``mem_power_ratio`` of the baseline system power and the rest scales with time."""
    if not 0 < mem_power_ratio < 1:
        raise SimulationError("mem_power_ratio must lie strictly between 0 and 1")
    if isinstance(metrics, dict):
        mem, slowdown = metrics["energy"], metrics["exec_time"]
    else:
        norm = compute_ed2(metrics, baseline) if baseline is not None else metrics.normalized
        if norm is None:
            raise SimulationError("a BASE run on the same trace is required for normalization")
        mem, slowdown = norm["energy"], norm["exec_time"]
    energy = mem_power_ratio * mem + (1 - mem_power_ratio) * slowdown
    return {"energy": energy, "ed2": energy * slowdown ** 2}
