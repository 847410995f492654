"""Command-line front end: ``simulate``, ``gen-trace``, ``solve-demotion``, ``report``.

Every option can also come from a JSON file given with ``--config``; keys are
the option names in either kebab or snake case, and flags override the file.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .arch import ArchSpecError, load_arch_spec
from .demotion import DemotionError, exhaustive_config, greedy_config
from .engine import POLICIES, SimParams, SimulationError, compute_ed2, run_simulation
from .idlehist import histogram_from_csv
from .report import load_result, write_reports
from .trace import (
    SyntheticTraceParams, TraceFormatError, generate_synthetic_trace, parse_trace, trace_stats,
    write_trace,
)

OUTPUT_ENV = "RAMZZZ_OUTPUT_DIR"
_SUFFIX = {"": 1, "k": 10**3, "m": 10**6, "g": 10**9}


class UsageError(Exception):
    pass


def parse_cycles(text) -> int:
    """Cycle counts: plain integers, ``1e8`` or ``100M`` style."""
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([kKmMgG]?)\s*", str(text))
        if not m:
            raise argparse.ArgumentTypeError(f"not a cycle count: {text!r}")
        try:
            value = float(m.group(1)) * _SUFFIX[m.group(2).lower()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a cycle count: {text!r}") from None
    if not math.isfinite(value) or value < 0 or value != int(value):
        raise argparse.ArgumentTypeError(f"not a whole non-negative cycle count: {text!r}")
    return int(value)


def _csv_list(text) -> list[str]:
    if isinstance(text, list):
        return [str(x) for x in text]
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _float_list(text) -> list[float]:
    return [float(x) for x in _csv_list(text)]


# option name -> (converter, default); shared by flags and config files
SIM_OPTIONS = {
    "arch": (_csv_list, ["DDR3"]),
    "policy": (_csv_list, ["base", "ramzzz"]),
    "trace": (str, None),
    "rzsd_state": (str, None),
    "ranks": (int, 8),
    "capacity": (int, 32),
    "slot": (parse_cycles, 100_000_000),
    "epoch": (int, 10),
    "delay_budget": (_float_list, [0.04]),
    "budget_scope": (str, "rank"),
    "objective": (str, "ed2"),
    "service_cycles": (int, 200),
    "duration": (parse_cycles, None),
    "migration_cycles": (parse_cycles, 2048 * 4),
    "migration_energy": (float, 2048.0),
    "serial_migration": (bool, False),
    "remap_cycles": (int, 4),
    "commit_penalty": (parse_cycles, 0),
    "exponential_search": (bool, False),
    "initial_timeouts": (str, "disabled"),
    "cpu_ghz": (float, None),
    "output_dir": (str, None),
    "jobs": (int, 1),
    "dump_histograms": (bool, False),
    "dump_schedules": (bool, False),
    "seed": (int, 0),
    # synthetic trace when no --trace is given
    "cycles": (parse_cycles, None),
    "pages": (int, None),
    "hot_fraction": (float, 0.1),
    "hot_share": (float, 0.9),
    "rate": (float, 0.001),
    "phase_length": (parse_cycles, None),
    "write_fraction": (float, 0.3),
}

GEN_OPTIONS = {k: SIM_OPTIONS[k] for k in
               ("cycles", "pages", "hot_fraction", "hot_share", "rate", "phase_length",
                "write_fraction", "seed")}
GEN_OPTIONS["out"] = (str, None)


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_options(p: argparse.ArgumentParser, options: dict, helps: dict) -> None:
    for name, (conv, default) in options.items():
        if conv is bool:
            p.add_argument(_flag(name), action="store_const", const=True, default=None,
                           help=helps.get(name))
        else:
            p.add_argument(_flag(name), type=str, default=None, metavar=name.upper(),
                           help=(helps.get(name, "") + f" (default: {default})").strip())


def _resolve(args: argparse.Namespace, options: dict) -> dict:
    """Merge defaults < config file < command line, converting every value."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        for k, v in raw.items():
            key = k.replace("-", "_")
            if key not in options:
                raise UsageError(f"unknown config key {k!r}")
            cfg[key] = v
    out = {}
    for name, (conv, default) in options.items():
        value = getattr(args, name, None)
        if value is None:
            value = cfg.get(name)
        if value is None:
            out[name] = default
            continue
        try:
            out[name] = bool(value) if conv is bool else conv(value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{_flag(name)}: {exc}") from None
    return out


def _output_dir(opts: dict) -> Path:
    return Path(opts.get("output_dir") or os.environ.get(OUTPUT_ENV) or "ramzzz-results")


def _synthetic(opts: dict) -> SyntheticTraceParams:
    if opts["cycles"] is None or opts["pages"] is None:
        raise UsageError("a synthetic trace needs --cycles and --pages")
    return SyntheticTraceParams(
        total_cycles=opts["cycles"], num_pages=opts["pages"], hot_fraction=opts["hot_fraction"],
        hot_share=opts["hot_share"], access_rate=opts["rate"], phase_length=opts["phase_length"],
        write_fraction=opts["write_fraction"], seed=opts["seed"],
    )


def _run_one(job):
    trace, spec, params = job
    return run_simulation(trace, spec, params)


def _label(arch: str, policy: str, rzsd_state: str | None, budget: float, many_budgets: bool) -> str:
    name = f"{arch.lower()}_{policy}"
    if policy == "rzsd":
        name += f"-{rzsd_state.lower()}"
    if many_budgets:
        name += f"_b{budget:g}"
    return name


def cmd_simulate(args) -> int:
    opts = _resolve(args, SIM_OPTIONS)
    policies = opts["policy"]
    for pol in policies:
        if pol not in POLICIES:
            raise UsageError(f"unknown policy {pol!r}; choose from {', '.join(POLICIES)}")
    if "rzsd" in policies and not opts["rzsd_state"]:
        raise UsageError("--policy rzsd needs --rzsd-state")
    if opts["objective"] not in ("energy", "ed2"):
        raise UsageError("--objective must be energy or ed2")

    if opts["trace"]:
        trace = parse_trace(opts["trace"])
        duration = opts["duration"]
    else:
        tp = _synthetic(opts)
        trace = generate_synthetic_trace(tp)
        duration = opts["duration"] or tp.total_cycles

    specs = [load_arch_spec(a, opts["cpu_ghz"]) for a in opts["arch"]]
    if opts["rzsd_state"]:
        for spec in specs:
            spec.index(opts["rzsd_state"])  # unknown state -> ArchSpecError

    base_params = SimParams(
        ranks=opts["ranks"], capacity_pages=opts["capacity"], slot_cycles=opts["slot"],
        slots_per_epoch=opts["epoch"], budget_scope=opts["budget_scope"], objective=opts["objective"],
        service_cycles=opts["service_cycles"], duration_cycles=duration,
        migration_page_cycles=opts["migration_cycles"], migration_page_energy=opts["migration_energy"],
        concurrent_migration=not opts["serial_migration"], remap_cycles=opts["remap_cycles"],
        commit_penalty_cycles=opts["commit_penalty"], exponential_search=opts["exponential_search"],
        initial_timeouts=opts["initial_timeouts"], record_histograms=opts["dump_histograms"],
        rzsd_state=opts["rzsd_state"],
    )
    budgets = opts["delay_budget"]
    many = len(budgets) > 1
    jobs, labels = [], []
    for spec in specs:
        # BASE does not depend on the budget; it is always run for normalization
        labels.append((spec.name, "base", None))
        jobs.append((trace, spec, replace(base_params, policy="base")))
        for b in budgets:
            for pol in policies:
                if pol == "base":
                    continue
                labels.append((spec.name, pol, b))
                jobs.append((trace, spec, replace(base_params, policy=pol, delay_budget_fraction=b)))

    if opts["jobs"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts["jobs"]) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    outdir = _output_dir(opts)
    outdir.mkdir(parents=True, exist_ok=True)
    named = []
    baselines = {}
    for (arch, pol, b), m in zip(labels, results):
        if pol == "base":
            baselines[arch] = m
    ok = True
    for (arch, pol, b), m in zip(labels, results):
        if pol == "base" and "base" not in policies:
            continue
        compute_ed2(m, baselines[arch])
        name = _label(arch, pol, opts["rzsd_state"], b if b is not None else budgets[0], many and pol != "base")
        problems = m.check()
        if problems:
            ok = False
            for msg in problems:
                print(f"{name}: invariant violated: {msg}", file=sys.stderr)
        if not opts["dump_schedules"]:
            m.migration["schedules"] = [{k: v for k, v in s.items() if k != "csv"}
                                        for s in m.migration["schedules"]]
        (outdir / f"{name}.json").write_text(m.to_json())
        if opts["dump_schedules"]:
            for s in m.migration["schedules"]:
                (outdir / f"{name}_schedule_slot{s['slot']}.csv").write_text(s["csv"])
        if opts["dump_histograms"] and m.histograms:
            _dump_histograms(outdir / f"{name}_histograms.csv", m)
        named.append((name, m))

    write_reports(named, outdir, tables=("normalized", "residency", "delay"))
    print(f"{'run':<32} {'energy':>8} {'time':>8} {'ED2':>8}")
    for name, m in named:
        n = m.normalized
        print(f"{name:<32} {n['energy']:>8.4f} {n['exec_time']:>8.4f} {n['ed2']:>8.4f}")
    print(f"results written to {outdir}")
    return 0 if ok else 1


def _dump_histograms(path: Path, m) -> None:
    lines = ["slot,rank,kind,length,count"]
    for slot, ranks in enumerate(m.histograms):
        for r, h in enumerate(ranks):
            for kind in ("actual", "predicted"):
                for length, count in h[kind] or []:
                    c = int(count) if float(count).is_integer() else repr(float(count))
                    lines.append(f"{slot},{r},{kind},{length},{c}")
    path.write_text("\n".join(lines) + "\n")


def cmd_gen_trace(args) -> int:
    opts = _resolve(args, GEN_OPTIONS)
    if not opts["out"]:
        raise UsageError("gen-trace needs --out")
    tp = _synthetic(opts)
    trace = generate_synthetic_trace(tp)
    write_trace(trace, opts["out"])
    if trace:
        stats = trace_stats(trace, window=min(500_000_000, tp.total_cycles), duration=tp.total_cycles)
        stats["accesses"] = len(trace)
        print(json.dumps(stats, sort_keys=True))
    else:
        print(json.dumps({"accesses": 0}))
    return 0


SOLVE_OPTIONS = {
    "hist": (str, None),
    "arch": (str, "DDR3"),
    "slot": (parse_cycles, None),
    "budget": (float, math.inf),
    "budget_fraction": (float, None),
    "objective": (str, "ed2"),
    "exhaustive": (bool, False),
    "exponential_search": (bool, False),
    "cpu_ghz": (float, None),
}


def cmd_solve_demotion(args) -> int:
    opts = _resolve(args, SOLVE_OPTIONS)
    if not opts["hist"] or opts["slot"] is None:
        raise UsageError("solve-demotion needs --hist and --slot")
    T = opts["slot"]
    spec = load_arch_spec(opts["arch"], opts["cpu_ghz"])
    hist = histogram_from_csv(Path(opts["hist"]).read_text(), T)
    budget = opts["budget"] if opts["budget_fraction"] is None else opts["budget_fraction"] * T
    if opts["exhaustive"]:
        sol = exhaustive_config(hist, spec, budget, opts["objective"], base_delay=T)
    else:
        sol = greedy_config(hist, spec, budget, opts["objective"], base_delay=T,
                            exponential=opts["exponential_search"])
    out = {
        "states": [s.name for s in spec.low_power_states],
        "timeouts": sol.config.to_list(),
        "energy": sol.energy,
        "delay": sol.delay,
        "objective": sol.objective,
    }
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    if not args.results:
        raise UsageError("report needs at least one result JSON file")
    named = [(Path(p).stem, load_result(p)) for p in args.results]
    outdir = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or "ramzzz-results")
    for path in write_reports(named, outdir):
        print(path)
    return 0


HELPS = {
    "arch": "built-in name (DDR3, DDR2, LPDDR2) or JSON spec file; comma list for several",
    "policy": f"comma list of {', '.join(POLICIES)}",
    "trace": "trace file (cycle,page,op; .gz accepted); otherwise a synthetic trace is generated",
    "rzsd_state": "the single low-power state used by the rzsd policy",
    "slot": "slot length in CPU cycles, e.g. 1e6 or 100M",
    "epoch": "slots per migration epoch",
    "delay_budget": "fraction of each slot a rank may stall; comma list sweeps",
    "budget_scope": "rank: every rank gets the budget; system: ranks share it",
    "duration": "simulated length in cycles (default: last access + 1)",
    "serial_migration": "move pages one at a time instead of in segments",
    "initial_timeouts": "first-slot timeouts before any history: disabled or break-even",
    "output_dir": f"where results go (default: ${OUTPUT_ENV} or ./ramzzz-results)",
    "jobs": "parallel worker processes",
    "dump_histograms": "also write per-slot predicted and actual histograms",
    "dump_schedules": "also write every migration schedule as CSV",
    "cycles": "synthetic trace length in cycles",
    "pages": "synthetic footprint in pages",
    "rate": "synthetic accesses per cycle",
    "out": "output trace path (.gz compresses)",
    "hist": "histogram CSV (length,count)",
    "budget": "delay budget in cycles",
    "budget_fraction": "delay budget as a fraction of the slot",
    "exhaustive": "enumerate all configurations instead of the greedy search",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ramzzz", description="DRAM rank power-management simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run policies over a trace and write results")
    p.add_argument("--config", help="JSON file with option values")
    _add_options(p, SIM_OPTIONS, HELPS)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-trace", help="write a synthetic trace")
    p.add_argument("--config", help="JSON file with option values")
    _add_options(p, GEN_OPTIONS, HELPS)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("solve-demotion", help="choose timeouts for one idle histogram")
    p.add_argument("--config", help="JSON file with option values")
    _add_options(p, SOLVE_OPTIONS, HELPS)
    p.set_defaults(func=cmd_solve_demotion)

    p = sub.add_parser("report", help="CSV tables from result JSON files")
    p.add_argument("results", nargs="*")
    p.add_argument("--output-dir", help=HELPS["output_dir"])
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ArchSpecError, DemotionError, SimulationError, TraceFormatError, ValueError, OSError) as exc:
        print(f"ramzzz: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
