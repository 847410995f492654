"""CSV tables built from simulation results.

Every table is a pure function of the result JSON, so regenerating from the
same files gives byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

from .engine import OTHERS, SimMetrics

TABLES = ("residency", "delay", "normalized", "prediction", "mq_levels")


def load_result(path) -> SimMetrics:
    return SimMetrics.from_dict(json.loads(Path(path).read_text()))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _state_columns(results: Sequence[tuple[str, SimMetrics]]) -> list[str]:
    cols: list[str] = []
    for _, m in results:
        for name in m.state_names:
            if name not in cols:
                cols.append(name)
    return cols + [OTHERS]


def residency_table(results: Sequence[tuple[str, SimMetrics]]) -> str:
    """Fraction of rank-time spent in each power state, one row per run."""
    cols = _state_columns(results)
    rows = []
    for name, m in results:
        fr = m.residency_fractions()
        rows.append([name, m.policy, m.arch] + [fr.get(c, 0.0) for c in cols])
    return _csv(["run", "policy", "arch"] + cols, rows)


def delay_table(results: Sequence[tuple[str, SimMetrics]]) -> str:
    rows = []
    for name, m in results:
        d = m.delay
        rows.append([name, m.policy, m.arch, m.exec_time, d["resync"], d["migration"], d["remap"],
                     d["total"], d["total"] / m.exec_time])
    return _csv(["run", "policy", "arch", "exec_time", "resync", "migration", "remap", "total",
                 "total_fraction"], rows)


def _baseline_for(m: SimMetrics, results: Sequence[tuple[str, SimMetrics]]) -> SimMetrics | None:
    for _, b in results:
        if b.policy == "base" and b.arch == m.arch and b.trace_cycles == m.trace_cycles:
            return b
    return None


def normalized_table(results: Sequence[tuple[str, SimMetrics]]) -> str:
    """Raw and BASE-normalized energy, execution time and ED^2.  A run is
    normalized by its own stored values, else by a BASE run in the same set."""
    rows = []
    for name, m in results:
        norm = m.normalized
        if norm is None:
            b = _baseline_for(m, results)
            if b is not None:
                norm = {"energy": m.energy["total"] / b.energy["total"],
                        "exec_time": m.exec_time / b.exec_time, "ed2": m.ed2 / b.ed2}
        norm = norm or {}
        rows.append([name, m.policy, m.arch, m.params.get("delay_budget_fraction"),
                     m.energy["total"], m.exec_time, m.ed2,
                     norm.get("energy"), norm.get("exec_time"), norm.get("ed2")])
    return _csv(["run", "policy", "arch", "delay_budget", "energy", "exec_time", "ed2",
                 "norm_energy", "norm_exec_time", "norm_ed2"], rows)


def prediction_table(results: Sequence[tuple[str, SimMetrics]]) -> str:
    rows = []
    for name, m in results:
        for s in m.slots:
            rows.append([name, m.policy, s["slot"], int(s["complete"]), s["prediction_error"],
                         sum(s["idle_periods"]), sum(s["resync_delay"])])
    return _csv(["run", "policy", "slot", "complete", "prediction_error", "idle_periods",
                 "resync_delay"], rows)


def mq_table(results: Sequence[tuple[str, SimMetrics]]) -> str:
    rows = []
    for name, m in results:
        for q, mean in enumerate(m.mq_levels):
            rows.append([name, m.policy, q, mean])
    return _csv(["run", "policy", "queue", "mean_counter"], rows)


BUILDERS = {
    "residency": residency_table,
    "delay": delay_table,
    "normalized": normalized_table,
    "prediction": prediction_table,
    "mq_levels": mq_table,
}


def write_reports(results: Sequence[tuple[str, SimMetrics]], outdir,
                  tables: Sequence[str] = TABLES) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in tables:
        path = outdir / f"{t}.csv"
        path.write_text(BUILDERS[t](results))
        paths.append(path)
    return paths
