"""Memory-access traces: CSV parsing/serialization, synthetic generation, statistics.

Trace CSV layout (header optional on input, always written on output)::

    cycle,page,op
    0,17,R
    12,3,W

Gzip-compressed files are detected by their magic bytes.
"""

from __future__ import annotations

import gzip
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

HEADER = "cycle,page,op"


class TraceFormatError(ValueError):
    pass


class MemoryAccess(NamedTuple):
    cycle: int
    page: int
    is_write: bool = False


def _open_text(source) -> IO[str]:
    if isinstance(source, (str, Path)):
        raw = Path(source).read_bytes()
        if raw[:2] == b"\x1f\x8b":
            raw = gzip.decompress(raw)
        return io.StringIO(raw.decode("ascii"))
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
        if raw[:2] == b"\x1f\x8b":
            raw = gzip.decompress(raw)
        return io.StringIO(raw.decode("ascii"))
    return source


def iter_trace(source) -> Iterator[MemoryAccess]:
    """Lazily parse a trace; raises on malformed lines or decreasing cycles."""
    stream = _open_text(source)
    last = -1
    for lineno, line in enumerate(stream, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if lineno == 1 and line.replace(" ", "") == HEADER:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise TraceFormatError(f"line {lineno}: expected 3 fields, got {line!r}")
        c, p, op = parts
        if not (c.isdigit() and p.isdigit()):
            raise TraceFormatError(f"line {lineno}: cycle and page must be non-negative integers")
        op = op.upper()
        if op not in ("R", "W"):
            raise TraceFormatError(f"line {lineno}: op must be R or W, got {op!r}")
        cycle = int(c)
        if cycle < last:
            raise TraceFormatError(f"line {lineno}: non-monotone cycle {cycle} after {last}")
        last = cycle
        yield MemoryAccess(cycle, int(p), op == "W")


def parse_trace(source) -> list[MemoryAccess]:
    return list(iter_trace(source))


def write_trace(trace: Iterable[MemoryAccess], dest) -> None:
    """Write CSV; a path ending in ``.gz`` is compressed."""
    lines = [HEADER]
    lines.extend(f"{a.cycle},{a.page},{'W' if a.is_write else 'R'}" for a in trace)
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, Path)):
        path = Path(dest)
        data = text.encode("ascii")
        if path.suffix == ".gz":
            data = gzip.compress(data, mtime=0)
        path.write_bytes(data)
    else:
        dest.write(text)


def serialize_trace(trace: Iterable[MemoryAccess]) -> str:
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class SyntheticTraceParams:
    total_cycles: int
    num_pages: int
    hot_fraction: float = 0.1
    hot_share: float = 0.9
    access_rate: float = 0.001
    phase_length: int | None = None
    write_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.total_cycles <= 0:
            raise ValueError("total_cycles must be positive")
        if self.num_pages <= 0:
            raise ValueError("num_pages must be positive")
        if not 0 < self.hot_fraction < 1:
            raise ValueError("hot_fraction must lie strictly between 0 and 1")
        if not 0 <= self.hot_share <= 1:
            raise ValueError("hot_share must lie in [0, 1]")
        if self.access_rate < 0:
            raise ValueError("access_rate must be non-negative")
        if self.phase_length is not None and self.phase_length <= 0:
            raise ValueError("phase_length must be positive")
        if not 0 <= self.write_fraction <= 1:
            raise ValueError("write_fraction must lie in [0, 1]")

    @property
    def num_hot(self) -> int:
        return min(self.num_pages, max(1, round(self.hot_fraction * self.num_pages)))


def page_rates(params: SyntheticTraceParams, hot_pages: np.ndarray) -> np.ndarray:
    """Per-page access rate (accesses per cycle) for a given hot set."""
    n, h = params.num_pages, len(hot_pages)
    rates = np.full(n, params.access_rate * (1 - params.hot_share) / max(n - h, 1))
    rates[hot_pages] = params.access_rate * params.hot_share / h
    if n == h:
        rates[:] = params.access_rate / n
    return rates


def hot_set(params: SyntheticTraceParams, phase: int = 0) -> np.ndarray:
    """Hot pages of a phase; drawn from the seeded stream so traces stay reproducible."""
    rng = np.random.default_rng([params.seed, 1, phase])
    return np.sort(rng.choice(params.num_pages, size=params.num_hot, replace=False))


def generate_synthetic_trace(params: SyntheticTraceParams) -> list[MemoryAccess]:
    """Superposition of independent per-page Poisson processes.

    Hot pages (``hot_fraction`` of the footprint) receive ``hot_share`` of the
    total rate; the hot set is redrawn every ``phase_length`` cycles.
    """
    if params.access_rate == 0:
        return []
    rng = np.random.default_rng([params.seed, 0])
    phase_len = params.phase_length or params.total_cycles
    cycles_out, pages_out = [], []
    for phase, start in enumerate(range(0, params.total_cycles, phase_len)):
        end = min(start + phase_len, params.total_cycles)
        span = end - start
        rates = page_rates(params, hot_set(params, phase))
        count = rng.poisson(params.access_rate * span)
        if count == 0:
            continue
        cycles = np.sort(rng.integers(start, end, size=count))
        pages = rng.choice(params.num_pages, size=count, p=rates / rates.sum())
        cycles_out.append(cycles)
        pages_out.append(pages)
    if not cycles_out:
        return []
    cycles = np.concatenate(cycles_out)
    pages = np.concatenate(pages_out)
    writes = rng.random(len(cycles)) < params.write_fraction
    return [MemoryAccess(int(c), int(p), bool(w)) for c, p, w in zip(cycles, pages, writes)]


def trace_stats(trace: list[MemoryAccess], window: int = 500_000_000,
                duration: int | None = None) -> dict:
    """Footprint and per-window access statistics (mean, stdev/mean)."""
    if not trace:
        raise ValueError("trace_stats needs a non-empty trace")
    if window <= 0:
        raise ValueError("window must be positive")
    span = duration if duration is not None else trace[-1].cycle + 1
    windows = max(1, math.ceil(span / window))
    counts = np.bincount([a.cycle // window for a in trace], minlength=windows)[:windows]
    mean = float(counts.mean())
    return {
        "footprint_pages": len({a.page for a in trace}),
        "windows": windows,
        "mean_accesses_per_window": mean,
        "stdev_over_mean": float(counts.std() / mean) if mean > 0 else 0.0,
    }
