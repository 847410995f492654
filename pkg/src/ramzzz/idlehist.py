"""Per-rank idle-period histograms over a slot of T cycles.

Short periods (length <= ceil(sqrt(T))) are counted in a dense array; longer
ones are stored as raw lengths.  Within one slot at most sqrt(T) periods can be
longer than sqrt(T), so storage stays at 2*ceil(sqrt(T)) integers.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class SparseHistogram:
    """Immutable (length, count) view; counts may be fractional for predictions."""

    T: int
    lengths: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_pairs(cls, T: int, pairs) -> "SparseHistogram":
        agg: dict[int, float] = {}
        for length, count in pairs:
            length = int(length)
            if length <= 0 or count == 0:
                continue
            agg[length] = agg.get(length, 0) + count
        keys = sorted(k for k, v in agg.items() if v != 0)
        return cls(T, np.array(keys, dtype=np.int64),
                   np.array([agg[k] for k in keys], dtype=np.float64))

    @classmethod
    def empty(cls, T: int) -> "SparseHistogram":
        return cls(T, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64))

    def iter_buckets(self) -> Iterator[tuple[int, float]]:
        for length, count in zip(self.lengths.tolist(), self.counts.tolist()):
            yield length, count

    def __len__(self) -> int:
        return len(self.lengths)

    def total_count(self) -> float:
        return float(self.counts.sum())

    def occupied_time(self, g: float = 0) -> float:
        """sum(count * (length + g))."""
        return float(np.dot(self.counts, self.lengths + g))

    def as_dict(self) -> dict[int, float]:
        return dict(self.iter_buckets())

    def __eq__(self, other):
        if not isinstance(other, SparseHistogram):
            return NotImplemented
        return (self.T == other.T and np.array_equal(self.lengths, other.lengths)
                and np.array_equal(self.counts, other.counts))

    __hash__ = None


class IdleHistogram:
    def __init__(self, T: int):
        if T <= 0:
            raise ValueError("slot length T must be positive")
        self.T = int(T)
        self.short_limit = math.isqrt(self.T - 1) + 1 if self.T > 1 else 1  # ceil(sqrt(T))
        self.short_counts = np.zeros(self.short_limit, dtype=np.int64)  # index = length - 1
        self.long_lengths: list[int] = []
        # overflow of long_lengths; never reached by engine-produced slots
        self._spill: Counter = Counter()

    def record_idle(self, length: int) -> None:
        length = int(length)
        if length <= 0:
            raise ValueError(f"idle length must be positive, got {length}")
        if length > self.T:
            raise ValueError(f"idle length {length} exceeds slot length {self.T}")
        if length <= self.short_limit:
            self.short_counts[length - 1] += 1
        elif len(self.long_lengths) < self.short_limit:
            self.long_lengths.append(length)
        else:
            self._spill[length] += 1

    def iter_buckets(self) -> Iterator[tuple[int, int]]:
        """Non-zero (length, count) pairs in ascending length order."""
        for i in np.flatnonzero(self.short_counts).tolist():
            yield i + 1, int(self.short_counts[i])
        longs = Counter(self.long_lengths)
        longs.update(self._spill)
        for length in sorted(longs):
            yield length, longs[length]

    def freeze(self) -> SparseHistogram:
        pairs = list(self.iter_buckets())
        return SparseHistogram(
            self.T,
            np.array([p[0] for p in pairs], dtype=np.int64),
            np.array([p[1] for p in pairs], dtype=np.float64),
        )

    def reset(self) -> None:
        self.short_counts[:] = 0
        self.long_lengths.clear()
        self._spill.clear()

    def total_count(self) -> int:
        return int(self.short_counts.sum()) + len(self.long_lengths) + sum(self._spill.values())

    def total_idle(self) -> int:
        return sum(length * count for length, count in self.iter_buckets())

    def storage_size(self) -> int:
        """Counters plus stored long lengths (spilled entries included)."""
        return self.short_limit + len(self.long_lengths) + len(self._spill)

    def capacity_bytes(self, int_bytes: int = 4) -> int:
        """Footprint of the fixed two-array layout."""
        return 2 * self.short_limit * int_bytes

    @property
    def spilled(self) -> bool:
        return bool(self._spill)


def as_sparse(hist) -> SparseHistogram:
    if isinstance(hist, SparseHistogram):
        return hist
    if isinstance(hist, IdleHistogram):
        return hist.freeze()
    raise TypeError(f"expected a histogram, got {type(hist).__name__}")


def histogram_to_csv(hist) -> str:
    buf = io.StringIO()
    buf.write("length,count\n")
    for length, count in as_sparse(hist).iter_buckets():
        buf.write(f"{length},{_fmt(count)}\n")
    return buf.getvalue()


def histogram_from_csv(text: str, T: int) -> SparseHistogram:
    rows = csv.reader(io.StringIO(text))
    pairs = []
    for lineno, row in enumerate(rows, 1):
        if not row or row[0].startswith("#"):
            continue
        if lineno == 1 and row[0].strip() == "length":
            continue
        if len(row) != 2:
            raise ValueError(f"line {lineno}: expected length,count")
        length, count = int(row[0]), float(row[1])
        if length <= 0 or count < 0:
            raise ValueError(f"line {lineno}: length must be positive and count non-negative")
        if length > T:
            raise ValueError(f"line {lineno}: length {length} exceeds slot length {T}")
        pairs.append((length, count))
    return SparseHistogram.from_pairs(T, pairs)


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))
