"""Idle-period histogram prediction for the next slot.

Inside an epoch the previous slot's histogram is carried forward.  After page
migrations each bucket is rescaled by how likely an idle period of that length
is under the rank's new page set versus its old one (pages are modeled as
independent Poisson sources), then the histogram is renormalized so the idle
periods plus their closing accesses fill the slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .idlehist import SparseHistogram, as_sparse


def page_access_prob(f: float, g: float, T: float) -> float:
    if T == 0:
        raise ValueError("slot length T must be non-zero")
    if f < 0:
        raise ValueError("access count must be non-negative")
    return min(1.0, g * f / T)


def rank_idle_prob(page_probs: Iterable[float]) -> float:
    q = 1.0
    for p in page_probs:
        if not 0 <= p <= 1:
            raise ValueError(f"probability {p} outside [0, 1]")
        q *= 1.0 - p
    return q


def idle_length_prob(Q: float, k: int) -> float:
    if not 0 <= Q <= 1:
        raise ValueError(f"Q={Q} outside [0, 1]")
    return Q ** k * (1.0 - Q)


@dataclass
class RankAccessProfile:
    page_probs: list[float] = field(default_factory=list)
    g: float = 200

    @classmethod
    def from_counts(cls, counts: Iterable[float], g: float, T: float) -> "RankAccessProfile":
        return cls([page_access_prob(f, g, T) for f in counts], g)

    @property
    def Q(self) -> float:
        return rank_idle_prob(self.page_probs)

    def log_w(self, k):
        """log W_k, vectorized over k; -inf where W_k is zero."""
        return _log_w(self.Q, np.asarray(k, dtype=np.float64))


def _log_w(Q: float, k: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        if Q <= 0:
            return np.where(k == 0, 0.0, -np.inf)
        if Q >= 1:
            return np.full_like(k, -np.inf)
        return k * math.log(Q) + math.log1p(-Q)


def _q(x) -> float:
    return x.Q if isinstance(x, RankAccessProfile) else float(x)


def predict_carry_forward(prev_hist) -> SparseHistogram:
    h = as_sparse(prev_hist)
    return SparseHistogram(h.T, h.lengths.copy(), h.counts.copy())


def predict_after_migration(prev_hist, old, new, g: float, length_unit: float = 1.0,
                            target: float | None = None) -> SparseHistogram:
    """Rescale ``prev_hist`` by W_new/W_old per length, then normalize to the slot.

    ``old``/``new`` are rank idle-cycle probabilities Q (or profiles).  Ratios
    are taken in log space; buckets where the old W underflows to zero keep
    their count.  An empty or fully vanishing result falls back to carrying
    the previous histogram forward.

    With p = g*f/T the geometric model counts steps of one access latency, so
    callers working in cycles pass ``length_unit=g`` to measure lengths in
    those steps.  The default applies Q**k to the raw length k.  ``target``
    replaces T as the time the histogram should fill, e.g. when part of the
    slot is known to be taken by something else.
    """
    if length_unit <= 0:
        raise ValueError("length_unit must be positive")
    h = as_sparse(prev_hist)
    if len(h) == 0 or h.counts.sum() <= 0:
        return predict_carry_forward(h)
    k = h.lengths.astype(np.float64) / length_unit
    lw_old, lw_new = _log_w(_q(old), k), _log_w(_q(new), k)
    with np.errstate(invalid="ignore"):
        log_ratio = np.where(np.isfinite(lw_old), lw_new - lw_old, 0.0)
    with np.errstate(divide="ignore"):
        log_h = np.log(h.counts) + log_ratio
    mass = log_h + np.log(h.lengths + g)
    top = mass.max()
    if not np.isfinite(top):
        return predict_carry_forward(h)
    log_s = top + math.log(np.exp(mass - top).sum())
    fill = h.T if target is None else target
    if fill <= 0:
        raise ValueError("target time must be positive")
    counts = np.exp(log_h - log_s + math.log(fill))
    keep = counts > 0
    return SparseHistogram(h.T, h.lengths[keep].copy(), counts[keep])


def rescale_histogram(hist, factor: float) -> SparseHistogram:
    """Every count multiplied by ``factor``."""
    if factor < 0:
        raise ValueError("factor must be non-negative")
    h = as_sparse(hist)
    if factor == 0:
        return SparseHistogram.empty(h.T)
    return SparseHistogram(h.T, h.lengths.copy(), h.counts * factor)


def log2_bins(hist) -> dict[int, float]:
    """Counts aggregated into [2**b, 2**(b+1)) length bins."""
    h = as_sparse(hist)
    out: dict[int, float] = {}
    if len(h) == 0:
        return out
    bins = np.floor(np.log2(h.lengths)).astype(int)
    for b, c in zip(bins.tolist(), h.counts.tolist()):
        out[b] = out.get(b, 0.0) + c
    return out


def histogram_l1(predicted, actual) -> tuple[float, float]:
    """(sum over log2 bins of |predicted - actual|, actual total count)."""
    p, a = log2_bins(predicted), log2_bins(actual)
    diff = sum(abs(p.get(b, 0.0) - a.get(b, 0.0)) for b in set(p) | set(a))
    return diff, sum(a.values())


def prediction_error(predicted, actual) -> float | None:
    """L1 distance over log2 bins normalized by the actual count; None if nothing happened."""
    diff, total = histogram_l1(predicted, actual)
    if total == 0:
        return None if diff == 0 else math.inf
    return diff / total
