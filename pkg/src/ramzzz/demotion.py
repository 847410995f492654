"""Demotion-chain energy/delay model and timeout solvers.

A configuration holds one power-down timeout per low-power state.  During an
idle period of t cycles the rank sits in ACT until the first timeout, then in
S_j between its timeout and the next enabled one, and finally pays the
resynchronization energy and delay of the deepest state it reached, i.e. the
last S_j with timeout < t.  A disabled state has timeout ``inf``.

Histogram sums are evaluated in closed form from prefix sums over the sorted
idle lengths, so a configuration costs O(M log K) regardless of the histogram
size, and whole batches of configurations are evaluated with numpy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arch import DramArchSpec, break_even_threshold
from .idlehist import SparseHistogram, as_sparse

INF = math.inf
OBJECTIVES = ("energy", "ed2")


class DemotionError(ValueError):
    pass


@dataclass(frozen=True)
class DemotionConfig:
    timeouts: tuple[float, ...]

    def __post_init__(self):
        ts = tuple(float(t) for t in self.timeouts)
        object.__setattr__(self, "timeouts", ts)
        last = -1.0
        for t in ts:
            if math.isnan(t) or t < 0:
                raise DemotionError(f"invalid timeout {t}")
            if math.isinf(t):
                continue
            if t < last:
                raise DemotionError(f"timeouts of enabled states must be non-decreasing: {ts}")
            last = t

    @classmethod
    def disabled(cls, M: int) -> "DemotionConfig":
        return cls((INF,) * M)

    @property
    def M(self) -> int:
        return len(self.timeouts)

    @property
    def active_states(self) -> tuple[int, ...]:
        """1-based chain indices of enabled states."""
        return tuple(i + 1 for i, t in enumerate(self.timeouts) if math.isfinite(t))

    def deepest_state(self, t: float) -> int:
        """I(t): deepest enabled state whose timeout is below t (0 means no demotion)."""
        best = 0
        for i, d in enumerate(self.timeouts, 1):
            if d < t:
                best = i
        return best

    def to_list(self) -> list:
        return [None if math.isinf(t) else int(t) if float(t).is_integer() else t
                for t in self.timeouts]

    @classmethod
    def from_list(cls, values) -> "DemotionConfig":
        return cls(tuple(INF if v is None else float(v) for v in values))


class _Chain:
    """Numeric view of an architecture's chain (S1..SM)."""

    def __init__(self, spec: DramArchSpec):
        self.M = spec.M
        self.p_act = spec.act.normalized_power
        self.P = np.array(spec.powers())
        self.E = np.array(spec.resync_energies())
        self.R = np.array(spec.resync_delays(), dtype=np.float64)


class _HistSums:
    def __init__(self, hist: SparseHistogram):
        self.lengths = hist.lengths.astype(np.float64)
        counts = hist.counts.astype(np.float64)
        self.C = np.concatenate(([0.0], np.cumsum(counts)))
        self.S = np.concatenate(([0.0], np.cumsum(counts * self.lengths)))
        self.N = self.C[-1]

    def count_le(self, x):
        return self.C[np.searchsorted(self.lengths, x, side="right")]

    def sum_le(self, x):
        return self.S[np.searchsorted(self.lengths, x, side="right")]


def _evaluate(sums: _HistSums, chain: _Chain, deltas: np.ndarray):
    """Energy and delay for each row of ``deltas`` (shape n x M)."""
    d = np.atleast_2d(np.asarray(deltas, dtype=np.float64))
    n, M = d.shape
    if M != chain.M:
        raise DemotionError(f"configuration has {M} timeouts, architecture has {chain.M} states")
    suffix = np.minimum.accumulate(d[:, ::-1], axis=1)[:, ::-1]
    nxt = np.full_like(d, INF)
    nxt[:, :-1] = suffix[:, 1:]
    first = suffix[:, 0]
    N = sums.N

    with np.errstate(invalid="ignore"):
        fin = np.isfinite(first)
        f0 = np.where(fin, first, 0.0)
        energy = chain.p_act * (sums.sum_le(first) + np.where(fin, f0 * (N - sums.count_le(first)), 0.0))
        delay = np.zeros(n)
        for j in range(M):
            a, b = d[:, j], nxt[:, j]
            on = np.isfinite(a)
            a0 = np.where(on, a, 0.0)
            ca, cb = sums.count_le(a), sums.count_le(b)
            inner = (sums.sum_le(b) - sums.sum_le(a)) - a0 * (cb - ca)
            tail = np.where(np.isfinite(b), (np.where(np.isfinite(b), b, 0.0) - a0) * (N - cb), 0.0)
            ending = cb - ca
            energy += np.where(on, chain.P[j] * (inner + tail) + chain.E[j] * ending, 0.0)
            delay += np.where(on, chain.R[j] * ending, 0.0)
    return energy, delay


def _timeouts(cfg) -> np.ndarray:
    if isinstance(cfg, DemotionConfig):
        return np.array(cfg.timeouts, dtype=np.float64)
    return np.asarray(cfg, dtype=np.float64)


def idle_energy(cfg: DemotionConfig, t: float, spec: DramArchSpec) -> float:
    """Energy of one idle period of length t > first timeout, resync included."""
    ts = cfg.timeouts
    first = min(ts)
    if not t > first:
        raise DemotionError(f"idle length {t} does not exceed the first timeout {first}")
    active = [(ts[i], i + 1) for i in range(len(ts)) if math.isfinite(ts[i]) and ts[i] < t]
    e = spec.act.normalized_power * active[0][0]
    for (d, j), (d_next, _) in zip(active, active[1:]):
        e += spec.power(j) * (d_next - d)
    d_last, last = active[-1]
    return e + spec.power(last) * (t - d_last) + spec.resync_energy(last)


def evaluate(cfg, hist, spec: DramArchSpec) -> tuple[float, float]:
    """(total energy, total resynchronization delay) over a histogram."""
    e, d = _evaluate(_HistSums(as_sparse(hist)), _Chain(spec), _timeouts(cfg)[None, :])
    return float(e[0]), float(d[0])


def total_energy(cfg, hist, spec: DramArchSpec) -> float:
    return evaluate(cfg, hist, spec)[0]


def total_delay(cfg, hist, spec: DramArchSpec) -> float:
    return evaluate(cfg, hist, spec)[1]


def objective_value(E, D, base_delay: float, objective: str = "energy",
                    energy_offset: float = 0.0, stall_power: float = 0.0):
    """``energy_offset`` is energy spent elsewhere over the same time (other
    ranks, service) and ``stall_power`` what that rest of the system draws
    while a stall holds it up.  Together they let a local decision price its
    stall system-wide."""
    if objective == "energy":
        return E
    if objective == "ed2":
        return (E + energy_offset + stall_power * D) * (base_delay + D) ** 2
    raise DemotionError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")


def candidate_timeouts(hist, exponential: bool = False) -> list[float]:
    """0 plus every observed idle length, or 0 plus 2**i up to T."""
    h = as_sparse(hist)
    if exponential:
        top = max(h.T, int(h.lengths[-1]) if len(h) else 1)
        return [0.0] + [float(2 ** i) for i in range(int(math.log2(top)) + 1)]
    return [0.0] + [float(x) for x in h.lengths.tolist()]


def break_even_config(spec: DramArchSpec) -> DemotionConfig:
    """Each state's timeout at its break-even length (made monotone)."""
    out, last = [], 0.0
    for i in range(1, spec.M + 1):
        last = max(last, float(break_even_threshold(spec, i)))
        out.append(last)
    return DemotionConfig(tuple(out))


@dataclass(frozen=True)
class Solution:
    config: DemotionConfig
    energy: float
    delay: float
    objective: float


def _budget_ok(delay, budget):
    return delay <= budget * (1 + 1e-12) + 1e-9


def greedy_config(hist, spec: DramArchSpec, budget: float = INF, objective: str = "energy", *,
                  base_delay: float | None = None, exponential: bool = False,
                  candidates: Sequence[float] | None = None, energy_offset: float = 0.0,
                  stall_power: float = 0.0) -> Solution:
    """Add one low-power state per round, each time the state/timeout pair that
    best improves the objective while the other chosen timeouts stay fixed.

    A state may also be left disabled (timeout inf).  Timeouts of higher
    candidates are tried first; once the delay budget is exceeded the lower
    ones are skipped, since the delay only grows as a timeout shrinks.
    """
    if budget < 0:
        raise DemotionError("delay budget must be non-negative")
    h = as_sparse(hist)
    base = float(h.T if base_delay is None else base_delay)
    sums, chain = _HistSums(h), _Chain(spec)
    cands = sorted(set(candidates if candidates is not None else candidate_timeouts(h, exponential)))
    M = spec.M
    current = [INF] * M
    e0, d0 = _evaluate(sums, chain, np.array([current]))
    best = Solution(DemotionConfig.disabled(M), float(e0[0]), float(d0[0]),
                    float(objective_value(e0[0], d0[0], base, objective, energy_offset, stall_power)))
    unselected = list(range(M))
    while unselected:
        round_best = None  # (objective, state, timeout, energy, delay)
        for i in unselected:
            lo = max((current[k] for k in range(i) if math.isfinite(current[k])), default=0.0)
            hi = min((current[k] for k in range(i + 1, M)), default=INF)
            opts = [INF] + [c for c in reversed(cands) if lo <= c <= hi]
            trial = np.tile(np.array(current, dtype=np.float64), (len(opts), 1))
            trial[:, i] = opts
            e, d = _evaluate(sums, chain, trial)
            ok = _budget_ok(d, budget)
            if not ok.all():
                # branch-and-bound: the first violation ends the descending scan
                cut = int(np.argmin(ok))
                ok[cut:] = False
            if not ok.any():
                continue
            obj = objective_value(e, d, base, objective, energy_offset, stall_power)
            obj = np.where(ok, obj, INF)
            k = int(np.argmin(obj))  # first minimum == largest timeout among ties
            if round_best is None or obj[k] < round_best[0]:
                round_best = (float(obj[k]), i, opts[k], float(e[k]), float(d[k]))
        if round_best is None:
            break
        obj_k, i, value, e_k, d_k = round_best
        current[i] = value
        unselected.remove(i)
        best = Solution(DemotionConfig(tuple(current)), e_k, d_k, obj_k)
    return best


def _enumerate_configs(M: int, cands: Sequence[float]):
    for mask in itertools.product((False, True), repeat=M):
        k = sum(mask)
        for combo in itertools.combinations_with_replacement(cands, k):
            row, it = [], iter(combo)
            for on in mask:
                row.append(next(it) if on else INF)
            yield row


def exhaustive_config(hist, spec: DramArchSpec, budget: float = INF, objective: str = "energy", *,
                      base_delay: float | None = None, candidates: Sequence[float] | None = None,
                      max_configs: int = 2_000_000, energy_offset: float = 0.0,
                      stall_power: float = 0.0) -> Solution:
    """True optimum over monotone timeout vectors drawn from candidates and inf.

    Between two consecutive observed lengths the energy is linear in a
    timeout, so 0 plus the observed lengths suffice for the optimum.
    """
    if budget < 0:
        raise DemotionError("delay budget must be non-negative")
    h = as_sparse(hist)
    base = float(h.T if base_delay is None else base_delay)
    cands = sorted(set(candidates if candidates is not None else candidate_timeouts(h)))
    M = spec.M
    size = sum(math.comb(M, k) * math.comb(len(cands) + k - 1, k) for k in range(M + 1))
    if size > max_configs:
        raise DemotionError(f"exhaustive search over {size} configurations exceeds {max_configs}")
    sums, chain = _HistSums(h), _Chain(spec)
    best = None
    rows = _enumerate_configs(M, cands)
    while True:
        block = list(itertools.islice(rows, 50_000))
        if not block:
            break
        arr = np.array(block, dtype=np.float64)
        e, d = _evaluate(sums, chain, arr)
        obj = np.where(_budget_ok(d, budget), objective_value(e, d, base, objective, energy_offset, stall_power), INF)
        k = int(np.argmin(obj))
        if math.isfinite(obj[k]) and (best is None or obj[k] < best.objective):
            best = Solution(DemotionConfig(tuple(arr[k])), float(e[k]), float(d[k]), float(obj[k]))
    if best is None:  # unreachable: the all-disabled row has zero delay
        raise DemotionError("no feasible configuration")
    return best


def exhaustive_size(M: int, n_candidates: int) -> int:
    return sum(math.comb(M, k) * math.comb(n_candidates + k - 1, k) for k in range(M + 1))
