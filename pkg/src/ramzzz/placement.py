"""Rank-aware page placement and migration scheduling.

At an epoch boundary pages are cut into R groups of C in MQ hotness order,
groups are assigned to ranks so the fewest pages move (maximum-weight
assignment on the rank x group overlap matrix), and the resulting moves are
split into segments in which every rank sends at most one page and receives
at most one page, so a segment's moves can proceed concurrently.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .mq import MqStructure


class PlacementError(ValueError):
    pass


def interleave_map(page: int, R: int) -> int:
    """Initial page-interleaved rank of a page."""
    return page % R


@dataclass
class Placement:
    ranks: int
    capacity: int
    rank_of_page: dict[int, int] = field(default_factory=dict)
    pages_of_rank: list[set[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.pages_of_rank:
            self.pages_of_rank = [set() for _ in range(self.ranks)]
            for p, r in self.rank_of_page.items():
                self.pages_of_rank[r].add(p)
        self.check()

    @classmethod
    def from_sets(cls, sets: Sequence[Iterable[int]], capacity: int) -> "Placement":
        rank_of = {}
        for r, pages in enumerate(sets):
            for p in pages:
                if p in rank_of:
                    raise PlacementError(f"page {p} placed on two ranks")
                rank_of[p] = r
        return cls(len(sets), capacity, rank_of)

    def check(self) -> None:
        if len(self.pages_of_rank) != self.ranks:
            raise PlacementError("pages_of_rank must have one set per rank")
        seen = 0
        for r, pages in enumerate(self.pages_of_rank):
            if len(pages) > self.capacity:
                raise PlacementError(f"rank {r} holds {len(pages)} pages, capacity {self.capacity}")
            for p in pages:
                if self.rank_of_page.get(p) != r:
                    raise PlacementError(f"page {p} inconsistent between the two maps")
            seen += len(pages)
        if seen != len(self.rank_of_page):
            raise PlacementError("rank_of_page lists pages missing from pages_of_rank")


class Move(NamedTuple):
    src: int
    dst: int
    page: int


@dataclass
class MigrationGraph:
    ranks: int
    edges: list[Move] = field(default_factory=list)

    def degrees(self) -> tuple[list[int], list[int]]:
        out_deg, in_deg = [0] * self.ranks, [0] * self.ranks
        for e in self.edges:
            out_deg[e.src] += 1
            in_deg[e.dst] += 1
        return out_deg, in_deg


@dataclass
class MigrationSchedule:
    segments: list[list[Move]] = field(default_factory=list)

    @property
    def moves(self) -> list[Move]:
        return [m for seg in self.segments for m in seg]

    def __len__(self) -> int:
        return len(self.segments)

    def to_csv(self) -> str:
        lines = ["segment,src,dst,page"]
        for i, seg in enumerate(self.segments):
            lines.extend(f"{i},{m.src},{m.dst},{m.page}" for m in seg)
        return "\n".join(lines) + "\n"


def segment_is_valid(segment: Sequence[Move]) -> bool:
    srcs = [m.src for m in segment]
    dsts = [m.dst for m in segment]
    return len(set(srcs)) == len(srcs) and len(set(dsts)) == len(dsts)


def group_pages(mq: MqStructure | Sequence[int], R: int, C: int) -> list[list[int]]:
    """R groups filled with C pages each in hotness order; group 0 is hottest."""
    order = mq.hotness_order() if isinstance(mq, MqStructure) else list(mq)
    if len(order) > R * C:
        raise PlacementError(f"{len(order)} pages exceed {R} ranks x {C} capacity")
    return [order[i * C:(i + 1) * C] for i in range(R)]


def overlap_matrix(prev: Placement, groups: Sequence[Sequence[int]]) -> np.ndarray:
    w = np.zeros((prev.ranks, len(groups)), dtype=np.int64)
    for g, pages in enumerate(groups):
        for p in pages:
            r = prev.rank_of_page.get(p)
            if r is not None:
                w[r, g] += 1
    return w


def match_groups_to_ranks(prev: Placement, groups: Sequence[Sequence[int]]) -> list[int]:
    """mapping[g] = rank receiving group g, maximizing pages that stay put."""
    if len(groups) != prev.ranks:
        raise PlacementError(f"need {prev.ranks} groups, got {len(groups)}")
    w = overlap_matrix(prev, groups)
    rows, cols = linear_sum_assignment(w, maximize=True)
    mapping = [0] * len(groups)
    for r, g in zip(rows.tolist(), cols.tolist()):
        mapping[g] = r
    return mapping


def count_migrations(prev: Placement, groups: Sequence[Sequence[int]], mapping: Sequence[int]) -> int:
    return sum(1 for g, pages in enumerate(groups) for p in pages
               if prev.rank_of_page.get(p, mapping[g]) != mapping[g])


def build_migration_graph(prev: Placement, groups: Sequence[Sequence[int]],
                          mapping: Sequence[int]) -> MigrationGraph:
    """One edge per page that changes rank; pages new to the placement need no move."""
    graph = MigrationGraph(prev.ranks)
    for g, pages in enumerate(groups):
        dst = mapping[g]
        for p in pages:
            src = prev.rank_of_page.get(p)
            if src is not None and src != dst:
                graph.edges.append(Move(src, dst, p))
    return graph


def _trails(graph: MigrationGraph) -> list[list[Move]]:
    """Edge-disjoint trails covering every edge once.

    Unbalanced vertices are tied to a virtual hub so every component has an
    Eulerian circuit (Hierholzer); cutting the circuit at hub edges yields
    trails, and balanced components come out as whole circuits.
    """
    hub = graph.ranks
    adj: dict[int, list] = defaultdict(list)
    for e in graph.edges:
        adj[e.src].append((e.dst, e))
    out_deg, in_deg = graph.degrees()
    for v in range(graph.ranks):
        for _ in range(out_deg[v] - in_deg[v]):
            adj[hub].append((v, None))
        for _ in range(in_deg[v] - out_deg[v]):
            adj[v].append((hub, None))
    # pop() takes from the end; reversing keeps the walk in insertion order
    for v in adj:
        adj[v].reverse()

    trails: list[list[Move]] = []
    starts = ([hub] if adj.get(hub) else []) + sorted(v for v in adj if v != hub)
    for start in starts:
        if not adj.get(start):
            continue
        stack = [(start, None)]
        circuit: list = []
        while stack:
            v, e = stack[-1]
            if adj.get(v):
                w, edge = adj[v].pop()
                stack.append((w, edge))
            else:
                stack.pop()
                circuit.append(e)
        circuit.reverse()
        current: list[Move] = []
        for e in circuit:
            if e is None:
                if current:
                    trails.append(current)
                current = []
            else:
                current.append(e)
        if current:
            trails.append(current)
    return trails


def _split(trail: Sequence[Move]) -> list[list[Move]]:
    segments, seg, srcs, dsts = [], [], set(), set()
    for e in trail:
        if e.src in srcs or e.dst in dsts:
            segments.append(seg)
            seg, srcs, dsts = [], set(), set()
        seg.append(e)
        srcs.add(e.src)
        dsts.add(e.dst)
    if seg:
        segments.append(seg)
    return segments


def eulerian_schedule(graph: MigrationGraph, pack: bool = True) -> MigrationSchedule:
    """Cut Eulerian trails into simple paths/cycles, longest first.

    With ``pack`` rank-disjoint pieces share a segment, since every rank still
    sends and receives at most one page in it.
    """
    pieces = [s for t in _trails(graph) for s in _split(t)]
    pieces.sort(key=len, reverse=True)  # stable: ties keep trail order
    if not pack:
        segments = pieces
    else:
        segments, used = [], []
        for piece in pieces:
            ps = {m.src for m in piece}
            pd = {m.dst for m in piece}
            for seg, (us, ud) in zip(segments, used):
                if not (ps & us or pd & ud):
                    seg.extend(piece)
                    us |= ps
                    ud |= pd
                    break
            else:
                segments.append(list(piece))
                used.append((ps, pd))
    schedule = MigrationSchedule(segments)
    covered = sorted(schedule.moves)
    if covered != sorted(graph.edges) or not all(segment_is_valid(s) for s in segments):
        raise PlacementError("internal error: schedule does not cover the migration graph")
    return schedule


class RemapTable:
    """Page -> physical frame translation; frames are interleaved over ranks.

    Frame f lives on rank f mod R.  A page without an entry sits in its home
    frame (frame id == page id).  Frames of pages never touched count as free.
    """

    def __init__(self, ranks: int, capacity: int):
        self.ranks = ranks
        self.capacity = capacity
        self._frame_of: dict[int, int] = {}
        self._owner: dict[int, int] = {}

    def copy(self) -> "RemapTable":
        other = RemapTable(self.ranks, self.capacity)
        other._frame_of = dict(self._frame_of)
        other._owner = dict(self._owner)
        return other

    def __len__(self) -> int:
        return len(self._frame_of)

    def items(self):
        return sorted(self._frame_of.items())

    def lookup(self, page: int) -> int:
        return self._frame_of.get(page, page)

    def rank_of(self, page: int) -> int:
        return self.lookup(page) % self.ranks

    def is_placed(self, page: int) -> bool:
        return self._owner.get(self.lookup(page)) == page

    def frames_of_rank(self, rank: int) -> range:
        return range(rank, self.ranks * self.capacity, self.ranks)

    def free_frames(self, rank: int) -> list[int]:
        return [f for f in self.frames_of_rank(rank) if f not in self._owner]

    def place(self, page: int) -> int:
        """Claim a frame for a page seen for the first time; returns its rank."""
        if self.is_placed(page):
            return self.rank_of(page)
        if not 0 <= page < self.ranks * self.capacity:
            raise PlacementError(f"page {page} outside the {self.ranks * self.capacity}-page footprint")
        if page not in self._owner:
            self._owner[page] = page
            return page % self.ranks
        home = page % self.ranks
        for r in [home] + [r for r in range(self.ranks - 1, -1, -1) if r != home]:
            free = self.free_frames(r)
            if free:
                self._assign(page, free[0])
                return r
        raise PlacementError("no free frame left")  # unreachable within the footprint

    def _assign(self, page: int, frame: int) -> None:
        self._owner[frame] = page
        if frame == page:
            self._frame_of.pop(page, None)
        else:
            self._frame_of[page] = frame

    def placement(self) -> Placement:
        rank_of = {p: f % self.ranks for f, p in self._owner.items()}
        return Placement(self.ranks, self.capacity, rank_of)

    def apply_moves(self, moves: Sequence[Move]) -> None:
        """Relocate pages; an incoming page reuses a frame its rank vacates, else a free one."""
        vacated: dict[int, list[int]] = defaultdict(list)
        for m in moves:
            frame = self.lookup(m.page)
            if self._owner.get(frame) != m.page or frame % self.ranks != m.src:
                raise PlacementError(f"page {m.page} is not on rank {m.src}")
            vacated[m.src].append(frame)
        for m in moves:
            del self._owner[self.lookup(m.page)]
        for m in moves:
            pool = vacated[m.dst]
            if pool:
                frame = pool.pop(0)
            else:
                free = self.free_frames(m.dst)
                if not free:
                    raise PlacementError(f"rank {m.dst} is full")
                frame = free[0]
            self._assign(m.page, frame)


def remap_lookup(remap: RemapTable, page: int) -> int:
    """Physical frame of a page (identity when unmapped)."""
    return remap.lookup(page)


@dataclass(frozen=True)
class MigrationCost:
    page_cycles: int = 2048 * 4  # 2048 memory cycles at 4 CPU cycles each
    page_energy: float = 2 * 1024.0  # read + write of one page
    concurrent: bool = True


def schedule_delay(schedule: MigrationSchedule, cost: MigrationCost) -> int:
    if not cost.concurrent:
        return len(schedule.moves) * cost.page_cycles
    # the extra row buffer lets a rank send and receive one page at the same time
    total = 0
    for seg in schedule.segments:
        if not seg:
            continue
        sends = defaultdict(int)
        receives = defaultdict(int)
        for m in seg:
            sends[m.src] += 1
            receives[m.dst] += 1
        total += max(max(sends.values()), max(receives.values())) * cost.page_cycles
    return total


def apply_schedule(remap: RemapTable, schedule: MigrationSchedule,
                   cost: MigrationCost) -> tuple[RemapTable, int, float]:
    """(updated table, delay cycles, energy) for executing a schedule."""
    out = remap.copy()
    out.apply_moves(schedule.moves)
    return out, schedule_delay(schedule, cost), len(schedule.moves) * cost.page_energy
