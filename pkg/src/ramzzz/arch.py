"""DRAM architecture power-state specifications.

Power is normalized to the active (ACT) state, so energy is measured in
"ACT-power x CPU cycle" units throughout the package.  Each architecture is an
ordered chain ACT, S1, ..., SM of strictly decreasing power.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

DEFAULT_CPU_FREQ_GHZ = 2.66


class ArchSpecError(ValueError):
    pass


@dataclass(frozen=True)
class PowerStateSpec:
    name: str
    normalized_power: float
    resync_time_ns: float
    # None means "rank draws ACT power while resynchronizing"
    resync_energy: float | None = None


@dataclass(frozen=True)
class DramArchSpec:
    name: str
    states: tuple[PowerStateSpec, ...]
    cpu_freq_ghz: float = DEFAULT_CPU_FREQ_GHZ
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        _validate(self)
        object.__setattr__(self, "_index", {s.name: i for i, s in enumerate(self.states)})

    @property
    def act(self) -> PowerStateSpec:
        return self.states[0]

    @property
    def low_power_states(self) -> tuple[PowerStateSpec, ...]:
        return self.states[1:]

    @property
    def M(self) -> int:
        return len(self.states) - 1

    def index(self, state: PowerStateSpec | str | int) -> int:
        """Chain position of ``state`` (0 is ACT)."""
        if isinstance(state, int):
            if not 0 <= state < len(self.states):
                raise ArchSpecError(f"state index {state} out of range for {self.name}")
            return state
        name = state.name if isinstance(state, PowerStateSpec) else state
        try:
            i = self._index[name]
        except KeyError:
            raise ArchSpecError(f"state {name!r} is not part of {self.name}") from None
        if isinstance(state, PowerStateSpec) and state != self.states[i]:
            raise ArchSpecError(f"state {name!r} does not match the {self.name} definition")
        return i

    def power(self, state) -> float:
        return self.states[self.index(state)].normalized_power

    def resync_cycles(self, state) -> int:
        return resync_cycles(self, state)

    def resync_energy(self, state) -> float:
        i = self.index(state)
        s = self.states[i]
        if s.resync_energy is not None:
            return float(s.resync_energy)
        return self.act.normalized_power * resync_cycles(self, i)

    # vectors over S1..SM, used by the demotion model
    def powers(self) -> list[float]:
        return [s.normalized_power for s in self.low_power_states]

    def resync_energies(self) -> list[float]:
        return [self.resync_energy(i) for i in range(1, len(self.states))]

    def resync_delays(self) -> list[int]:
        return [resync_cycles(self, i) for i in range(1, len(self.states))]

    def restrict(self, count: int) -> "DramArchSpec":
        """Keep ACT plus the first ``count`` low-power states of the chain."""
        if not 1 <= count <= self.M:
            raise ArchSpecError(f"{self.name} has {self.M} low-power states, asked for {count}")
        return replace(self, name=f"{self.name}[{count}]", states=self.states[: count + 1])

    def only(self, state) -> "DramArchSpec":
        """Single-state chain ACT -> state (static demotion)."""
        i = self.index(state)
        if i == 0:
            raise ArchSpecError("ACT is not a low-power state")
        return replace(self, name=f"{self.name}:{self.states[i].name}",
                       states=(self.states[0], self.states[i]))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cpu_freq_ghz": self.cpu_freq_ghz,
            "states": [
                {k: v for k, v in (
                    ("name", s.name),
                    ("normalized_power", s.normalized_power),
                    ("resync_time_ns", s.resync_time_ns),
                    ("resync_energy", s.resync_energy),
                ) if v is not None}
                for s in self.states
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DramArchSpec":
        try:
            states = [
                PowerStateSpec(
                    name=str(s["name"]),
                    normalized_power=float(s["normalized_power"]),
                    resync_time_ns=float(s["resync_time_ns"]),
                    resync_energy=None if s.get("resync_energy") is None else float(s["resync_energy"]),
                )
                for s in data["states"]
            ]
            return cls(
                name=str(data["name"]),
                states=tuple(states),
                cpu_freq_ghz=float(data.get("cpu_freq_ghz", DEFAULT_CPU_FREQ_GHZ)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ArchSpecError):
                raise
            raise ArchSpecError(f"malformed architecture spec: {exc}") from exc


def _validate(spec: DramArchSpec) -> None:
    states = spec.states
    if len(states) < 2:
        raise ArchSpecError(f"{spec.name}: need ACT plus at least one low-power state")
    if spec.cpu_freq_ghz <= 0:
        raise ArchSpecError(f"{spec.name}: cpu_freq_ghz must be positive")
    act = states[0]
    if act.normalized_power != 1.0 or act.resync_time_ns != 0:
        raise ArchSpecError(f"{spec.name}: first state must be ACT with power 1.0 and resync 0")
    names = [s.name for s in states]
    if len(set(names)) != len(names):
        raise ArchSpecError(f"{spec.name}: duplicate state names")
    for prev, cur in zip(states, states[1:]):
        if not 0 < cur.normalized_power < prev.normalized_power:
            raise ArchSpecError(
                f"{spec.name}: {cur.name} power {cur.normalized_power} must be positive "
                f"and below {prev.name} ({prev.normalized_power})")
        if cur.resync_time_ns < prev.resync_time_ns:
            raise ArchSpecError(f"{spec.name}: {cur.name} resync time decreases along the chain")
        if cur.resync_energy is not None and cur.resync_energy < 0:
            raise ArchSpecError(f"{spec.name}: {cur.name} has negative resync energy")


def _build(name: str, rows: Sequence[tuple[str, float, float]]) -> DramArchSpec:
    return DramArchSpec(name, tuple(PowerStateSpec(n, p, r) for n, p, r in rows))


# (state, normalized power, resynchronization time in ns)
BUILTIN_ROWS = {
    "ddr3": [
        ("ACT", 1.0, 0),
        ("ACT_PDN", 0.612, 6),
        ("PRE_PDN_FAST", 0.520, 18),
        ("PRE_PDN_SLOW", 0.299, 24),
        ("SR_FAST", 0.170, 768),
        ("SR_SLOW", 0.104, 6768),
    ],
    "ddr2": [
        ("ACT", 1.0, 0),
        ("ACT_PDN_FAST", 0.619, 5),
        ("ACT_PDN_SLOW", 0.325, 18),
        ("PRE_PDN", 0.237, 25),
        ("SR", 0.178, 500),
    ],
    "lpddr2": [
        ("ACT", 1.0, 0),
        ("ACT_PDN", 0.523, 8),
        ("PRE_PDN", 0.303, 26),
        ("SR", 0.194, 100),
    ],
}

BUILTINS = tuple(BUILTIN_ROWS)


def load_arch_spec(source: str | Path, cpu_freq_ghz: float | None = None) -> DramArchSpec:
    """Return a built-in architecture by name, or parse a JSON spec file."""
    key = str(source).lower()
    if key in BUILTIN_ROWS:
        spec = _build(key, BUILTIN_ROWS[key])
    else:
        path = Path(source)
        if not path.is_file():
            raise ArchSpecError(f"unknown architecture {source!r} (built-ins: {', '.join(BUILTINS)})")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ArchSpecError(f"{path}: not valid JSON: {exc}") from exc
        spec = DramArchSpec.from_dict(data)
    if cpu_freq_ghz is not None:
        spec = replace(spec, cpu_freq_ghz=float(cpu_freq_ghz))
    return spec


def resync_cycles(spec: DramArchSpec, state) -> int:
    """ceil(resync_time_ns * cpu_freq_ghz); rounding guards float noise like 15.9999999."""
    s = spec.states[spec.index(state)]
    return int(math.ceil(round(s.resync_time_ns * spec.cpu_freq_ghz, 9)))


def break_even_threshold(spec: DramArchSpec, state) -> float:
    """Shortest idle length for which demoting at once beats staying in ACT.

    Returns ``math.inf`` when the state saves no power.
    """
    i = spec.index(state)
    if i == 0:
        raise ArchSpecError("break-even threshold is undefined for ACT")
    saving = spec.act.normalized_power - spec.states[i].normalized_power
    if saving <= 0:
        return math.inf
    return math.ceil(round(spec.resync_energy(i) / saving, 9))
