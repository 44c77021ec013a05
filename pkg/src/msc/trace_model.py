"""Match trace data model and JSONL serialization.

A trace file holds one match: a header line, a height-map line, then one event
per line in non-decreasing frame order. Events are plain dicts on disk with a
``type`` tag; in memory they are small dataclasses.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .vocab import RACES

MAP_SIZE = 64
MAX_HEIGHT = 16

MATCHUPS = ("TvT", "TvP", "TvZ", "PvP", "PvZ", "ZvZ")

_RACE_LETTER = {"Terran": "T", "Protoss": "P", "Zerg": "Z"}
_RACE_ORDER = {"Terran": 0, "Protoss": 1, "Zerg": 2}


def matchup_of(race_a: str, race_b: str) -> str:
    """Normalized matchup name with races ordered Terran < Protoss < Zerg."""
    first, second = sorted((race_a, race_b), key=_RACE_ORDER.__getitem__)
    return f"{_RACE_LETTER[first]}v{_RACE_LETTER[second]}"


@dataclass
class Player:
    player_id: int
    race: str
    mmr: int
    apm: float
    result: str  # "Win" or "Loss"


@dataclass
class ActionEvent:
    frame: int
    player_id: int
    action_id: int  # index into the race action list; -1 for low-level actions
    type: str = field(default="action", init=False)


@dataclass
class UnitBornEvent:
    frame: int
    player_id: int
    unit_type: int
    unit_id: int
    x: int
    y: int
    type: str = field(default="unit_born", init=False)


@dataclass
class UnitDiedEvent:
    frame: int
    player_id: int
    unit_type: int
    unit_id: int
    x: int
    y: int
    type: str = field(default="unit_died", init=False)


@dataclass
class StatsEvent:
    frame: int
    player_id: int
    minerals: float
    vespene: float
    minerals_collected: float
    vespene_collected: float
    type: str = field(default="stats", init=False)


@dataclass
class UpgradeCompleteEvent:
    frame: int
    player_id: int
    upgrade_id: int
    type: str = field(default="upgrade_complete", init=False)


@dataclass
class TechCompleteEvent:
    frame: int
    player_id: int
    tech_id: int
    type: str = field(default="tech_complete", init=False)


@dataclass
class AlertEvent:
    frame: int
    player_id: int
    alert_id: int
    type: str = field(default="alert", init=False)


@dataclass
class EnemySightedEvent:
    frame: int
    player_id: int  # the observing player
    unit_type: int
    unit_id: int
    x: int
    y: int
    type: str = field(default="enemy_sighted", init=False)


@dataclass
class EnemyLostEvent:
    frame: int
    player_id: int  # the observing player
    unit_id: int
    type: str = field(default="enemy_lost", init=False)


Event = (
    ActionEvent | UnitBornEvent | UnitDiedEvent | StatsEvent
    | UpgradeCompleteEvent | TechCompleteEvent | AlertEvent
    | EnemySightedEvent | EnemyLostEvent
)

_EVENT_TYPES: dict[str, type] = {
    "action": ActionEvent,
    "unit_born": UnitBornEvent,
    "unit_died": UnitDiedEvent,
    "stats": StatsEvent,
    "upgrade_complete": UpgradeCompleteEvent,
    "tech_complete": TechCompleteEvent,
    "alert": AlertEvent,
    "enemy_sighted": EnemySightedEvent,
    "enemy_lost": EnemyLostEvent,
}


@dataclass
class Trace:
    replay_id: str
    map_name: str
    total_frames: int
    players: list[Player]
    height_map: np.ndarray  # (MAP_SIZE, MAP_SIZE) int
    events: list[Event]

    def player(self, player_id: int) -> Player:
        for p in self.players:
            if p.player_id == player_id:
                return p
        raise KeyError(f"no player {player_id} in trace {self.replay_id}")

    def matchup(self) -> str:
        return matchup_of(self.players[0].race, self.players[1].race)


class TraceError(ValueError):
    pass


def validate_trace(trace: Trace) -> None:
    """Raise TraceError on any structural violation."""
    if len(trace.players) != 2:
        raise TraceError("trace must have exactly 2 players")
    if sorted(p.player_id for p in trace.players) != [1, 2]:
        raise TraceError("player ids must be 1 and 2")
    results = sorted(p.result for p in trace.players)
    if results != ["Loss", "Win"]:
        raise TraceError("players must have one Win and one Loss result")
    for p in trace.players:
        if p.race not in RACES:
            raise TraceError(f"unknown race {p.race!r}")
    if trace.total_frames <= 0:
        raise TraceError("total_frames must be positive")
    hm = trace.height_map
    if hm.shape != (MAP_SIZE, MAP_SIZE):
        raise TraceError(f"height map must be {MAP_SIZE}x{MAP_SIZE}, got {hm.shape}")
    if hm.min() < 0 or hm.max() > MAX_HEIGHT:
        raise TraceError("height map values out of range")
    prev = 0
    for ev in trace.events:
        if ev.frame < prev:
            raise TraceError(f"event frames must be non-decreasing at frame {ev.frame}")
        if ev.frame > trace.total_frames:
            raise TraceError("event frame exceeds total_frames")
        if ev.player_id not in (1, 2):
            raise TraceError(f"event has invalid player_id {ev.player_id}")
        prev = ev.frame


def _event_to_dict(ev: Event) -> dict:
    d = asdict(ev)
    # Put the type tag first so raw files read naturally.
    return {"type": d.pop("type"), **d}


def event_from_dict(d: dict) -> Event:
    kind = d["type"]
    cls = _EVENT_TYPES.get(kind)
    if cls is None:
        raise TraceError(f"unknown event type {kind!r}")
    kwargs = {k: v for k, v in d.items() if k != "type"}
    return cls(**kwargs)


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def write_trace(trace: Trace, path: str | Path) -> None:
    header = {
        "replay_id": trace.replay_id,
        "map_name": trace.map_name,
        "total_frames": trace.total_frames,
        "players": [asdict(p) for p in trace.players],
    }
    with open(path, "w") as f:
        f.write(_dumps(header) + "\n")
        f.write(_dumps({"height_map": trace.height_map.tolist()}) + "\n")
        for ev in trace.events:
            f.write(_dumps(_event_to_dict(ev)) + "\n")


def read_trace(path: str | Path) -> Trace:
    with open(path) as f:
        header = json.loads(f.readline())
        hm_line = json.loads(f.readline())
        events = [event_from_dict(json.loads(line)) for line in f if line.strip()]
    players = [Player(**p) for p in header["players"]]
    height_map = np.asarray(hm_line["height_map"], dtype=np.int32)
    return Trace(
        replay_id=header["replay_id"],
        map_name=header["map_name"],
        total_frames=header["total_frames"],
        players=players,
        height_map=height_map,
        events=events,
    )


def iter_events(path: str | Path) -> Iterable[Event]:
    """Stream events from a trace file without loading it whole."""
    with open(path) as f:
        f.readline()
        f.readline()
        for line in f:
            if line.strip():
                yield event_from_dict(json.loads(line))
