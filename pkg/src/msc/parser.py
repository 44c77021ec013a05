"""Strided replay parsing: (observation, next high-level action) pairs.

For one player, walk frames t = 0, n, 2n, ... and fold every event with
frame <= t into running state. At each stop the state snapshot becomes an
observation, and the label paired with the PREVIOUS observation is the first
high-level action the player issued in the window (t - n, t], or the null
action when the window has none. The very first stop has no previous
observation, so a trace yields floor(total_frames / n) pairs.

Alerts behave as window signals rather than persistent state: a snapshot
carries exactly the alerts raised since the previous snapshot.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator

from .trace_model import (
    ActionEvent,
    AlertEvent,
    EnemyLostEvent,
    EnemySightedEvent,
    StatsEvent,
    TechCompleteEvent,
    Trace,
    UnitBornEvent,
    UnitDiedEvent,
    UpgradeCompleteEvent,
)
from .vocab import LABELED_GROUPS, NULL_LABEL, ActionVocabulary, default_vocabulary

DEFAULT_STRIDE = 8


@dataclass
class Observation:
    frame: int
    minerals: float
    vespene: float
    minerals_collected: float
    vespene_collected: float
    alerts: list[int]
    upgrades: list[int]
    techs: list[int]
    own_units: list[list[int]]    # [unit_type, x, y] per alive own unit
    enemy_units: list[list[int]]  # [unit_type, x, y] per currently observed enemy
    enemy_total: int              # true enemy units alive, observed or not


@dataclass
class ParsedSequence:
    replay_id: str
    player_id: int
    race: str
    result: str
    n: int
    total_frames: int
    pairs: list[tuple[Observation, int]]


class _PlayerState:
    """Event-folding state for a single player's point of view."""

    def __init__(self, player_id: int):
        self.player_id = player_id
        self.minerals = 0.0
        self.vespene = 0.0
        self.minerals_collected = 0.0
        self.vespene_collected = 0.0
        self.alert_buffer: set[int] = set()
        self.upgrades: set[int] = set()
        self.techs: set[int] = set()
        self.own_units: dict[int, tuple[int, int, int]] = {}
        self.enemy_alive: dict[int, tuple[int, int, int]] = {}
        self.observed: dict[int, tuple[int, int, int]] = {}

    def fold(self, ev) -> None:
        pid = self.player_id
        if isinstance(ev, UnitBornEvent):
            if ev.player_id == pid:
                self.own_units[ev.unit_id] = (ev.unit_type, ev.x, ev.y)
            else:
                self.enemy_alive[ev.unit_id] = (ev.unit_type, ev.x, ev.y)
        elif isinstance(ev, UnitDiedEvent):
            if ev.player_id == pid:
                self.own_units.pop(ev.unit_id, None)
            else:
                self.enemy_alive.pop(ev.unit_id, None)
                self.observed.pop(ev.unit_id, None)
        elif isinstance(ev, StatsEvent):
            if ev.player_id == pid:
                self.minerals = ev.minerals
                self.vespene = ev.vespene
                self.minerals_collected = ev.minerals_collected
                self.vespene_collected = ev.vespene_collected
        elif isinstance(ev, AlertEvent):
            if ev.player_id == pid:
                self.alert_buffer.add(ev.alert_id)
        elif isinstance(ev, UpgradeCompleteEvent):
            if ev.player_id == pid:
                self.upgrades.add(ev.upgrade_id)
        elif isinstance(ev, TechCompleteEvent):
            if ev.player_id == pid:
                self.techs.add(ev.tech_id)
        elif isinstance(ev, EnemySightedEvent):
            if ev.player_id == pid:
                self.observed[ev.unit_id] = (ev.unit_type, ev.x, ev.y)
        elif isinstance(ev, EnemyLostEvent):
            if ev.player_id == pid:
                self.observed.pop(ev.unit_id, None)

    def snapshot(self, frame: int) -> Observation:
        obs = Observation(
            frame=frame,
            minerals=self.minerals,
            vespene=self.vespene,
            minerals_collected=self.minerals_collected,
            vespene_collected=self.vespene_collected,
            alerts=sorted(self.alert_buffer),
            upgrades=sorted(self.upgrades),
            techs=sorted(self.techs),
            own_units=[[t, x, y] for t, x, y in self.own_units.values()],
            enemy_units=[[t, x, y] for t, x, y in self.observed.values()],
            enemy_total=len(self.enemy_alive),
        )
        self.alert_buffer.clear()
        return obs


def parse_trace(
    trace: Trace,
    player_id: int,
    n: int = DEFAULT_STRIDE,
    vocab: ActionVocabulary | None = None,
) -> ParsedSequence:
    if n <= 0:
        raise ValueError("stride must be positive")
    vocab = vocab or default_vocabulary()
    player = trace.player(player_id)
    actions = vocab.actions(player.race)

    state = _PlayerState(player_id)
    pairs: list[tuple[Observation, int]] = []
    prev_obs: Observation | None = None
    window_label: int | None = None
    ei = 0
    events = trace.events
    n_stops = trace.total_frames // n

    for k in range(n_stops + 1):
        t = k * n
        window_start = t - n
        while ei < len(events) and events[ei].frame <= t:
            ev = events[ei]
            if (
                window_label is None
                and isinstance(ev, ActionEvent)
                and ev.player_id == player_id
                and ev.frame > window_start
                and 0 <= ev.action_id < len(actions)
                and actions[ev.action_id].group in LABELED_GROUPS
            ):
                window_label = 1 + ev.action_id
            state.fold(ev)
            ei += 1
        obs = state.snapshot(t)
        if prev_obs is not None:
            pairs.append((prev_obs, NULL_LABEL if window_label is None else window_label))
        prev_obs = obs
        window_label = None

    return ParsedSequence(
        replay_id=trace.replay_id,
        player_id=player_id,
        race=player.race,
        result=player.result,
        n=n,
        total_frames=trace.total_frames,
        pairs=pairs,
    )


def parse_both(trace: Trace, n: int = DEFAULT_STRIDE,
               vocab: ActionVocabulary | None = None) -> list[ParsedSequence]:
    vocab = vocab or default_vocabulary()
    return [parse_trace(trace, pid, n, vocab) for pid in (1, 2)]


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def write_parsed(seq: ParsedSequence, path: str | Path) -> None:
    header = {
        "replay_id": seq.replay_id,
        "player_id": seq.player_id,
        "race": seq.race,
        "result": seq.result,
        "n": seq.n,
        "total_frames": seq.total_frames,
    }
    with open(path, "w") as f:
        f.write(_dumps(header) + "\n")
        for obs, label in seq.pairs:
            rec = asdict(obs)
            rec["label"] = label
            f.write(_dumps(rec) + "\n")


def read_parsed(path: str | Path) -> ParsedSequence:
    with open(path) as f:
        header = json.loads(f.readline())
        pairs = []
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            label = rec.pop("label")
            pairs.append((Observation(**rec), label))
    return ParsedSequence(pairs=pairs, **header)


def iter_parsed_pairs(path: str | Path) -> Iterator[tuple[Observation, int]]:
    """Stream (observation, label) pairs without keeping the file in memory."""
    with open(path) as f:
        f.readline()
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            label = rec.pop("label")
            yield Observation(**rec), label


def parsed_filename(replay_id: str, player_id: int) -> str:
    return f"{replay_id}.p{player_id}.parsed.jsonl"
