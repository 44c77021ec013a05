"""Synthetic match trace generator.

Matches are simulated on a fixed 8-frame window clock with a deliberately
learnable macro structure:

* Mineral income is a constant per window (paused briefly after every paid
  action) and every high-level action costs the same fixed amount, so "an
  action happens in the next window" is exactly "the mineral bank crossed the
  cost threshold" in the current snapshot.
* Which action fires is the argmax of target-share scores computed from the
  player's own alive unit counts, so the choice is a function of observable
  state. A small substitution rate replaces the chosen action with a random
  one to keep the mapping noisy rather than exact.
* The winner is a fair coin per match, and every win-correlated mechanic
  (vespene income spread, loser attrition) is gated to the second half of the
  match. Early snapshots carry no outcome signal by construction.
* Scouting reveals a progress-driven fraction of the enemy army,
  oldest-unseen-first, so partial observability tightens as matches develop.

Nothing here depends on a game engine; the output is a self-consistent event
stream that the downstream parser treats like any recorded match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .trace_model import (
    MAP_SIZE,
    MAX_HEIGHT,
    ActionEvent,
    AlertEvent,
    EnemyLostEvent,
    EnemySightedEvent,
    Player,
    StatsEvent,
    TechCompleteEvent,
    Trace,
    UnitBornEvent,
    UnitDiedEvent,
    UpgradeCompleteEvent,
    write_trace,
)
from .vocab import ActionVocabulary, default_vocabulary

ALERT_UNDER_ATTACK = 0
ALERT_UNIT_LOST = 1
ALERT_RESEARCH_COMPLETE = 2
ALERT_UPGRADE_COMPLETE = 3

_MAP_NAMES = ("CinderFlats", "TwinRavines", "EchoBasin", "GlacierGate")

_MATCHUP_RACES = {
    "TvT": ("Terran", "Terran"),
    "TvP": ("Terran", "Protoss"),
    "TvZ": ("Terran", "Zerg"),
    "PvP": ("Protoss", "Protoss"),
    "PvZ": ("Protoss", "Zerg"),
    "ZvZ": ("Zerg", "Zerg"),
}

# Production actions: Build ids 0-9, Train ids 10-21, Morph ids 26-27. The
# produced unit type equals the action id for Build/Train and 22/23 for Morph.
_PROD_ACTIONS = tuple(range(22)) + (26, 27)
_PROD_TYPES = np.array([a if a < 22 else a - 4 for a in _PROD_ACTIONS])
_RESEARCH_ACTION_BASE = 22
_FREE_ACTIONS = (28, 29, 30)  # Cancel / Halt / Stop: no cost, no unit
_WORKER_TYPE = 10
_ARMY_TYPES = frozenset(range(11, 24))  # trainable army plus morph targets


def _prod_unit_type(action_id: int) -> int:
    return action_id if action_id < 22 else action_id - 4


def _target_shares() -> np.ndarray:
    w = np.zeros(len(_PROD_ACTIONS))
    for i, aid in enumerate(_PROD_ACTIONS):
        if aid < 10:
            w[i] = 0.006
        elif aid == _WORKER_TYPE:
            w[i] = 0.04
        elif aid == _WORKER_TYPE + 1:
            # One signature army unit dominates production, as a short
            # scripted build order would; keeps the label mix learnable.
            w[i] = 0.70
        elif aid < 22:
            w[i] = 0.015
        else:
            w[i] = 0.025
    return w / w.sum()


@dataclass
class GenConfig:
    seed: int = 0
    n_traces: int = 200
    matchup: str = "TvT"
    min_frames: int = 10200
    max_frames: int = 12600
    stride: int = 8
    # One window of mining covers one action, and each paid action stalls
    # mining for three windows: the bank cycles empty -> empty -> empty ->
    # full-and-spend, so snapshot minerals are a clean binary cue for whether
    # a window carries an action, and roughly a quarter of windows do.
    income: int = 100000
    cost: int = 100000
    stall_windows: int = 3
    vespene_base: int = 40
    vespene_spread: int = 120
    vespene_floor: int = 5
    noise_rate: float = 0.05
    camera_rate: float = 0.07
    army_cap: int = 16
    attrition_rate: float = 0.12
    attrition_start: float = 0.55
    research_thresholds: tuple[int, ...] = (15, 35, 60, 90)
    sight_churn: float = 0.01
    # Fraction of traces built to fail the quality gate (length/APM/MMR).
    reject_fraction: float = 0.0


class _SimPlayer:
    def __init__(self, player_id: int, base_xy: tuple[int, int]):
        self.player_id = player_id
        self.base_xy = base_xy
        self.bank = 0
        self.collected = 0
        self.vespene = 0
        self.paid_actions = 0
        self.pending_research: list[int] = []
        self.done_research: set[int] = set()
        self.stall = 0  # windows of mining downtime left
        self.units: dict[int, tuple[int, int, int]] = {}  # uid -> (type, x, y)
        self.counts = np.zeros(24, dtype=np.int64)
        self.army_uids: list[int] = []  # birth order, army types only
        self.observed: set[int] = set()  # enemy uids currently sighted
        self.attrition_acc = 0.0


def _jitter_pos(rng, cx: float, cy: float, radius: int) -> tuple[int, int]:
    x = int(round(cx)) + int(rng.integers(-radius, radius + 1))
    y = int(round(cy)) + int(rng.integers(-radius, radius + 1))
    return min(max(x, 0), MAP_SIZE - 1), min(max(y, 0), MAP_SIZE - 1)


def _spawn_pos(rng, p: _SimPlayer, unit_type: int, q: float) -> tuple[int, int]:
    bx, by = p.base_xy
    if unit_type in _ARMY_TYPES:
        # The front line creeps toward the map center as the match progresses.
        adv = 0.2 + 0.6 * q
        cx = bx + (MAP_SIZE / 2 - bx) * adv
        cy = by + (MAP_SIZE / 2 - by) * adv
        return _jitter_pos(rng, cx, cy, 3)
    return _jitter_pos(rng, bx, by, 4)


def _sight_fraction(q: float) -> float:
    return min(0.95, 0.08 + 0.87 * q**1.4)


def generate_trace(cfg: GenConfig, index: int,
                   vocab: ActionVocabulary | None = None) -> Trace:
    """Build one deterministic trace from (cfg.seed, index)."""
    vocab = vocab or default_vocabulary()
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index]))
    races = _MATCHUP_RACES[cfg.matchup]

    reject_mode = None
    if rng.random() < cfg.reject_fraction:
        reject_mode = ("short", "apm", "mmr")[int(rng.integers(3))]

    if reject_mode == "short":
        total_frames = int(rng.integers(6000, 10001))
    else:
        total_frames = int(rng.integers(cfg.min_frames, cfg.max_frames + 1))

    winner = 1 + int(rng.random() < 0.5)
    apm = [round(float(rng.uniform(40, 220)), 1) for _ in range(2)]
    mmr = [int(rng.integers(2600, 4401)) for _ in range(2)]
    if reject_mode == "apm":
        apm[int(rng.integers(2))] = round(float(rng.uniform(2, 10)), 1)
    elif reject_mode == "mmr":
        mmr[int(rng.integers(2))] = int(rng.integers(300, 1001))

    players = [
        Player(pid, races[pid - 1], mmr[pid - 1], apm[pid - 1],
               "Win" if pid == winner else "Loss")
        for pid in (1, 2)
    ]

    height_map = rng.integers(0, MAX_HEIGHT + 1, size=(MAP_SIZE, MAP_SIZE))
    height_map = height_map.astype(np.int32)

    shares = _target_shares()
    sims = {1: _SimPlayer(1, (8, 8)), 2: _SimPlayer(2, (55, 55))}
    events: list = []
    next_uid = 1

    def born(p: _SimPlayer, unit_type: int, frame: int, xy: tuple[int, int]) -> None:
        nonlocal next_uid
        uid = next_uid
        next_uid += 1
        p.units[uid] = (unit_type, xy[0], xy[1])
        p.counts[unit_type] += 1
        if unit_type in _ARMY_TYPES:
            p.army_uids.append(uid)
        events.append(UnitBornEvent(frame, p.player_id, unit_type, uid, *xy))

    def kill(p: _SimPlayer, enemy: _SimPlayer, uid: int, frame: int) -> None:
        unit_type, x, y = p.units.pop(uid)
        p.counts[unit_type] -= 1
        if uid in p.army_uids:
            p.army_uids.remove(uid)
        enemy.observed.discard(uid)
        events.append(UnitDiedEvent(frame, p.player_id, unit_type, uid, x, y))

    # Starting base and workers, visible in the very first snapshot.
    for p in sims.values():
        born(p, 0, 0, p.base_xy)
        for _ in range(6):
            born(p, _WORKER_TYPE, 0, _jitter_pos(rng, *p.base_xy, 3))
        events.append(StatsEvent(0, p.player_id, 0, 0, 0, 0))

    n_windows = max(0, (total_frames - 7) // cfg.stride)
    upgrade_windows = {
        max(1, int(n_windows * (0.25 + 0.2 * i))): i for i in range(4)
    }

    for k in range(1, n_windows + 1):
        base_frame = k * cfg.stride
        q = base_frame / total_frames
        ramp = max(0.0, 2.0 * q - 1.0)

        # Income and the snapshot every window. Mining pauses while the
        # supply line recovers from the last paid action.
        for pid in (1, 2):
            p = sims[pid]
            if p.stall > 0:
                p.stall -= 1
            else:
                p.bank += cfg.income
                p.collected += cfg.income
            if pid == winner:
                vinc = cfg.vespene_base + int(cfg.vespene_spread * ramp)
            else:
                vinc = max(cfg.vespene_floor,
                           cfg.vespene_base - int(cfg.vespene_spread * ramp))
            p.vespene += vinc
            events.append(StatsEvent(base_frame, pid, p.bank, p.vespene,
                                     p.collected, p.vespene))

        if k in upgrade_windows:
            uid_upg = upgrade_windows[k]
            for pid in (1, 2):
                events.append(UpgradeCompleteEvent(base_frame + 1, pid, uid_upg))
                events.append(AlertEvent(base_frame + 1, pid,
                                         ALERT_UPGRADE_COMPLETE))

        # Low-level actions the parser must skip over.
        for pid in (1, 2):
            if rng.random() < cfg.camera_rate:
                events.append(ActionEvent(base_frame + 2, pid, -1))

        # Scouting: drop a few sighted units, then reveal up to the target.
        for pid in (1, 2):
            p, enemy = sims[pid], sims[3 - pid]
            if p.observed and cfg.sight_churn > 0:
                for uid in sorted(p.observed):
                    if rng.random() < cfg.sight_churn:
                        p.observed.discard(uid)
                        events.append(EnemyLostEvent(base_frame + 3, pid, uid))
            target = int(_sight_fraction(q) * len(enemy.units))
            need = target - len(p.observed)
            if need > 0:
                unseen = sorted(u for u in enemy.units if u not in p.observed)
                for uid in unseen[:need]:
                    ut, x, y = enemy.units[uid]
                    p.observed.add(uid)
                    events.append(EnemySightedEvent(base_frame + 3, pid, ut, uid, x, y))

        # A production action fires exactly when the snapshot bank covers it.
        for pid in (1, 2):
            p = sims[pid]
            if p.bank < cfg.cost:
                continue
            if p.pending_research:
                chosen = _RESEARCH_ACTION_BASE + p.pending_research[0]
            else:
                counts = p.counts[_PROD_TYPES]
                scores = shares * (counts.sum() + 1) - counts
                chosen = _PROD_ACTIONS[int(np.argmax(scores))]
            if rng.random() < cfg.noise_rate:
                pool = _PROD_ACTIONS + _FREE_ACTIONS
                chosen = pool[int(rng.integers(len(pool)))]
            events.append(ActionEvent(base_frame + 4, pid, chosen))
            if chosen in _FREE_ACTIONS:
                continue
            p.bank -= cfg.cost
            p.paid_actions += 1
            p.stall = cfg.stall_windows
            if chosen >= _RESEARCH_ACTION_BASE and chosen < 26:
                tech = chosen - _RESEARCH_ACTION_BASE
                if p.pending_research and p.pending_research[0] == tech:
                    p.pending_research.pop(0)
                p.done_research.add(tech)
                events.append(TechCompleteEvent(base_frame + 6, pid, tech))
                events.append(AlertEvent(base_frame + 7, pid,
                                         ALERT_RESEARCH_COMPLETE))
            else:
                ut = _prod_unit_type(chosen)
                born(p, ut, base_frame + 6, _spawn_pos(rng, p, ut, q))
            for i, thresh in enumerate(cfg.research_thresholds):
                if (p.paid_actions >= thresh and i not in p.done_research
                        and i not in p.pending_research):
                    p.pending_research.append(i)

        # Army-size cap: trading armies shed the oldest units evenly.
        for pid in (1, 2):
            p, enemy = sims[pid], sims[3 - pid]
            lost = False
            while len(p.army_uids) > cfg.army_cap:
                kill(p, enemy, p.army_uids[0], base_frame + 6)
                lost = True
            if lost:
                events.append(AlertEvent(base_frame + 7, pid, ALERT_UNIT_LOST))

        # Second-half attrition bleeds the losing side's army.
        loser = sims[3 - winner]
        if q > cfg.attrition_start and loser.army_uids:
            h = cfg.attrition_rate * (q - cfg.attrition_start) / (1 - cfg.attrition_start)
            loser.attrition_acc += h * len(loser.army_uids)
            n_kill = int(loser.attrition_acc)
            if n_kill > 0:
                loser.attrition_acc -= n_kill
                winner_sim = sims[winner]
                for _ in range(min(n_kill, len(loser.army_uids))):
                    kill(loser, winner_sim, loser.army_uids[0], base_frame + 6)
                events.append(AlertEvent(base_frame + 7, loser.player_id,
                                         ALERT_UNDER_ATTACK))
                events.append(AlertEvent(base_frame + 7, loser.player_id,
                                         ALERT_UNIT_LOST))

    # Interleave the two players' same-window events into frame order.
    events.sort(key=lambda ev: ev.frame)
    return Trace(
        replay_id=f"r{index:05d}",
        map_name=_MAP_NAMES[int(rng.integers(len(_MAP_NAMES)))],
        total_frames=total_frames,
        players=players,
        height_map=height_map,
        events=events,
    )


def generate_corpus(cfg: GenConfig, out_dir: str | Path) -> list[Path]:
    """Write cfg.n_traces trace files into out_dir; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab = default_vocabulary()
    paths = []
    for index in range(cfg.n_traces):
        trace = generate_trace(cfg, index, vocab)
        path = out / f"{trace.replay_id}.trace.jsonl"
        write_trace(trace, path)
        paths.append(path)
    return paths
