"""Observation featurization and class balancing.

Global vector layout (65 dims, every entry scaled then clamped to [0, 1]):

    [frame] [minerals vespene minerals_collected vespene_collected]
    [alerts x4] [upgrades x4] [techs x4]
    [own unit counts x24] [observed enemy unit counts x24]

Spatial tensor layout (13 x 64 x 64, indexed [channel, x, y]):

    0 own mobile-unit density        1 observed enemy mobile-unit density
    2 own building density           3 observed enemy building density
    4 max visible unit type id       5/6/7 cell allegiance one-hot
    8 terrain height                 9 visibility around own units
    10 creep around own structures   11 own harvesting-structure density
    12 match progress (broadcast)
"""

from __future__ import annotations

import zlib

import numpy as np

from .nn.backend import kernels
from .parser import Observation, ParsedSequence
from .trace_model import MAP_SIZE, MAX_HEIGHT
from .vocab import (
    N_ALERTS,
    N_TECHS,
    N_UNIT_TYPES,
    N_UPGRADES,
    RACES,
    UNIT_TABLE,
)

MAX_FRAME = 2**17
MAX_RESOURCE = 100_000
MAX_UNIT_COUNT = 200
MAX_DENSITY = 8

GLOBAL_DIM = 1 + 4 + N_ALERTS + N_UPGRADES + N_TECHS + 2 * N_UNIT_TYPES
N_SPATIAL_CHANNELS = 13
VISION_RADIUS = 8
CREEP_RADIUS = 6

_OWN_COUNTS_OFF = 1 + 4 + N_ALERTS + N_UPGRADES + N_TECHS
_ENEMY_COUNTS_OFF = _OWN_COUNTS_OFF + N_UNIT_TYPES

_BUILDING_FLAGS = {
    race: np.array([u.is_building for u in UNIT_TABLE[race]])
    for race in RACES
}
_HARVESTER_FLAGS = {
    race: np.array([u.is_harvester for u in UNIT_TABLE[race]])
    for race in RACES
}


def featurize_global(obs: Observation) -> np.ndarray:
    v = np.zeros(GLOBAL_DIM)
    v[0] = obs.frame / MAX_FRAME
    v[1] = obs.minerals / MAX_RESOURCE
    v[2] = obs.vespene / MAX_RESOURCE
    v[3] = obs.minerals_collected / MAX_RESOURCE
    v[4] = obs.vespene_collected / MAX_RESOURCE
    for a in obs.alerts:
        if 0 <= a < N_ALERTS:
            v[5 + a] = 1.0
    for u in obs.upgrades:
        if 0 <= u < N_UPGRADES:
            v[5 + N_ALERTS + u] = 1.0
    for t in obs.techs:
        if 0 <= t < N_TECHS:
            v[5 + N_ALERTS + N_UPGRADES + t] = 1.0
    for t, _x, _y in obs.own_units:
        if 0 <= t < N_UNIT_TYPES:
            v[_OWN_COUNTS_OFF + t] += 1.0 / MAX_UNIT_COUNT
    for t, _x, _y in obs.enemy_units:
        if 0 <= t < N_UNIT_TYPES:
            v[_ENEMY_COUNTS_OFF + t] += 1.0 / MAX_UNIT_COUNT
    np.clip(v, 0.0, 1.0, out=v)
    return v


def _unit_arrays(units: list[list[int]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not units:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()
    arr = np.asarray(units, dtype=np.int64)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def featurize_spatial(
    obs: Observation,
    race: str,
    height_map: np.ndarray,
    total_frames: int,
) -> np.ndarray:
    k = kernels()
    out = np.zeros((N_SPATIAL_CHANNELS, MAP_SIZE, MAP_SIZE))

    ot, ox, oy = _unit_arrays(obs.own_units)
    et, ex, ey = _unit_arrays(obs.enemy_units)
    own_building = _BUILDING_FLAGS[race][ot] if len(ot) else np.zeros(0, dtype=bool)
    # Observed enemies are typed in the opponent's table; in mirror matchups it
    # is the same table, otherwise building ids still occupy the same id band.
    enemy_building = _BUILDING_FLAGS[race][et] if len(et) else np.zeros(0, dtype=bool)

    def density(xs, ys):
        if len(xs) == 0:
            return np.zeros((MAP_SIZE, MAP_SIZE))
        return k.scatter_add(xs, ys, MAP_SIZE)

    out[0] = density(ox[~own_building], oy[~own_building]) / MAX_DENSITY
    out[1] = density(ex[~enemy_building], ey[~enemy_building]) / MAX_DENSITY
    out[2] = density(ox[own_building], oy[own_building]) / MAX_DENSITY
    out[3] = density(ex[enemy_building], ey[enemy_building]) / MAX_DENSITY

    all_t = np.concatenate([ot, et])
    all_x = np.concatenate([ox, ex])
    all_y = np.concatenate([oy, ey])
    for t, x, y in zip(all_t, all_x, all_y):
        val = t / N_UNIT_TYPES
        if val > out[4, x, y]:
            out[4, x, y] = val

    friendly = np.zeros((MAP_SIZE, MAP_SIZE), dtype=bool)
    friendly[ox, oy] = True
    enemy = np.zeros((MAP_SIZE, MAP_SIZE), dtype=bool)
    enemy[ex, ey] = True
    out[5] = friendly
    out[6] = enemy & ~friendly
    out[7] = ~(friendly | enemy)

    out[8] = height_map / MAX_HEIGHT
    if len(ox):
        out[9] = k.paint_discs(ox, oy, VISION_RADIUS, MAP_SIZE)
    if race == "Zerg" and own_building.any():
        out[10] = k.paint_discs(ox[own_building], oy[own_building],
                                CREEP_RADIUS, MAP_SIZE)
    harv = _HARVESTER_FLAGS[race][ot] if len(ot) else np.zeros(0, dtype=bool)
    out[11] = density(ox[harv], oy[harv]) / MAX_DENSITY
    out[12] = min(obs.frame / total_frames, 1.0)

    np.clip(out, 0.0, 1.0, out=out)
    return out


def featurize_parsed(seq: ParsedSequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorize a parsed sequence: (features (T, 65), labels (T,), frames (T,))."""
    T = len(seq.pairs)
    X = np.zeros((T, GLOBAL_DIM))
    y = np.zeros(T, dtype=np.int64)
    frames = np.zeros(T, dtype=np.int64)
    for i, (obs, label) in enumerate(seq.pairs):
        X[i] = featurize_global(obs)
        y[i] = label
        frames[i] = obs.frame
    return X, y, frames


MIN_KEPT_NULLS = 10


def balance_rng(seed: int, salt: str) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([seed, zlib.crc32(salt.encode())])
    )


def balance_indices(labels: np.ndarray, seed: int, salt: str) -> np.ndarray:
    """Indices to keep so null steps roughly match labeled steps.

    Keeps every labeled step plus min(n_null, max(n_labeled, 10)) null steps
    chosen uniformly without replacement; original order is preserved. Running
    the selection twice is a no-op: a balanced sequence is returned whole.
    """
    labels = np.asarray(labels)
    null_idx = np.flatnonzero(labels == 0)
    act_idx = np.flatnonzero(labels != 0)
    n_keep = min(len(null_idx), max(len(act_idx), MIN_KEPT_NULLS))
    if n_keep == len(null_idx):
        return np.arange(len(labels))
    rng = balance_rng(seed, salt)
    kept_nulls = rng.choice(null_idx, size=n_keep, replace=False)
    return np.sort(np.concatenate([act_idx, kept_nulls]))
