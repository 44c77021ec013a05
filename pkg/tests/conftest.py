"""Shared fixtures: hand-built traces and a small generated corpus."""

import numpy as np
import pytest

from msc.gen import GenConfig, generate_corpus
from msc.trace_model import MAP_SIZE, Player, Trace


def make_players(
    mmr: tuple[int, int] = (3000, 3100),
    apm: tuple[float, float] = (120.0, 90.0),
    winner: int = 1,
) -> list[Player]:
    return [
        Player(player_id=1, race="Terran", mmr=mmr[0], apm=apm[0],
               result="Win" if winner == 1 else "Loss"),
        Player(player_id=2, race="Terran", mmr=mmr[1], apm=apm[1],
               result="Win" if winner == 2 else "Loss"),
    ]


def make_trace(
    events,
    total_frames: int = 10400,
    replay_id: str = "trace0000",
    players: list[Player] | None = None,
) -> Trace:
    return Trace(
        replay_id=replay_id,
        map_name="FlatTest",
        total_frames=total_frames,
        players=players or make_players(),
        height_map=np.zeros((MAP_SIZE, MAP_SIZE), dtype=np.int64),
        events=sorted(events, key=lambda e: e.frame),
    )


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Six deterministic traces on disk, reused by pipeline-level tests."""
    out = tmp_path_factory.mktemp("corpus") / "traces"
    cfg = GenConfig(seed=404, n_traces=6, matchup="TvT")
    paths = generate_corpus(cfg, out)
    return out, paths
