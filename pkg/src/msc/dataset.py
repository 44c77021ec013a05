"""Feature sample files, outcome-balanced splitting, and the dataset manifest.

Sample files mirror parsed files: a JSON header line, then one line per kept
step carrying the step's frame, label, and global feature vector. Feature
floats are written as the shortest decimal that round-trips through float32,
so files stay reasonably small and re-reading reproduces the exact stored
values. The optional spatial tensor is embedded as base64 float32 bytes.

Splitting is 7:1:2 by example count (largest-remainder rounding, ties in
train/val/test order) with winners and losers interleaved so every split
stays outcome-balanced to within one example.
"""

from __future__ import annotations

import base64
import json
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import GLOBAL_DIM, N_SPATIAL_CHANNELS
from .trace_model import MAP_SIZE

SPLIT_NAMES = ("train", "val", "test")
SPLIT_RATIOS = (0.7, 0.1, 0.2)


@dataclass
class SampleSequence:
    replay_id: str
    player_id: int
    race: str
    result: str
    n: int
    total_frames: int
    frames: np.ndarray    # (T,) int64
    labels: np.ndarray    # (T,) int64
    globals: np.ndarray   # (T, GLOBAL_DIM) float32
    spatial: np.ndarray | None = None  # (T, C, S, S) float32 when stored

    @property
    def win(self) -> bool:
        return self.result == "Win"


def sample_filename(replay_id: str, player_id: int) -> str:
    return f"{replay_id}.p{player_id}.sample.jsonl"


def _f32_repr(value: float, cache: dict[float, str]) -> str:
    s = cache.get(value)
    if s is None:
        s = np.format_float_positional(np.float32(value), unique=True)
        if s.endswith("."):
            s += "0"
        cache[value] = s
    return s


def write_sample(seq: SampleSequence, path: str | Path) -> None:
    header = {
        "replay_id": seq.replay_id,
        "player_id": seq.player_id,
        "race": seq.race,
        "result": seq.result,
        "n": seq.n,
        "total_frames": seq.total_frames,
    }
    cache: dict[float, str] = {}
    with open(path, "w") as f:
        f.write(json.dumps(header, separators=(",", ":")) + "\n")
        for i in range(len(seq.frames)):
            gl = ",".join(_f32_repr(float(v), cache) for v in seq.globals[i])
            line = (f'{{"frame":{int(seq.frames[i])},"label":{int(seq.labels[i])},'
                    f'"global":[{gl}]')
            if seq.spatial is not None:
                blob = base64.b64encode(
                    np.ascontiguousarray(seq.spatial[i], dtype="<f4").tobytes()
                ).decode("ascii")
                line += f',"spatial":"{blob}"'
            f.write(line + "}\n")


def read_sample(path: str | Path,
                spatial_shape: tuple[int, ...] | None = None) -> SampleSequence:
    """Read one sample file; spatial blobs default to the map tensor shape."""
    with open(path) as f:
        header = json.loads(f.readline())
        frames, labels, rows, spatials = [], [], [], []
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            frames.append(rec["frame"])
            labels.append(rec["label"])
            rows.append(rec["global"])
            if "spatial" in rec:
                arr = np.frombuffer(base64.b64decode(rec["spatial"]), dtype="<f4")
                spatials.append(arr)
    globals_arr = np.asarray(rows, dtype=np.float32)
    if globals_arr.size == 0:
        globals_arr = np.zeros((0, GLOBAL_DIM), dtype=np.float32)
    spatial = None
    if spatials:
        spatial = np.stack(spatials)
        shape = spatial_shape
        if shape is None:
            shape = (N_SPATIAL_CHANNELS, MAP_SIZE, MAP_SIZE)
        spatial = spatial.reshape((len(spatials), *shape))
    return SampleSequence(
        frames=np.asarray(frames, dtype=np.int64),
        labels=np.asarray(labels, dtype=np.int64),
        globals=globals_arr,
        spatial=spatial,
        **header,
    )


def split_totals(n: int) -> tuple[int, int, int]:
    """Largest-remainder 7:1:2 split of n items; ties favor earlier splits."""
    exact = [n * r for r in SPLIT_RATIOS]
    floors = [int(x) for x in exact]
    remainder = n - sum(floors)
    order = sorted(range(3), key=lambda i: (-(exact[i] - floors[i]), i))
    for i in order[:remainder]:
        floors[i] += 1
    return tuple(floors)


def split_dataset(win_flags: Sequence[bool], seed: int) -> list[str]:
    """Assign one split name per example, balancing outcomes within splits.

    Split sizes follow split_totals. Each split receives floor(size/2)
    winners, and the winners left over after those quotas go to odd-sized
    splits in train/val/test order; losers fill the rest. Winner and loser
    pools are shuffled independently with the given seed, so membership is
    random but the counts are exact.
    """
    flags = np.asarray(win_flags, dtype=bool)
    n = len(flags)
    totals = split_totals(n)
    win_idx = np.flatnonzero(flags)
    lose_idx = np.flatnonzero(~flags)

    base = [t // 2 for t in totals]
    extras = len(win_idx) - sum(base)
    wins_per_split = list(base)
    for i in range(3):
        if extras <= 0:
            break
        if totals[i] % 2 == 1:
            wins_per_split[i] += 1
            extras -= 1
    # Pathologically unbalanced inputs: park the overflow in split order.
    i = 0
    while extras > 0:
        if wins_per_split[i] < totals[i]:
            wins_per_split[i] += 1
            extras -= 1
        else:
            i += 1

    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    win_order = win_idx[rng.permutation(len(win_idx))]
    lose_order = lose_idx[rng.permutation(len(lose_idx))]

    assignment = [""] * n
    wi = li = 0
    for s, name in enumerate(SPLIT_NAMES):
        nw = min(wins_per_split[s], len(win_order) - wi)
        nl = totals[s] - nw
        for idx in win_order[wi:wi + nw]:
            assignment[idx] = name
        wi += nw
        for idx in lose_order[li:li + nl]:
            assignment[idx] = name
        li += nl
    return assignment


def file_crc32(path: str | Path) -> str:
    crc = 0
    with open(path, "rb") as f:
        while True:
            chunk = f.read(1 << 20)
            if not chunk:
                break
            crc = zlib.crc32(chunk, crc)
    return f"{crc:08x}"


@dataclass
class ManifestEntry:
    replay_id: str
    player_id: int
    result: str
    split: str
    crc32: str


def write_manifest(entries: list[ManifestEntry], path: str | Path) -> None:
    payload = {
        "entries": [
            {
                "replay_id": e.replay_id,
                "player_id": e.player_id,
                "result": e.result,
                "split": e.split,
                "crc32": e.crc32,
            }
            for e in sorted(entries, key=lambda e: (e.replay_id, e.player_id))
        ]
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    raw = json.loads(Path(path).read_text())
    return [ManifestEntry(**e) for e in raw["entries"]]


def load_split(
    manifest_path: str | Path,
    samples_dir: str | Path,
    split: str,
    verify_crc: bool = False,
) -> list[SampleSequence]:
    """Read every sample sequence assigned to one split."""
    if split not in SPLIT_NAMES:
        raise ValueError(f"unknown split {split!r}")
    samples_dir = Path(samples_dir)
    out = []
    for e in read_manifest(manifest_path):
        if e.split != split:
            continue
        path = samples_dir / sample_filename(e.replay_id, e.player_id)
        if verify_crc and file_crc32(path) != e.crc32:
            raise ValueError(f"{path}: checksum mismatch against manifest")
        out.append(read_sample(path))
    return out
