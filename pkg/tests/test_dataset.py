"""Sample shards, 7:1:2 splitting, and the checksum manifest."""

import json
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msc.dataset import (
    ManifestEntry,
    SampleSequence,
    SPLIT_NAMES,
    file_crc32,
    load_split,
    read_manifest,
    read_sample,
    sample_filename,
    split_dataset,
    split_totals,
    write_manifest,
    write_sample,
)
from msc.features import GLOBAL_DIM


def make_sample(replay_id="r0001", player_id=1, T=7, seed=0,
                with_spatial=False) -> SampleSequence:
    rng = np.random.default_rng(seed)
    spatial = None
    if with_spatial:
        spatial = rng.random((T, 2, 4, 4), dtype=np.float32)
    return SampleSequence(
        replay_id=replay_id,
        player_id=player_id,
        race="Terran",
        result="Win" if player_id == 1 else "Loss",
        n=8,
        total_frames=usable_frames(T),
        frames=np.arange(T, dtype=np.int64) * 8,
        labels=rng.integers(0, 32, T),
        globals=rng.random((T, GLOBAL_DIM), dtype=np.float32),
        spatial=spatial,
    )


def usable_frames(T: int) -> int:
    return 8 * (T + 1)


def test_split_totals_hand_cases():
    assert split_totals(10) == (7, 1, 2)
    assert split_totals(100) == (70, 10, 20)
    assert split_totals(0) == (0, 0, 0)
    assert split_totals(1) == (1, 0, 0)     # remainder tie goes to train
    assert split_totals(5) == (4, 0, 1)
    assert split_totals(37) == (26, 4, 7)
    assert split_totals(1001) == (701, 100, 200)


@given(n=st.integers(0, 5000))
def test_split_totals_within_one_of_exact(n):
    totals = split_totals(n)
    assert sum(totals) == n
    for size, ratio in zip(totals, (0.7, 0.1, 0.2)):
        assert abs(size - n * ratio) < 1.0


def test_split_assignment_invariants():
    for n in (10, 37, 100, 1001):
        for seed in range(20):
            flags = [i % 2 == 0 for i in range(n)]
            names = split_dataset(flags, seed)
            assert len(names) == n
            totals = split_totals(n)
            for name, size in zip(SPLIT_NAMES, totals):
                members = [i for i, s in enumerate(names) if s == name]
                assert len(members) == size
                wins = sum(flags[i] for i in members)
                assert abs(wins - (size - wins)) <= 1, (n, seed, name)


def test_split_is_deterministic_and_seed_sensitive():
    flags = [i % 2 == 0 for i in range(40)]
    a = split_dataset(flags, 3)
    b = split_dataset(flags, 3)
    c = split_dataset(flags, 4)
    assert a == b
    assert a != c


@given(
    flags=st.lists(st.booleans(), min_size=0, max_size=400),
    seed=st.integers(0, 2**31),
)
@settings(max_examples=100, deadline=None)
def test_split_handles_any_outcome_mix(flags, seed):
    names = split_dataset(flags, seed)
    assert set(names) <= set(SPLIT_NAMES)
    assert names.count("") == 0
    totals = split_totals(len(flags))
    for name, size in zip(SPLIT_NAMES, totals):
        assert names.count(name) == size
    # With an even pool of each outcome the imbalance bound is hard; with a
    # skewed pool each split gets as close to half as the pool allows.
    n_win = sum(flags)
    n_lose = len(flags) - n_win
    if n_win == n_lose:
        for name, size in zip(SPLIT_NAMES, totals):
            wins = sum(f for f, s in zip(flags, names) if s == name)
            assert abs(2 * wins - size) <= 1


def test_sample_round_trip(tmp_path):
    seq = make_sample(T=9, with_spatial=True)
    path = tmp_path / sample_filename(seq.replay_id, seq.player_id)
    write_sample(seq, path)
    back = read_sample(path, spatial_shape=(2, 4, 4))
    assert back.replay_id == seq.replay_id
    assert back.player_id == seq.player_id
    assert back.race == seq.race
    assert back.result == seq.result
    assert back.n == seq.n
    assert back.total_frames == seq.total_frames
    np.testing.assert_array_equal(back.frames, seq.frames)
    np.testing.assert_array_equal(back.labels, seq.labels)
    np.testing.assert_array_equal(back.globals, seq.globals)
    np.testing.assert_array_equal(back.spatial, seq.spatial)
    assert back.globals.dtype == np.float32


def test_sample_write_read_write_is_byte_stable(tmp_path):
    seq = make_sample(T=20, seed=3)
    p1 = tmp_path / "a.jsonl"
    p2 = tmp_path / "b.jsonl"
    write_sample(seq, p1)
    write_sample(read_sample(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_sample_floats_use_shortest_float32_form(tmp_path):
    seq = make_sample(T=1)
    seq.globals = np.array([[np.float32(0.1)] * GLOBAL_DIM], dtype=np.float32)
    seq.labels = np.array([0])
    seq.frames = np.array([0])
    path = tmp_path / "c.jsonl"
    write_sample(seq, path)
    line = path.read_text().splitlines()[1]
    assert '"global":[0.1,' in line
    rec = json.loads(line)
    assert np.float32(rec["global"][0]) == np.float32(0.1)


def test_sample_integer_valued_floats_keep_a_decimal_point(tmp_path):
    seq = make_sample(T=1)
    seq.globals = np.zeros((1, GLOBAL_DIM), dtype=np.float32)
    seq.globals[0, 0] = 1.0
    path = tmp_path / "d.jsonl"
    write_sample(seq, path)
    assert '"global":[1.0,0.0,' in path.read_text().splitlines()[1]


def test_empty_sample_round_trip(tmp_path):
    seq = make_sample(T=0)
    path = tmp_path / "e.jsonl"
    write_sample(seq, path)
    back = read_sample(path)
    assert len(back.labels) == 0
    assert back.globals.shape == (0, GLOBAL_DIM)


def test_file_crc32_known_value(tmp_path):
    path = tmp_path / "f.bin"
    path.write_bytes(b"hello")
    assert file_crc32(path) == f"{zlib.crc32(b'hello'):08x}"


def test_manifest_round_trip_and_ordering(tmp_path):
    entries = [
        ManifestEntry("r0002", 1, "Win", "train", "aaaaaaaa"),
        ManifestEntry("r0001", 2, "Loss", "val", "bbbbbbbb"),
        ManifestEntry("r0001", 1, "Win", "test", "cccccccc"),
    ]
    path = tmp_path / "manifest.json"
    write_manifest(entries, path)
    back = read_manifest(path)
    assert [(e.replay_id, e.player_id) for e in back] == [
        ("r0001", 1), ("r0001", 2), ("r0002", 1)]
    assert back[0].crc32 == "cccccccc"


def test_load_split_filters_and_verifies(tmp_path):
    samples = tmp_path / "samples"
    samples.mkdir()
    entries = []
    for rid, pid, split in [("r0001", 1, "train"), ("r0001", 2, "val"),
                            ("r0002", 1, "train")]:
        seq = make_sample(replay_id=rid, player_id=pid, T=4)
        path = samples / sample_filename(rid, pid)
        write_sample(seq, path)
        entries.append(ManifestEntry(rid, pid, seq.result, split,
                                     file_crc32(path)))
    manifest = tmp_path / "manifest.json"
    write_manifest(entries, manifest)

    train = load_split(manifest, samples, "train", verify_crc=True)
    assert [(s.replay_id, s.player_id) for s in train] == [
        ("r0001", 1), ("r0002", 1)]
    assert len(load_split(manifest, samples, "val")) == 1
    assert len(load_split(manifest, samples, "test")) == 0

    with pytest.raises(ValueError):
        load_split(manifest, samples, "holdout")

    # Tampering is caught when verification is requested.
    victim = samples / sample_filename("r0002", 1)
    victim.write_text(victim.read_text().replace("Terran", "Zerg"))
    with pytest.raises(ValueError, match="checksum"):
        load_split(manifest, samples, "train", verify_crc=True)
