"""Staged dataset pipeline: filter -> parse -> extract -> split.

Layout under one working directory:

    traces/   input  <replay_id>.trace.jsonl
    parsed/   <replay_id>.p<k>.parsed.jsonl
    samples/  <replay_id>.p<k>.sample.jsonl
    dataset/  manifest.json
    ckpt/     training checkpoints
    reports/  metrics and curves

Every stage records finished work in stage_state.json keyed by input CRC-32.
A rerun skips items whose recorded input and output checksums still match,
redoes items with missing outputs, and refuses to run (naming the file) when
a checksum contradicts the recorded state, since silently mixing old and new
data would corrupt the dataset. Outputs are written to a .partial file and
renamed into place, so interrupted runs never leave half files behind.
Progress is reported as one JSON line per item per stage.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .dataset import (
    ManifestEntry,
    SampleSequence,
    file_crc32,
    sample_filename,
    split_dataset,
    write_manifest,
    write_sample,
)
from .features import balance_indices, featurize_parsed, featurize_spatial
from .parser import parse_both, parsed_filename, read_parsed, write_parsed
from .preprocess import filter_header
from .trace_model import Player, read_trace

STAGES = ("filter", "parse", "extract", "split")


class PipelineIntegrityError(RuntimeError):
    """Recorded state contradicts what is on disk."""


@dataclass
class PipelineConfig:
    workdir: str = "."
    stride: int = 8
    seed: int = 0
    balance_seed: int | None = None
    split_seed: int | None = None
    spatial: bool = False
    workers: int = 1
    quiet: bool = False

    @classmethod
    def from_sources(cls, file_values: dict | None = None,
                     flag_values: dict | None = None) -> "PipelineConfig":
        """Merge config sources: flags beat the config file beat defaults."""
        merged: dict = {}
        names = {f.name for f in fields(cls)}
        for src in (file_values or {}), (flag_values or {}):
            for k, v in src.items():
                if k not in names:
                    raise ValueError(f"unknown config key {k!r}")
                if v is not None:
                    merged[k] = v
        return cls(**merged)

    @property
    def root(self) -> Path:
        return Path(self.workdir)

    def dir(self, name: str) -> Path:
        return self.root / name

    def effective_balance_seed(self) -> int:
        return self.seed if self.balance_seed is None else self.balance_seed

    def effective_split_seed(self) -> int:
        return self.seed if self.split_seed is None else self.split_seed


def _log(cfg: PipelineConfig, **kv) -> None:
    if not cfg.quiet:
        sys.stdout.write(json.dumps(kv, separators=(",", ":")) + "\n")
        sys.stdout.flush()


class StageState:
    def __init__(self, path: Path):
        self.path = path
        if path.exists():
            self.data = json.loads(path.read_text())
        else:
            self.data = {}

    def stage(self, name: str) -> dict:
        return self.data.setdefault(name, {})

    def save(self) -> None:
        tmp = self.path.with_suffix(".json.partial")
        tmp.write_text(json.dumps(self.data, indent=1, sort_keys=True) + "\n")
        os.replace(tmp, self.path)


def _atomic(path: Path, write_fn) -> None:
    tmp = Path(str(path) + ".partial")
    write_fn(tmp)
    os.replace(tmp, path)


def _trace_paths(cfg: PipelineConfig) -> list[Path]:
    return sorted(cfg.dir("traces").glob("*.trace.jsonl"))


def _replay_id(trace_path: Path) -> str:
    return trace_path.name[:-len(".trace.jsonl")]


def _read_trace_header(path: Path) -> tuple[int, list[Player]]:
    with open(path) as f:
        header = json.loads(f.readline())
    players = [Player(**p) for p in header["players"]]
    return header["total_frames"], players


def stage_filter(cfg: PipelineConfig, state: StageState) -> list[Path]:
    """Apply the quality gate; returns trace paths that passed."""
    records = state.stage("filter")
    passed: list[Path] = []
    for path in _trace_paths(cfg):
        rid = _replay_id(path)
        crc = file_crc32(path)
        rec = records.get(rid)
        if rec is not None:
            if rec["crc"] != crc:
                raise PipelineIntegrityError(
                    f"{path}: trace changed since it was filtered "
                    f"(crc {crc} != recorded {rec['crc']})"
                )
        else:
            total_frames, players = _read_trace_header(path)
            result = filter_header(total_frames, players)
            rec = {
                "crc": crc,
                "status": "pass" if result.passed else "reject",
                "reasons": result.reasons,
            }
            records[rid] = rec
            _log(cfg, stage="filter", replay_id=rid, status=rec["status"],
                 reasons=rec["reasons"])
        if rec["status"] == "pass":
            passed.append(path)
    state.save()
    return passed


def _parse_one(args: tuple[str, int]) -> tuple[str, list[tuple[str, str]]]:
    """Worker: parse one trace file; returns (replay_id, [(file, crc), ...])."""
    trace_path, stride = args
    path = Path(trace_path)
    trace = read_trace(path)
    outputs = []
    for seq in parse_both(trace, n=stride):
        out = path.parent.parent / "parsed" / parsed_filename(
            seq.replay_id, seq.player_id
        )
        _atomic(out, lambda tmp, s=seq: write_parsed(s, tmp))
        outputs.append((out.name, file_crc32(out)))
    return _replay_id(path), outputs


def stage_parse(cfg: PipelineConfig, state: StageState,
                passed: list[Path]) -> list[Path]:
    records = state.stage("parse")
    filter_records = state.stage("filter")
    parsed_dir = cfg.dir("parsed")
    parsed_dir.mkdir(parents=True, exist_ok=True)

    pending: list[Path] = []
    outputs: list[Path] = []
    for path in passed:
        rid = _replay_id(path)
        crc = filter_records[rid]["crc"]
        rec = records.get(rid)
        if rec is not None and rec["crc_in"] != crc:
            raise PipelineIntegrityError(
                f"{path}: trace changed since it was parsed"
            )
        ok = rec is not None
        if ok:
            for name, out_crc in rec["outputs"]:
                out = parsed_dir / name
                if not out.exists():
                    ok = False
                    break
                if file_crc32(out) != out_crc:
                    raise PipelineIntegrityError(
                        f"{out}: parsed file does not match recorded checksum"
                    )
        if ok:
            outputs.extend(parsed_dir / name for name, _ in rec["outputs"])
        else:
            pending.append(path)

    jobs = [(str(p), cfg.stride) for p in pending]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_parse_one, jobs, chunksize=4))
    else:
        results = [_parse_one(j) for j in jobs]

    for (path, (rid, outs)) in zip(pending, results):
        records[rid] = {"crc_in": filter_records[rid]["crc"], "outputs": outs}
        outputs.extend(parsed_dir / name for name, _ in outs)
        _log(cfg, stage="parse", replay_id=rid, status="ok",
             outputs=[name for name, _ in outs])
    state.save()
    return sorted(outputs)


def _extract_one(args: tuple[str, int, bool]) -> tuple[str, str]:
    """Worker: featurize one parsed file; returns (sample name, crc)."""
    parsed_path, balance_seed, spatial = args
    path = Path(parsed_path)
    seq = read_parsed(path)
    X, y, frames = featurize_parsed(seq)
    salt = f"{seq.replay_id}.p{seq.player_id}"
    keep = balance_indices(y, balance_seed, salt)
    spatial_arr = None
    if spatial:
        trace_path = path.parent.parent / "traces" / f"{seq.replay_id}.trace.jsonl"
        with open(trace_path) as f:
            f.readline()
            hm = np.asarray(json.loads(f.readline())["height_map"], dtype=np.int32)
        tensors = [
            featurize_spatial(seq.pairs[i][0], seq.race, hm, seq.total_frames)
            for i in keep
        ]
        spatial_arr = np.asarray(tensors, dtype=np.float32)
    sample = SampleSequence(
        replay_id=seq.replay_id,
        player_id=seq.player_id,
        race=seq.race,
        result=seq.result,
        n=seq.n,
        total_frames=seq.total_frames,
        frames=frames[keep],
        labels=y[keep],
        globals=X[keep].astype(np.float32),
        spatial=spatial_arr,
    )
    out = path.parent.parent / "samples" / sample_filename(
        seq.replay_id, seq.player_id
    )
    _atomic(out, lambda tmp: write_sample(sample, tmp))
    return out.name, file_crc32(out)


def stage_extract(cfg: PipelineConfig, state: StageState,
                  parsed_paths: list[Path]) -> list[Path]:
    records = state.stage("extract")
    parse_records = state.stage("parse")
    samples_dir = cfg.dir("samples")
    samples_dir.mkdir(parents=True, exist_ok=True)

    parsed_crcs: dict[str, str] = {}
    for rec in parse_records.values():
        for name, crc in rec["outputs"]:
            parsed_crcs[name] = crc

    pending: list[Path] = []
    outputs: list[Path] = []
    for path in parsed_paths:
        key = path.name
        crc_in = parsed_crcs.get(key) or file_crc32(path)
        rec = records.get(key)
        if rec is not None and rec["crc_in"] != crc_in:
            raise PipelineIntegrityError(
                f"{path}: parsed file changed since features were extracted"
            )
        ok = rec is not None
        if ok:
            out = samples_dir / rec["output"]
            if not out.exists():
                ok = False
            elif file_crc32(out) != rec["crc_out"]:
                raise PipelineIntegrityError(
                    f"{out}: sample file does not match recorded checksum"
                )
        if ok:
            outputs.append(samples_dir / rec["output"])
        else:
            pending.append(path)

    jobs = [(str(p), cfg.effective_balance_seed(), cfg.spatial) for p in pending]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_extract_one, jobs, chunksize=4))
    else:
        results = [_extract_one(j) for j in jobs]

    for path, (name, crc) in zip(pending, results):
        records[path.name] = {
            "crc_in": parsed_crcs.get(path.name) or file_crc32(path),
            "output": name,
            "crc_out": crc,
        }
        outputs.append(samples_dir / name)
        _log(cfg, stage="extract", replay_id=path.name.split(".")[0],
             status="ok", output=name)
    state.save()
    return sorted(outputs)


def stage_split(cfg: PipelineConfig, state: StageState,
                sample_paths: list[Path]) -> Path:
    records = state.stage("split")
    dataset_dir = cfg.dir("dataset")
    dataset_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = dataset_dir / "manifest.json"

    heads = []
    for path in sorted(sample_paths):
        with open(path) as f:
            heads.append((path, json.loads(f.readline())))
    win_flags = [h["result"] == "Win" for _, h in heads]
    seed = cfg.effective_split_seed()
    assignment = split_dataset(win_flags, seed)

    entries = [
        ManifestEntry(
            replay_id=h["replay_id"],
            player_id=h["player_id"],
            result=h["result"],
            split=assignment[i],
            crc32=file_crc32(p),
        )
        for i, (p, h) in enumerate(heads)
    ]
    _atomic(manifest_path, lambda tmp: write_manifest(entries, tmp))
    records["seed"] = seed
    records["n_examples"] = len(entries)
    records["manifest_crc"] = file_crc32(manifest_path)
    state.save()
    counts = {s: sum(1 for e in entries if e.split == s)
              for s in ("train", "val", "test")}
    _log(cfg, stage="split", status="ok", **counts)
    return manifest_path


def run_pipeline(cfg: PipelineConfig, stages=STAGES) -> dict:
    """Run the requested stages in order; returns a summary dict."""
    for s in stages:
        if s not in STAGES:
            raise ValueError(f"unknown stage {s!r}")
    root = cfg.root
    root.mkdir(parents=True, exist_ok=True)
    for name in ("parsed", "samples", "dataset", "ckpt", "reports"):
        cfg.dir(name).mkdir(exist_ok=True)
    state = StageState(root / "stage_state.json")

    summary: dict = {}
    passed = stage_filter(cfg, state)
    summary["n_traces"] = len(_trace_paths(cfg))
    summary["n_passed"] = len(passed)
    if "parse" not in stages and "extract" not in stages and "split" not in stages:
        return summary
    parsed = stage_parse(cfg, state, passed)
    summary["n_parsed"] = len(parsed)
    if "extract" not in stages and "split" not in stages:
        return summary
    samples = stage_extract(cfg, state, parsed)
    summary["n_samples"] = len(samples)
    if "split" not in stages:
        return summary
    manifest = stage_split(cfg, state, samples)
    summary["manifest"] = str(manifest)
    return summary
