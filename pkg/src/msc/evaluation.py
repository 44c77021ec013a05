"""Accuracy reports sliced by match progress, plus scouting coverage.

Steps are bucketed by progress frame/total_frames: quartiles for accuracy
([0,.25), [.25,.5), [.5,.75), [.75,1]), deciles for scouting coverage. A
win-probability step counts as correct when thresholding at 0.5 recovers the
match result; a build-order step when the argmax label matches (argmax takes
the lowest index on ties).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dataset import SampleSequence, load_split
from .models import build_model
from .nn.checkpoint import load_checkpoint
from .parser import ParsedSequence
from .train import predict_sequences


def progress_bin(frame: int, total_frames: int, n_bins: int) -> int:
    q = frame / total_frames
    return min(n_bins - 1, int(q * n_bins))


def _binned_accuracy(correct_per_seq, seqs: list[SampleSequence], n_bins: int):
    hits = np.zeros(n_bins)
    counts = np.zeros(n_bins)
    for corr, s in zip(correct_per_seq, seqs):
        for c, frame in zip(corr, s.frames):
            b = progress_bin(int(frame), s.total_frames, n_bins)
            hits[b] += c
            counts[b] += 1
    bins = [float(hits[i] / counts[i]) if counts[i] else None for i in range(n_bins)]
    overall = float(hits.sum() / counts.sum()) if counts.sum() else None
    return overall, bins, int(counts.sum())


def win_report(preds: list[np.ndarray], seqs: list[SampleSequence]) -> dict:
    correct = [
        ((p >= 0.5) == s.win).astype(float) for p, s in zip(preds, seqs)
    ]
    overall, quartiles, n = _binned_accuracy(correct, seqs, 4)
    return {"task": "win", "overall": overall, "quartiles": quartiles,
            "n_steps": n}


def build_report(preds: list[np.ndarray], seqs: list[SampleSequence]) -> dict:
    correct = [
        (p == s.labels).astype(float) for p, s in zip(preds, seqs)
    ]
    overall, quartiles, n = _binned_accuracy(correct, seqs, 4)
    return {"task": "build", "overall": overall, "quartiles": quartiles,
            "n_steps": n}


def po_density_report(parsed_seqs: list[ParsedSequence]) -> dict:
    """Mean observed-enemy fraction per progress decile."""
    sums = np.zeros(10)
    counts = np.zeros(10)
    for seq in parsed_seqs:
        for obs, _label in seq.pairs:
            b = progress_bin(obs.frame, seq.total_frames, 10)
            sums[b] += len(obs.enemy_units) / max(obs.enemy_total, 1)
            counts[b] += 1
    deciles = [float(sums[i] / counts[i]) if counts[i] else None for i in range(10)]
    return {"deciles": deciles, "n_steps": int(counts.sum())}


def load_model(ckpt_path: str | Path):
    """Rebuild a model from a checkpoint and its .meta.json sidecar."""
    meta = json.loads(Path(str(ckpt_path) + ".meta.json").read_text())
    task = meta["task"]
    if task == "combined":
        task = "combined-win" if meta.get("n_out", 1) == 1 else "combined-build"
    model = build_model(
        task,
        width_scale=meta.get("width_scale", 1.0),
        seed=meta.get("seed", 0),
        n_labels=meta.get("n_labels", meta.get("n_out", 32)),
    )
    model.load_arrays(load_checkpoint(ckpt_path))
    return model, meta


def evaluate_checkpoint(
    ckpt_path: str | Path,
    manifest_path: str | Path,
    samples_dir: str | Path,
    split: str = "test",
) -> dict:
    model, meta = load_model(ckpt_path)
    seqs = load_split(manifest_path, samples_dir, split)
    preds = predict_sequences(model, seqs, meta["task"])
    if meta["task"] == "win":
        report = win_report(preds, seqs)
    else:
        report = build_report(preds, seqs)
    report["split"] = split
    report["n_sequences"] = len(seqs)
    report["checkpoint"] = str(ckpt_path)
    return report
