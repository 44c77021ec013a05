"""Sequence-model training with truncated backprop through time.

Sequences are batched with zero padding and a validity mask, then processed
in fixed-length segments: the hidden state VALUE carries across segment
boundaries, gradients do not. One optimizer step happens per segment. The
learning rate halves every epoch, each epoch reshuffles with its own derived
seed, and a checkpoint plus metrics row is written per epoch, so a rerun with
the same inputs reproduces the same bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import SampleSequence
from .features import GLOBAL_DIM
from .models import build_model
from .nn.checkpoint import save_checkpoint
from .nn.losses import bce_loss, nll_loss
from .nn.optim import Adam

DEFAULT_BATCH = 256
DEFAULT_TBPTT = 20
DEFAULT_LR = 1e-3


@dataclass
class TrainConfig:
    task: str = "win"  # "win" or "build"
    width_scale: float = 1.0
    epochs: int = 5
    batch_size: int = DEFAULT_BATCH
    tbptt: int = DEFAULT_TBPTT
    lr0: float = DEFAULT_LR
    seed: int = 0
    n_labels: int = 32


@dataclass
class EpochRow:
    epoch: int
    split: str
    loss: float
    accuracy: float


def lr_for_epoch(lr0: float, epoch: int) -> float:
    return lr0 / (2.0**epoch)


def _build_batch(seqs: list[SampleSequence], task: str):
    B = len(seqs)
    T = max(len(s.labels) for s in seqs)
    X = np.zeros((T, B, GLOBAL_DIM))
    mask = np.zeros((T, B))
    for j, s in enumerate(seqs):
        t = len(s.labels)
        X[:t, j] = s.globals.astype(np.float64)
        mask[:t, j] = 1.0
    if task == "win":
        target = np.zeros((T, B, 1))
        for j, s in enumerate(seqs):
            target[:, j, 0] = 1.0 if s.win else 0.0
        return X, mask, target
    labels = np.zeros((T, B), dtype=np.int64)
    for j, s in enumerate(seqs):
        labels[:len(s.labels), j] = s.labels
    return X, mask, labels


def _segment_metrics(task: str, out, target, mask_seg):
    if task == "win":
        pred = out[..., 0] >= 0.5
        truth = target[..., 0] >= 0.5
        correct = float(((pred == truth) * mask_seg).sum())
    else:
        pred = np.argmax(out, axis=-1)
        correct = float(((pred == target) * mask_seg).sum())
    return correct


def run_epoch(
    model,
    opt: Adam | None,
    seqs: list[SampleSequence],
    cfg: TrainConfig,
) -> tuple[float, float]:
    """One pass over seqs in the given order; trains when opt is provided."""
    total_loss = 0.0
    total_correct = 0.0
    total_steps = 0.0
    for start in range(0, len(seqs), cfg.batch_size):
        batch = seqs[start:start + cfg.batch_size]
        X, mask, target = _build_batch(batch, cfg.task)
        T = X.shape[0]
        state = None
        for s0 in range(0, T, cfg.tbptt):
            s1 = min(s0 + cfg.tbptt, T)
            xs = X[s0:s1]
            ms = mask[s0:s1]
            valid = float(ms.sum())
            if opt is not None:
                model.zero_grads()
            out, state = model.forward(xs, state)
            if cfg.task == "win":
                loss, dout = bce_loss(out, target[s0:s1], ms[..., None])
                correct = _segment_metrics("win", out, target[s0:s1], ms)
            else:
                loss, dout = nll_loss(out, target[s0:s1], ms)
                correct = _segment_metrics("build", out, target[s0:s1], ms)
            if opt is not None and valid > 0:
                model.backward(dout)
                opt.step()
            total_loss += loss * valid
            total_correct += correct
            total_steps += valid
    if total_steps == 0:
        return 0.0, 0.0
    return total_loss / total_steps, total_correct / total_steps


def checkpoint_name(task: str, width_scale: float, epoch: int) -> str:
    return f"{task}_w{width_scale:g}_e{epoch}.mscw"


def save_model(model, path: str | Path, extra_meta: dict | None = None) -> None:
    save_checkpoint(path, model.to_arrays())
    meta = dict(model.spec_dict())
    if extra_meta:
        meta.update(extra_meta)
    Path(str(path) + ".meta.json").write_text(
        json.dumps(meta, indent=1, sort_keys=True) + "\n"
    )


def train_model(
    cfg: TrainConfig,
    train_seqs: list[SampleSequence],
    val_seqs: list[SampleSequence],
    ckpt_dir: str | Path,
    curves_path: str | Path | None = None,
):
    """Train per cfg; returns (model, rows). Writes per-epoch checkpoints."""
    ckpt_dir = Path(ckpt_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    model = build_model(cfg.task, cfg.width_scale, cfg.seed, cfg.n_labels)
    opt = Adam(model.param_items(), lr=cfg.lr0)
    rows: list[EpochRow] = []
    for epoch in range(cfg.epochs):
        opt.lr = lr_for_epoch(cfg.lr0, epoch)
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, epoch]))
        order = rng.permutation(len(train_seqs))
        shuffled = [train_seqs[i] for i in order]
        tr_loss, tr_acc = run_epoch(model, opt, shuffled, cfg)
        rows.append(EpochRow(epoch, "train", tr_loss, tr_acc))
        if val_seqs:
            vl_loss, vl_acc = run_epoch(model, None, val_seqs, cfg)
            rows.append(EpochRow(epoch, "val", vl_loss, vl_acc))
        save_model(
            model,
            ckpt_dir / checkpoint_name(cfg.task, cfg.width_scale, epoch),
            {"epoch": epoch, "seed": cfg.seed},
        )
    if curves_path is not None:
        write_curves(rows, curves_path)
    return model, rows


def write_curves(rows: list[EpochRow], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "split", "loss", "accuracy"])
        for r in rows:
            w.writerow([r.epoch, r.split, f"{r.loss:.6f}", f"{r.accuracy:.6f}"])


def predict_sequences(
    model,
    seqs: list[SampleSequence],
    task: str,
    batch_size: int = DEFAULT_BATCH,
    tbptt: int = DEFAULT_TBPTT,
) -> list[np.ndarray]:
    """Per-step outputs for each sequence: win probability or label argmax."""
    results: list[np.ndarray] = [None] * len(seqs)  # type: ignore[list-item]
    for start in range(0, len(seqs), batch_size):
        batch = seqs[start:start + batch_size]
        X, mask, _target = _build_batch(batch, task)
        T = X.shape[0]
        outs = []
        state = None
        for s0 in range(0, T, tbptt):
            out, state = model.forward(X[s0:min(s0 + tbptt, T)], state)
            outs.append(out)
        full = np.concatenate(outs, axis=0)
        for j, s in enumerate(batch):
            t = len(s.labels)
            if task == "win":
                results[start + j] = full[:t, j, 0].copy()
            else:
                results[start + j] = np.argmax(full[:t, j], axis=-1)
    return results
