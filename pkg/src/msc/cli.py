"""Command-line entry points.

    msc gen       write synthetic trace files
    msc pipeline  run filter/parse/extract/split stages over a workdir
    msc train     train a model on the split dataset in a workdir
    msc eval      evaluate a checkpoint on one split
    msc report    scouting-coverage report over parsed sequences

Exit codes: 0 on success, 1 on any runtime failure (bad data, integrity
mismatch), 2 on command-line usage errors (argparse's convention).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .dataset import load_split
from .evaluation import evaluate_checkpoint, po_density_report
from .gen import GenConfig, generate_corpus
from .parser import read_parsed
from .pipeline import (
    STAGES,
    PipelineConfig,
    PipelineIntegrityError,
    run_pipeline,
)
from .train import TrainConfig, train_model


def _add_gen(sub) -> None:
    p = sub.add_parser("gen", help="generate synthetic traces")
    p.add_argument("--out", required=True, help="directory for trace files")
    p.add_argument("--n", type=int, default=200, help="number of traces")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--matchup", default="TvT",
                   choices=["TvT", "TvP", "TvZ", "PvP", "PvZ", "ZvZ"])
    p.add_argument("--reject-fraction", type=float, default=0.0,
                   help="fraction of traces built to fail the quality gate")
    p.add_argument("--min-frames", type=int, default=10200)
    p.add_argument("--max-frames", type=int, default=12600)


def _add_pipeline(sub) -> None:
    p = sub.add_parser("pipeline", help="run dataset pipeline stages")
    p.add_argument("--workdir", required=True)
    p.add_argument("--stages", default=",".join(STAGES),
                   help="comma list; later stages pull in earlier ones")
    p.add_argument("--config", help="JSON file of pipeline settings")
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--balance-seed", type=int, default=None)
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--spatial", action="store_true", default=None,
                   help="embed spatial tensors in sample files")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--quiet", action="store_true", default=None)


def _add_train(sub) -> None:
    p = sub.add_parser("train", help="train a model from a workdir dataset")
    p.add_argument("--workdir", required=True)
    p.add_argument("--task", default="win", choices=["win", "build"])
    p.add_argument("--width-scale", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--tbptt", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-labels", type=int, default=32)


def _add_eval(sub) -> None:
    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--workdir", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])


def _add_report(sub) -> None:
    p = sub.add_parser("report", help="scouting coverage by progress decile")
    p.add_argument("--workdir", required=True)


def _cmd_gen(args) -> int:
    cfg = GenConfig(
        seed=args.seed,
        n_traces=args.n,
        matchup=args.matchup,
        min_frames=args.min_frames,
        max_frames=args.max_frames,
        reject_fraction=args.reject_fraction,
    )
    paths = generate_corpus(cfg, args.out)
    print(json.dumps({"written": len(paths), "dir": str(args.out)}))
    return 0


def _cmd_pipeline(args) -> int:
    file_values = None
    if args.config:
        file_values = json.loads(Path(args.config).read_text())
    flag_values = {
        "workdir": args.workdir,
        "stride": args.stride,
        "seed": args.seed,
        "balance_seed": args.balance_seed,
        "split_seed": args.split_seed,
        "spatial": args.spatial,
        "workers": args.workers,
        "quiet": args.quiet,
    }
    cfg = PipelineConfig.from_sources(file_values, flag_values)
    stages = tuple(s.strip() for s in args.stages.split(",") if s.strip())
    summary = run_pipeline(cfg, stages)
    print(json.dumps(summary))
    return 0


def _cmd_train(args) -> int:
    cfg = TrainConfig(
        task=args.task,
        width_scale=args.width_scale,
        epochs=args.epochs,
        batch_size=args.batch_size,
        tbptt=args.tbptt,
        lr0=args.lr,
        seed=args.seed,
        n_labels=args.n_labels,
    )
    root = Path(args.workdir)
    manifest = root / "dataset" / "manifest.json"
    samples = root / "samples"
    train_seqs = load_split(manifest, samples, "train")
    val_seqs = load_split(manifest, samples, "val")
    reports = root / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    _model, rows = train_model(
        cfg, train_seqs, val_seqs, root / "ckpt",
        reports / f"curves_{cfg.task}.csv",
    )
    last = [r for r in rows if r.split == "train"][-1]
    print(json.dumps({
        "task": cfg.task, "epochs": cfg.epochs,
        "final_train_loss": round(last.loss, 6),
        "final_train_accuracy": round(last.accuracy, 6),
    }))
    return 0


def _cmd_eval(args) -> int:
    root = Path(args.workdir)
    report = evaluate_checkpoint(
        args.ckpt, root / "dataset" / "manifest.json", root / "samples",
        args.split,
    )
    reports = root / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    out = reports / f"eval_{report['task']}_{args.split}.json"
    out.write_text(json.dumps(report, indent=1) + "\n")
    print(json.dumps(report))
    return 0


def _cmd_report(args) -> int:
    root = Path(args.workdir)
    parsed = [read_parsed(p) for p in sorted((root / "parsed").glob("*.parsed.jsonl"))]
    report = po_density_report(parsed)
    reports = root / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    (reports / "po_density.json").write_text(json.dumps(report, indent=1) + "\n")
    print(json.dumps(report))
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "pipeline": _cmd_pipeline,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "report": _cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msc",
        description="Macro-management benchmark pipeline and baselines",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)
    _add_pipeline(sub)
    _add_train(sub)
    _add_eval(sub)
    _add_report(sub)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PipelineIntegrityError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
