"""Command-line entry points: gen-data, train, eval, gradcheck, ablation."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .gradcheck import run_gradcheck
from .synth import SynthConfig, generate_dataset
from .train import (RunConfig, ablation, evaluate_model, loss_rows, metric_rows, train_model)

log = logging.getLogger("tdgraph")


def load_config(path: str | None, seed: int | None = None, out: str | None = None):
    kv = io.read_kv(path) if path else {}
    cfg, synth, sizes = io.split_config(kv, RunConfig)
    if seed is not None:
        cfg.seed = seed
    if out is not None:
        cfg.out = out
    return cfg, synth, sizes


def gen_data(synth: SynthConfig, out: Path, seed: int, n_videos: int = 20, n_eval: int = 20) -> tuple[Path, Path]:
    out.mkdir(parents=True, exist_ok=True)
    train_path, eval_path = out / "train.tdgv", out / "eval.tdgv"
    io.write_dataset(train_path, generate_dataset(synth, n_videos, seed), synth.n_classes)
    io.write_dataset(eval_path, generate_dataset(synth, n_eval, seed + 100_000), synth.n_classes)
    return train_path, eval_path


def _load_videos(path: str | None, what: str):
    if not path:
        raise ValueError(f"config does not name a {what}")
    if not Path(path).is_file():
        raise FileNotFoundError(f"{what} not readable: {path}")
    return io.read_dataset(path)


def run_train(cfg: RunConfig) -> Path:
    """Train on ``cfg.dataset``; writes checkpoint/, metrics.csv and graph_digests.txt under ``cfg.out``."""
    cfg.validate()
    videos, n_classes = _load_videos(cfg.dataset, "dataset")
    out = Path(cfg.out or "run")
    out.mkdir(parents=True, exist_ok=True)
    res = train_model(cfg, videos, n_classes)
    io.save_checkpoint(out / "checkpoint", res.model, res.optim, res.epoch, io.config_echo(cfg))
    io.write_metrics(out / "metrics.csv", loss_rows(res.epoch_losses, cfg.variant, cfg.seed))
    (out / "graph_digests.txt").write_text("".join(f"{e + 1} {d}\n" for e, d in enumerate(res.graph_digests)))
    return out


def run_eval(cfg: RunConfig, checkpoint: Path | None = None) -> Path:
    out = Path(cfg.out or "run")
    checkpoint = checkpoint or out / "checkpoint"
    model, _, epoch, _ = io.load_checkpoint(checkpoint)
    videos, n_classes = _load_videos(cfg.eval_dataset or cfg.dataset, "eval dataset")
    d_raw, _, c = model.dims
    if n_classes != c or videos[0].d_raw != d_raw:
        raise ValueError(f"checkpoint expects D_raw={d_raw}, C={c}; dataset has "
                         f"D_raw={videos[0].d_raw}, C={n_classes}")
    result = evaluate_model(model, videos, cfg, n_classes)
    out.mkdir(parents=True, exist_ok=True)
    io.write_metrics(out / "eval_metrics.csv", metric_rows(result, epoch, cfg.variant, cfg.seed))
    log.info("cls mAP %.4f  det mAP %.4f", result.cls_map, result.det_map)
    return out


def run_ablation(cfg: RunConfig, synth: SynthConfig, seeds: list[int], sizes: dict[str, int]) -> Path:
    out = Path(cfg.out or "ablation")
    out.mkdir(parents=True, exist_ok=True)
    data = None
    n_classes = synth.n_classes
    if cfg.dataset:
        train_videos, n_classes = _load_videos(cfg.dataset, "dataset")
        eval_videos, _ = _load_videos(cfg.eval_dataset or cfg.dataset, "eval dataset")
        data = lambda s: (train_videos, eval_videos)  # noqa: E731
    elif sizes:
        n_train, n_eval = sizes.get("videos", 20), sizes.get("eval_videos", 20)
        data = lambda s: (generate_dataset(synth, n_train, s), generate_dataset(synth, n_eval, s + 100_000))  # noqa: E731
    table = ablation(cfg, seeds, data=data, n_classes=n_classes, synth=synth)
    rows = []
    for r in table:
        rows.append((cfg.epochs, r["variant"], r["seed"], "cls_map", "all", r["cls_map"]))
        rows.append((cfg.epochs, r["variant"], r["seed"], "det_map", "all", r["det_map"]))
    io.write_metrics(out / "ablation.csv", rows)
    print(format_table(table))
    return out


def format_table(table: list[dict]) -> str:
    variants = list(dict.fromkeys(r["variant"] for r in table))
    lines = [f"{'variant':16s} {'cls mAP (median)':>17s} {'det mAP (median)':>17s}  per-seed cls"]
    for v in variants:
        rs = [r for r in table if r["variant"] == v]
        cls = [r["cls_map"] for r in rs]
        det = [r["det_map"] for r in rs]
        lines.append(f"{v:16s} {np.median(cls):17.4f} {np.median(det):17.4f}  "
                     + " ".join(f"{x:.3f}" for x in cls))
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdgraph", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("train", "eval", "gradcheck", "ablation", "gen-data"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value config file")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="output directory")
        if name == "eval":
            s.add_argument("--checkpoint", help="checkpoint directory (default: <out>/checkpoint)")
        if name == "ablation":
            s.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated seeds")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        if args.command == "gradcheck":
            seeds = [args.seed] if args.seed is not None else [0, 1, 2]
            ok = True
            for s in seeds:
                report = run_gradcheck(s)
                print(f"seed {s}")
                print("\n".join(report.lines()))
                ok &= report.passed
            return 0 if ok else 1

        cfg, synth, sizes = load_config(args.config, args.seed, args.out)
        if args.command == "gen-data":
            out = Path(cfg.out or "data")
            paths = gen_data(synth, out, cfg.seed, sizes.get("videos", 20), sizes.get("eval_videos", 20))
            print("\n".join(map(str, paths)))
        elif args.command == "train":
            print(run_train(cfg))
        elif args.command == "eval":
            print(run_eval(cfg, Path(args.checkpoint) if args.checkpoint else None))
        elif args.command == "ablation":
            run_ablation(cfg, synth, [int(s) for s in args.seeds.split(",")], sizes)
    except (ValueError, FileNotFoundError, io.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
