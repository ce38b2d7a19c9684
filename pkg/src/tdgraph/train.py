"""Training, evaluation and ablation pipeline."""

from __future__ import annotations

import dataclasses
import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .evaluation import Detection, classification_ap, detection_ap
from .graph import GraphMode, graph_digest
from .model import Model, init_model, window_forward, window_loss
from .objective import OptimState, lr_schedule, sgd_step
from .synth import SynthConfig, SyntheticVideo, derive_frame_labels, generate_dataset, labeled_frames

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    dataset: str | None = None
    eval_dataset: str | None = None
    mode: GraphMode = GraphMode.DYNAMIC
    K: int = 4
    window: int = 6
    epochs: int = 30
    base_lr: float = 1e-5
    late_lr: float | None = None
    decay_epoch: int = 10
    momentum: float = 0.9
    weight_decay: float = 5e-4
    seed: int = 0
    use_lstm: bool = True
    hidden_dim: int | None = None
    init_scale: float = 0.1
    det_threshold: float | None = None
    freeze_temporal: bool = False
    out: str | None = None

    def __post_init__(self):
        self.mode = GraphMode(self.mode)

    def validate(self) -> None:
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.K < 1 and self.mode is not GraphMode.NONE:
            raise ValueError("K must be >= 1 unless mode is none")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.base_lr <= 0:
            raise ValueError("base_lr must be positive")

    @property
    def variant(self) -> str:
        return self.mode.value + ("" if self.use_lstm else "-nolstm")


# Desk-scale benchmark defaults; the default 1e-5 learning rate is far too
# small for randomly initialized heads over 16 proposals.
BENCHMARK_SYNTH = SynthConfig()
BENCHMARK_VIDEOS = 20
BENCHMARK_EVAL_VIDEOS = 20
BENCHMARK_RUN = dict(K=4, window=6, epochs=30, base_lr=0.1, late_lr=0.01, decay_epoch=10)


def benchmark_config(**overrides) -> RunConfig:
    return RunConfig(**{**BENCHMARK_RUN, **overrides})


def benchmark_data(seed: int, synth: SynthConfig = BENCHMARK_SYNTH, n_train: int = BENCHMARK_VIDEOS,
                   n_eval: int = BENCHMARK_EVAL_VIDEOS) -> tuple[list[SyntheticVideo], list[SyntheticVideo]]:
    return generate_dataset(synth, n_train, seed), generate_dataset(synth, n_eval, seed + 100_000)


def windows(frames: list[int], size: int) -> list[list[int]]:
    return [frames[s:s + size] for s in range(0, len(frames), size)]


@dataclass
class TrainResult:
    model: Model
    optim: OptimState
    epoch_losses: list[float]
    graph_digests: list[str]
    epoch: int


def train_model(cfg: RunConfig, videos: list[SyntheticVideo], n_classes: int,
                model: Model | None = None) -> TrainResult:
    cfg.validate()
    if not videos:
        raise ValueError("no training videos")
    d_raw = videos[0].d_raw
    d = cfg.hidden_dim or d_raw
    if model is None:
        model = init_model(d_raw, d, n_classes, cfg.seed, cfg.init_scale)
    params = model.flat()
    frozen = [k for k in params if k.startswith("unit.Wt_")] if cfg.freeze_temporal else []
    for k in frozen:
        params[k][...] = 0.0
    optim = OptimState(lr=cfg.base_lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)

    plan = []
    for v in videos:
        y = derive_frame_labels(v.annotations, v.n_frames, n_classes)
        for w in windows(labeled_frames(v.annotations, v.n_frames), cfg.window):
            plan.append(([v.raw_features[i] for i in w], y[w]))

    losses, digests = [], []
    for epoch in range(cfg.epochs):
        optim.lr = lr_schedule(epoch, cfg.base_lr, cfg.late_lr, cfg.decay_epoch)
        total = 0.0
        h = hashlib.sha256()
        for raw, y in plan:
            loss, grads, cache = window_loss(model, raw, y, cfg.K, cfg.mode, cfg.use_lstm)
            h.update(graph_digest(cache.edges).encode())
            for k in frozen:
                grads[k] = np.zeros_like(grads[k])
            sgd_step(params, grads, optim)
            total += loss
        losses.append(total / len(plan))
        digests.append(h.hexdigest())
        log.info("epoch %d  lr %.3g  loss %.6f", epoch + 1, optim.lr, losses[-1])
    return TrainResult(model, optim, losses, digests, cfg.epochs)


@dataclass
class EvalResult:
    cls_ap: dict[int, float]
    cls_map: float
    det_ap: dict[int, float]
    det_map: float


def predict_video(model: Model, video: SyntheticVideo, cfg: RunConfig) -> tuple[np.ndarray, list[np.ndarray]]:
    """Frame scores ``(N, C)`` and per-frame region scores over the whole video as one sequence."""
    cache = window_forward(model, video.raw_features, cfg.K, cfg.mode, cfg.use_lstm)
    return cache.pc, cache.rc


def detections_for_frame(frame: int, rc: np.ndarray, boxes, threshold: float | None) -> list[Detection]:
    dets = []
    for c in range(rc.shape[1]):
        top = int(np.argmax(rc[:, c]))
        for j in range(rc.shape[0]):
            if j == top or (threshold is not None and rc[j, c] > threshold):
                dets.append(Detection(frame, c, float(rc[j, c]), tuple(boxes[j])))
    return dets


def evaluate_model(model: Model, videos: list[SyntheticVideo], cfg: RunConfig, n_classes: int) -> EvalResult:
    d_raw = model.dims[0]
    pcs, truths, dets, gts = [], [], [], []
    offset = 0
    for v in videos:
        if v.d_raw != d_raw:
            raise ValueError(f"video has D_raw={v.d_raw}, model expects {d_raw}")
        pc, rcs = predict_video(model, v, cfg)
        pcs.append(pc)
        truths.append(v.presence(n_classes))
        for i, rc in enumerate(rcs):
            dets.extend(detections_for_frame(offset + i, rc, v.boxes[i], cfg.det_threshold))
        gts.extend(v.gt_objects)
        offset += v.n_frames
    cls_ap, cls_map = classification_ap(np.concatenate(pcs), np.concatenate(truths))
    det_ap, det_map = detection_ap(dets, gts, n_classes, 0.5)
    return EvalResult(cls_ap, cls_map, det_ap, det_map)


def metric_rows(result: EvalResult, epoch: int, variant: str, seed: int) -> list[tuple]:
    rows = [(epoch, variant, seed, "cls_ap", c, v) for c, v in result.cls_ap.items()]
    rows.append((epoch, variant, seed, "cls_map", "all", result.cls_map))
    rows += [(epoch, variant, seed, "det_ap", c, v) for c, v in result.det_ap.items()]
    rows.append((epoch, variant, seed, "det_map", "all", result.det_map))
    return rows


def loss_rows(losses: list[float], variant: str, seed: int) -> list[tuple]:
    return [(e + 1, variant, seed, "train_loss", "all", v) for e, v in enumerate(losses)]


ALL_VARIANTS = [(m, lstm) for lstm in (True, False) for m in GraphMode]


def ablation(base: RunConfig, seeds: list[int], variants=None, data=None, n_classes: int | None = None,
             synth: SynthConfig = BENCHMARK_SYNTH) -> list[dict]:
    """Train and evaluate every variant for every seed.

    ``data(seed)`` returns ``(train_videos, eval_videos)``; by default the
    synthetic benchmark is regenerated per seed.
    """
    variants = ALL_VARIANTS if variants is None else variants
    data = data or (lambda s: benchmark_data(s, synth))
    n_classes = n_classes or synth.n_classes
    table = []
    for seed in seeds:
        train_videos, eval_videos = data(seed)
        for mode, use_lstm in variants:
            cfg = dataclasses.replace(base, mode=mode, use_lstm=use_lstm, seed=seed)
            res = train_model(cfg, train_videos, n_classes)
            ev = evaluate_model(res.model, eval_videos, cfg, n_classes)
            table.append(dict(variant=cfg.variant, seed=seed, cls_map=ev.cls_map, det_map=ev.det_map,
                              final_loss=res.epoch_losses[-1] if res.epoch_losses else float("nan")))
            log.info("seed %d %-14s cls %.4f det %.4f", seed, cfg.variant, ev.cls_map, ev.det_map)
    return table
