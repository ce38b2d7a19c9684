"""Seeded synthetic videos with action-interval supervision, and the trainable
affine encoder that stands in for a convolutional feature extractor.

Each video holds a few latent objects of distinct classes. An object's raw
feature is its class prototype (a scaled basis vector in the first ``C``
dimensions) plus an object identity vector and a slow random-walk drift in
the remaining dimensions. Present objects emit 1-3 "hit" proposals per frame;
the rest of the frame is background clutter drawn around zero. In "blurred"
frames the prototype component of an object is attenuated, so only its
temporal neighbours still carry a clear class signal.

Annotations cover only part of each object's presence, which leaves present
classes unlabeled in many frames.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ShapeError, as_matrix
from .params import ParamSet

Box = tuple[float, float, float, float]
PLANE = 100.0


@dataclass
class SynthConfig:
    n_frames: int = 12
    n_regions: int = 16
    n_classes: int = 4
    d_raw: int = 16
    min_objects: int = 2
    max_objects: int = 3
    min_hits: int = 1
    max_hits: int = 3
    proto_scale: float = 2.0
    identity_scale: float = 0.5
    drift_step: float = 0.1
    hit_noise: float = 0.2
    class_noise: float = 0.7
    background_scale: float = 0.7
    confuser_prob: float = 0.3
    confuser_scale: float = 2.0
    blur_prob: float = 0.0
    blur_amp: float = 0.15
    min_presence: float = 0.5
    annotate_prob: float = 0.95
    label_fraction: tuple[float, float] = (0.5, 0.9)

    def validate(self) -> None:
        if self.n_frames < 2 or self.n_regions < 4 or self.n_classes < 2:
            raise ValueError("need n_frames >= 2, n_regions >= 4, n_classes >= 2")
        if self.d_raw < self.n_classes:
            raise ValueError("d_raw must be >= n_classes")
        if not 1 <= self.min_objects <= self.max_objects <= self.n_classes:
            raise ValueError("objects per video must lie in [1, n_classes]")
        if not 1 <= self.min_hits <= self.max_hits:
            raise ValueError("hits per object must be >= 1")
        if self.max_objects * self.max_hits > self.n_regions:
            raise ValueError(
                f"{self.max_objects} objects x {self.max_hits} hits exceed {self.n_regions} proposals")

    def noiseless(self) -> "SynthConfig":
        return dataclasses.replace(self, identity_scale=0.0, drift_step=0.0, hit_noise=0.0, class_noise=0.0,
                                   background_scale=0.0, blur_prob=0.0,
                                   confuser_prob=0.0)


@dataclass
class ActionAnnotation:
    object_class: int
    start: int
    end: int
    noun: str = ""


@dataclass
class SyntheticVideo:
    raw_features: list[np.ndarray]
    boxes: list[list[Box]]
    gt_objects: list[list[tuple[int, Box]]]
    annotations: list[ActionAnnotation]
    seed: int = 0
    # region indices of true hits, per frame: {region: class}; not serialized
    hits: list[dict[int, int]] = field(default_factory=list, repr=False)

    @property
    def n_frames(self) -> int:
        return len(self.raw_features)

    @property
    def n_regions(self) -> int:
        return self.raw_features[0].shape[0]

    @property
    def d_raw(self) -> int:
        return self.raw_features[0].shape[1]

    def presence(self, n_classes: int) -> np.ndarray:
        """Full-presence truth in {-1, +1}, shape ``(N, C)``."""
        y = -np.ones((self.n_frames, n_classes))
        for i, objs in enumerate(self.gt_objects):
            for c, _ in objs:
                y[i, c] = 1.0
        return y


def prototypes(cfg: SynthConfig) -> np.ndarray:
    p = np.zeros((cfg.n_classes, cfg.d_raw))
    p[np.arange(cfg.n_classes), np.arange(cfg.n_classes)] = cfg.proto_scale
    return p


def box_iou(a: Box, b: Box) -> float:
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def _clip_box(cx, cy, w, h) -> Box:
    x1 = min(max(cx - w / 2, 0.0), PLANE - w)
    y1 = min(max(cy - h / 2, 0.0), PLANE - h)
    return (float(x1), float(y1), float(x1 + w), float(y1 + h))


def _jitter(rng, gt: Box, amount: float) -> Box:
    w, h = gt[2] - gt[0], gt[3] - gt[1]
    cx = (gt[0] + gt[2]) / 2 + rng.uniform(-amount, amount) * w
    cy = (gt[1] + gt[3]) / 2 + rng.uniform(-amount, amount) * h
    w2 = w * (1 + rng.uniform(-amount, amount))
    h2 = h * (1 + rng.uniform(-amount, amount))
    return _clip_box(cx, cy, w2, h2)


def _random_box(rng) -> Box:
    w, h = rng.uniform(10, 50, size=2)
    return _clip_box(rng.uniform(0, PLANE), rng.uniform(0, PLANE), w, h)


def generate_video(cfg: SynthConfig, seed: int) -> SyntheticVideo:
    cfg.validate()
    rng = np.random.default_rng(seed)
    n, m, c_count, d = cfg.n_frames, cfg.n_regions, cfg.n_classes, cfg.d_raw
    protos = prototypes(cfg)
    n_obj = int(rng.integers(cfg.min_objects, cfg.max_objects + 1))
    classes = rng.choice(c_count, size=n_obj, replace=False)

    objects = []
    for c in classes:
        length = int(rng.integers(math.ceil(cfg.min_presence * n), n + 1))
        start = int(rng.integers(0, n - length + 1))
        identity = np.zeros(d)
        identity[c_count:] = rng.normal(0.0, cfg.identity_scale, size=d - c_count)
        steps = np.zeros((n, d))
        steps[:, c_count:] = rng.normal(0.0, cfg.drift_step, size=(n, d - c_count))
        drift = np.cumsum(steps, axis=0)
        visibility = np.where(rng.random(n) < cfg.blur_prob, cfg.blur_amp, 1.0)
        size = rng.uniform(20, 40, size=2)
        center = rng.uniform(size / 2, PLANE - size / 2)
        velocity = rng.normal(0.0, 2.0, size=2)
        gt_boxes = []
        for _ in range(n):
            gt_boxes.append(_clip_box(center[0], center[1], size[0], size[1]))
            center = np.clip(center + velocity, size / 2, PLANE - size / 2)
        objects.append(dict(cls=int(c), start=start, end=start + length - 1, identity=identity,
                            drift=drift, visibility=visibility, gt=gt_boxes))

    raw_features, boxes, gt_objects, hits = [], [], [], []
    for i in range(n):
        feats, fboxes, fhits, present = [], [], [], []
        for obj in objects:
            if not obj["start"] <= i <= obj["end"]:
                continue
            gt = obj["gt"][i]
            present.append((obj["cls"], gt))
            latent = obj["visibility"][i] * protos[obj["cls"]] + obj["identity"] + obj["drift"][i]
            for h in range(int(rng.integers(cfg.min_hits, cfg.max_hits + 1))):
                noise = rng.normal(0.0, 1.0, size=d)
                noise[:c_count] *= cfg.class_noise
                noise[c_count:] *= cfg.hit_noise
                feats.append(latent + noise)
                if h == 0:
                    box = _jitter(rng, gt, 0.08)
                    while box_iou(box, gt) < 0.5:
                        box = _jitter(rng, gt, 0.04)
                else:
                    box = _jitter(rng, gt, 0.3)
                fboxes.append(box)
                fhits.append(obj["cls"])
        while len(feats) < m:
            clutter = rng.normal(0.0, cfg.background_scale, size=d)
            if rng.random() < cfg.confuser_prob:
                clutter += rng.choice([-1.0, 1.0]) * cfg.confuser_scale * protos[rng.integers(c_count)] / cfg.proto_scale
            feats.append(clutter)
            fboxes.append(_random_box(rng))
            fhits.append(-1)
        order = rng.permutation(m)
        raw_features.append(np.array([feats[k] for k in order]))
        boxes.append([fboxes[k] for k in order])
        hits.append({j: fhits[k] for j, k in enumerate(order) if fhits[k] >= 0})
        gt_objects.append(present)

    annotations = []
    for k, obj in enumerate(objects):
        if rng.random() >= cfg.annotate_prob:
            continue
        span = obj["end"] - obj["start"] + 1
        lo, hi = cfg.label_fraction
        length = int(rng.integers(max(1, math.ceil(lo * span)), max(1, math.floor(hi * span)) + 1))
        start = obj["start"] + int(rng.integers(0, span - length + 1))
        annotations.append(ActionAnnotation(obj["cls"], start, start + length - 1, f"act{obj['cls']}_{k}"))
    if not annotations:
        obj = objects[0]
        span = obj["end"] - obj["start"] + 1
        length = max(1, math.floor(cfg.label_fraction[1] * span))
        annotations.append(ActionAnnotation(obj["cls"], obj["start"], obj["start"] + length - 1,
                                            f"act{obj['cls']}_0"))
    return SyntheticVideo(raw_features, boxes, gt_objects, annotations, seed, hits)


def generate_dataset(cfg: SynthConfig, n_videos: int, seed: int) -> list[SyntheticVideo]:
    seeds = np.random.SeedSequence(seed).generate_state(n_videos)
    return [generate_video(cfg, int(s)) for s in seeds]


def derive_frame_labels(annotations: list[ActionAnnotation], n: int, c: int) -> np.ndarray:
    y = -np.ones((n, c))
    for a in annotations:
        if not (0 <= a.start <= a.end < n) or not 0 <= a.object_class < c:
            raise ValueError(f"annotation out of range: {a}")
        y[a.start:a.end + 1, a.object_class] = 1.0
    return y


def labeled_frames(annotations: list[ActionAnnotation], n: int) -> list[int]:
    covered = np.zeros(n, dtype=bool)
    for a in annotations:
        covered[a.start:a.end + 1] = True
    return [int(i) for i in np.flatnonzero(covered)]


@dataclass
class EncoderParams(ParamSet):
    W_enc: np.ndarray
    b_enc: np.ndarray


def init_encoder(d: int, d_raw: int, seed: int, scale: float = 0.1) -> EncoderParams:
    """Identity on the leading block plus uniform jitter, so features start informative."""
    rng = np.random.default_rng(seed)
    w = np.eye(d, d_raw) + rng.uniform(-scale, scale, size=(d, d_raw))
    return EncoderParams(w, rng.uniform(-scale, scale, size=d))


def encode(raw, params: EncoderParams) -> np.ndarray:
    raw = as_matrix(raw)
    if raw.shape[1] != params.W_enc.shape[1]:
        raise ShapeError(f"raw features {raw.shape} vs encoder {params.W_enc.shape}")
    return raw @ params.W_enc.T + params.b_enc


def encode_backward(raw, grad_out, params: EncoderParams) -> tuple[EncoderParams, np.ndarray]:
    raw = as_matrix(raw)
    grad_out = as_matrix(grad_out)
    grads = EncoderParams(grad_out.T @ raw, grad_out.sum(axis=0))
    return grads, grad_out @ params.W_enc
