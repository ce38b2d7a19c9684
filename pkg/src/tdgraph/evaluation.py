"""Frame-classification AP and detection AP at an IoU threshold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Detection:
    frame: int
    cls: int
    score: float
    box: tuple[float, float, float, float]


def _check_box(b) -> None:
    if not (b[0] < b[2] and b[1] < b[3]):
        raise ValueError(f"degenerate box {tuple(b)}")


def iou(a, b) -> float:
    _check_box(a)
    _check_box(b)
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return float(inter / union)


def average_precision(is_tp: np.ndarray, n_positive: int) -> float:
    """All-point interpolated AP for a ranked list of hit flags."""
    if n_positive == 0:
        return float("nan")
    is_tp = np.asarray(is_tp, dtype=bool)
    if is_tp.size == 0:
        return 0.0
    tp = np.cumsum(is_tp)
    precision = tp / np.arange(1, is_tp.size + 1)
    recall = tp / n_positive
    # monotone envelope from the right
    interp = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * interp))


def _mean_defined(aps: dict[int, float]) -> float:
    vals = [v for v in aps.values() if not np.isnan(v)]
    return float(np.mean(vals)) if vals else float("nan")


def detection_ap(dets: list[Detection], gts: list[list[tuple[int, tuple]]], n_classes: int,
                 iou_thresh: float = 0.5) -> tuple[dict[int, float], float]:
    """Per-class AP and mAP.

    ``gts[i]`` lists ``(class, box)`` ground truths of frame i. Detections are
    ranked by descending score, ties broken by frame then input order; each is
    greedily matched to the highest-IoU still unmatched ground truth of its
    class and frame.
    """
    aps = {}
    for c in range(n_classes):
        truth = {i: [b for cc, b in frame if cc == c] for i, frame in enumerate(gts)}
        n_pos = sum(len(v) for v in truth.values())
        mine = [(k, d) for k, d in enumerate(dets) if d.cls == c]
        mine.sort(key=lambda kd: (-kd[1].score, kd[1].frame, kd[0]))
        used = {i: [False] * len(v) for i, v in truth.items()}
        flags = []
        for _, d in mine:
            best, best_iou = -1, iou_thresh
            for g, box in enumerate(truth.get(d.frame, [])):
                if used[d.frame][g]:
                    continue
                o = iou(d.box, box)
                if o >= best_iou and (best < 0 or o > best_iou):
                    best, best_iou = g, o
            if best >= 0:
                used[d.frame][best] = True
            flags.append(best >= 0)
        aps[c] = average_precision(np.array(flags, dtype=bool), n_pos)
    return aps, _mean_defined(aps)


def classification_ap(pc, truth) -> tuple[dict[int, float], float]:
    """Per-class AP of frame scores against {-1, +1} presence; classes without positives are NaN."""
    pc = np.asarray(pc, dtype=np.float64)
    truth = np.asarray(truth)
    if pc.shape != truth.shape:
        raise ValueError(f"scores {pc.shape} vs truth {truth.shape}")
    aps = {}
    for c in range(pc.shape[1]):
        order = np.lexsort((np.arange(pc.shape[0]), -pc[:, c]))
        pos = truth[order, c] > 0
        aps[c] = average_precision(pos, int(pos.sum()))
    return aps, _mean_defined(aps)
