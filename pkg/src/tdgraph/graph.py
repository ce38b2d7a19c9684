"""Temporal K-neighbour graph between consecutive frames and context aggregation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import ShapeError, as_matrix, l2_distance, pairwise_l2


class GraphMode(str, Enum):
    DYNAMIC = "dynamic"
    STATIC = "static"
    MEAN = "mean"
    NONE = "none"


@dataclass
class FrameEdges:
    """Edges from every region of frame i to regions of frame i-1.

    ``sources[j]`` holds ascending previous-frame indices and ``weights[j]``
    the matching normalized weights; both empty when region j has no edges.
    """

    sources: list[np.ndarray]
    weights: list[np.ndarray]
    n_prev: int

    def __len__(self) -> int:
        return len(self.sources)

    def matrix(self) -> np.ndarray:
        """Dense ``(M_curr, M_prev)`` weight matrix."""
        a = np.zeros((len(self.sources), self.n_prev))
        for j, (src, w) in enumerate(zip(self.sources, self.weights)):
            if src.size and (src.min() < 0 or src.max() >= self.n_prev):
                raise IndexError(f"region {j}: source index out of range [0, {self.n_prev})")
            a[j, src] = w
        return a

    def pairs(self, j: int) -> list[tuple[int, float]]:
        return [(int(s), float(w)) for s, w in zip(self.sources[j], self.weights[j])]


# edges[0] is always None: the first frame has no predecessor.
TemporalEdges = list


def edge_weight(f_a, f_b) -> float:
    return 0.5 * float(np.exp(-l2_distance(f_a, f_b)))


def raw_edge_weights(prev: np.ndarray, curr: np.ndarray) -> np.ndarray:
    """``out[j, k]`` = edge weight between current region j and previous region k."""
    return 0.5 * np.exp(-pairwise_l2(curr, prev))


def normalize_weights(raw: np.ndarray) -> np.ndarray:
    total = raw.sum()
    if total > 0:
        return raw / total
    # every raw weight underflowed; fall back to the equivalent shifted form
    logw = np.log(np.maximum(raw, np.finfo(float).tiny))
    e = np.exp(logw - logw.max())
    return e / e.sum()


def select_top_k(raw_row: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries, ties to the lower index, returned ascending."""
    order = np.argsort(-raw_row, kind="stable")
    return np.sort(order[:k])


def build_graph(prev, curr, k: int, mode: GraphMode | str) -> FrameEdges:
    mode = GraphMode(mode)
    prev = as_matrix(prev)
    curr = as_matrix(curr)
    if prev.shape[0] == 0 or curr.shape[0] == 0:
        raise ShapeError("empty frame in build_graph")
    if prev.shape[1] != curr.shape[1]:
        raise ShapeError(f"feature dimension mismatch: {prev.shape} vs {curr.shape}")
    m_prev, m_curr = prev.shape[0], curr.shape[0]
    if mode is GraphMode.NONE:
        empty_i = np.zeros(0, dtype=np.int64)
        empty_w = np.zeros(0)
        return FrameEdges([empty_i] * m_curr, [empty_w] * m_curr, m_prev)
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")

    everyone = np.arange(m_prev)
    sources, weights = [], []
    if mode is GraphMode.MEAN:
        w = np.full(m_prev, 1.0 / m_prev)
        return FrameEdges([everyone] * m_curr, [w] * m_curr, m_prev)

    raw = raw_edge_weights(prev, curr)
    for j in range(m_curr):
        if mode is GraphMode.DYNAMIC:
            sel = select_top_k(raw[j], min(k, m_prev))
        else:
            sel = everyone
        sources.append(sel)
        weights.append(normalize_weights(raw[j, sel]))
    return FrameEdges(sources, weights, m_prev)


def build_video_graph(features: list[np.ndarray], k: int, mode: GraphMode | str) -> TemporalEdges:
    edges: TemporalEdges = [None]
    for i in range(1, len(features)):
        edges.append(build_graph(features[i - 1], features[i], k, mode))
    return edges


def aggregate_context(edges: FrameEdges | None, prev_features, n_curr: int | None = None) -> np.ndarray:
    """Edge-weighted sum of previous-frame features for every current region."""
    prev_features = as_matrix(prev_features)
    if edges is None:
        rows = prev_features.shape[0] if n_curr is None else n_curr
        return np.zeros((rows, prev_features.shape[1]))
    if edges.n_prev != prev_features.shape[0]:
        raise ShapeError(f"edges expect {edges.n_prev} previous regions, got {prev_features.shape[0]}")
    return edges.matrix() @ prev_features


def aggregate_context_backward(edges: FrameEdges | None, grad_context, n_prev: int | None = None) -> np.ndarray:
    grad_context = as_matrix(grad_context)
    if edges is None:
        rows = grad_context.shape[0] if n_prev is None else n_prev
        return np.zeros((rows, grad_context.shape[1]))
    if len(edges) != grad_context.shape[0]:
        raise ShapeError(f"edges cover {len(edges)} regions, gradient has {grad_context.shape[0]} rows")
    return edges.matrix().T @ grad_context


def graph_digest(edges: TemporalEdges) -> str:
    """Stable hash of edge supports and weights, used to detect graph changes."""
    h = hashlib.sha256()
    for i, fe in enumerate(edges):
        if fe is None:
            continue
        h.update(f"frame{i}".encode())
        for src, w in zip(fe.sources, fe.weights):
            h.update(np.asarray(src, dtype="<i8").tobytes())
            h.update(np.asarray(w, dtype="<f8").tobytes())
    return h.hexdigest()
