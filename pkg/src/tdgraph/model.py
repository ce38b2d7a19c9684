"""Full model over one window of frames: encoder, temporal graph, unit, head.

Parameters travel as one flat ``{"group.name": array}`` dict so the
optimizer and checkpoints see a single deterministic ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import FrameEdges, GraphMode, aggregate_context, aggregate_context_backward, build_video_graph
from .head import HeadCache, HeadParams, head_backward, head_forward, init_head
from .objective import hinge_loss
from .synth import EncoderParams, encode, encode_backward, init_encoder
from .unit import UnitParams, VideoCache, init_params, video_backward, video_forward

GROUPS = (("encoder", EncoderParams), ("unit", UnitParams), ("head", HeadParams))


@dataclass
class Model:
    encoder: EncoderParams
    unit: UnitParams
    head: HeadParams

    def flat(self) -> dict[str, np.ndarray]:
        """Views (not copies) of every tensor, keyed ``group.name``."""
        out = {}
        for group, _ in GROUPS:
            for name, arr in getattr(self, group).items():
                out[f"{group}.{name}"] = arr
        return out

    @classmethod
    def from_flat(cls, flat: dict[str, np.ndarray]) -> "Model":
        parts = {}
        for group, kind in GROUPS:
            prefix = group + "."
            parts[group] = kind.from_dict({k[len(prefix):]: v for k, v in flat.items() if k.startswith(prefix)})
        return cls(**parts)

    def copy(self) -> "Model":
        return Model(self.encoder.copy(), self.unit.copy(), self.head.copy())

    @property
    def dims(self) -> tuple[int, int, int]:
        """``(D_raw, D, C)``."""
        return self.encoder.W_enc.shape[1], self.encoder.W_enc.shape[0], self.head.W_cls.shape[1]


def init_model(d_raw: int, d: int, n_classes: int, seed: int, scale: float = 0.1) -> Model:
    ss = np.random.SeedSequence(seed).spawn(3)
    seeds = [int(s.generate_state(1)[0]) for s in ss]
    return Model(init_encoder(d, d_raw, seeds[0], scale), init_params(d, seeds[1], scale),
                 init_head(d, n_classes, seeds[2], scale))


@dataclass
class WindowCache:
    raw: list[np.ndarray]
    features: list[np.ndarray]
    edges: list[FrameEdges | None]
    use_lstm: bool
    unit_cache: VideoCache | None
    heads: list[HeadCache]

    @property
    def pc(self) -> np.ndarray:
        return np.stack([h.pc for h in self.heads])

    @property
    def rc(self) -> list[np.ndarray]:
        return [h.rc for h in self.heads]


def window_forward(model: Model, raw: list[np.ndarray], k: int, mode: GraphMode | str,
                   use_lstm: bool = True, edges: list[FrameEdges | None] | None = None) -> WindowCache:
    """Encode, (re)build the graph from the encoded features, propagate, score.

    Pass ``edges`` to hold a previously built graph fixed.
    """
    features = [encode(r, model.encoder) for r in raw]
    if edges is None:
        edges = build_video_graph(features, k, mode)
    if use_lstm:
        unit_cache = video_forward(features, edges, model.unit)
        hidden = unit_cache.hidden
    else:
        unit_cache = None
        hidden = [features[0] + 0.0]
        for i in range(1, len(features)):
            hidden.append(features[i] + aggregate_context(edges[i], features[i - 1]))
    heads = [head_forward(h, model.head) for h in hidden]
    return WindowCache(list(raw), features, edges, use_lstm, unit_cache, heads)


def window_backward(model: Model, cache: WindowCache, grad_pc: np.ndarray) -> dict[str, np.ndarray]:
    grad_hidden = []
    head_grads = model.head.zeros_like()
    for hc, g in zip(cache.heads, grad_pc):
        dh, hg = head_backward(hc, g)
        grad_hidden.append(dh)
        head_grads = head_grads + hg

    if cache.use_lstm:
        unit_grads, d_feat = video_backward(cache.unit_cache, grad_hidden)
    else:
        unit_grads = model.unit.zeros_like()
        d_feat = [dh.copy() for dh in grad_hidden]
        for i in range(1, len(d_feat)):
            if cache.edges[i] is not None:
                d_feat[i - 1] += aggregate_context_backward(cache.edges[i], grad_hidden[i])

    enc_grads = model.encoder.zeros_like()
    for r, df in zip(cache.raw, d_feat):
        eg, _ = encode_backward(r, df, model.encoder)
        enc_grads = enc_grads + eg
    return Model(enc_grads, unit_grads, head_grads).flat()


def window_loss(model: Model, raw: list[np.ndarray], y: np.ndarray, k: int, mode: GraphMode | str,
                use_lstm: bool = True, edges=None) -> tuple[float, dict[str, np.ndarray], WindowCache]:
    cache = window_forward(model, raw, k, mode, use_lstm, edges)
    loss, grad_pc = hinge_loss(cache.pc, y)
    return loss, window_backward(model, cache, grad_pc), cache
