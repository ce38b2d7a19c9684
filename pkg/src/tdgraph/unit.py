"""Recurrent region unit: gated per-region updates driven by shared frame state.

Row-vector convention: a frame is an ``(M, D)`` matrix and each gate
pre-activation is ``f @ W.T + f_hat @ Wt.T + h_bar @ U.T + b`` where every
``W``/``Wt`` is stored ``(D_h, D)`` and every ``U`` is ``(D_h, D_h)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ShapeError, as_matrix, sigmoid, tanh_m
from .graph import FrameEdges, aggregate_context, aggregate_context_backward
from .params import ParamSet

GATES = ("u", "f", "o", "c")


@dataclass
class UnitParams(ParamSet):
    W_u: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    Wt_u: np.ndarray
    Wt_f: np.ndarray
    Wt_o: np.ndarray
    Wt_c: np.ndarray
    U_u: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_c: np.ndarray
    b_u: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    @property
    def dim(self) -> int:
        return self.W_u.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W_u.shape[0]

    @classmethod
    def zeros(cls, d: int) -> "UnitParams":
        mats = {f"{p}_{g}": np.zeros((d, d)) for p in ("W", "Wt", "U") for g in GATES}
        vecs = {f"b_{g}": np.zeros(d) for g in GATES}
        return cls(**mats, **vecs)

    def temporal_zeroed(self) -> "UnitParams":
        p = self.copy()
        for g in GATES:
            getattr(p, f"Wt_{g}")[...] = 0.0
        return p


def init_params(d: int, seed: int, scale: float = 0.1) -> UnitParams:
    """Every entry i.i.d. uniform on ``[-scale, scale]``, biases included."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    p = UnitParams.zeros(d)
    for name, arr in p.items():
        arr[...] = rng.uniform(-scale, scale, size=arr.shape)
    return p


@dataclass
class FrameState:
    hidden_mean: np.ndarray
    memory_mean: np.ndarray

    @classmethod
    def zeros(cls, d_h: int) -> "FrameState":
        return cls(np.zeros(d_h), np.zeros(d_h))


@dataclass
class RegionStates:
    hidden: np.ndarray
    memory: np.ndarray


@dataclass
class GateActivations:
    gu: np.ndarray
    gf: np.ndarray
    go: np.ndarray
    gc: np.ndarray


def frame_state_average(states: RegionStates) -> FrameState:
    if states.hidden.shape[0] == 0:
        raise ValueError("cannot average zero regions")
    return FrameState(states.hidden.mean(axis=0), states.memory.mean(axis=0))


def _check(f: np.ndarray, f_hat: np.ndarray, prev: FrameState, params: UnitParams) -> None:
    d, d_h = params.dim, params.hidden_dim
    if f.shape[1] != d or f_hat.shape != f.shape:
        raise ShapeError(f"features {f.shape} / context {f_hat.shape} incompatible with D={d}")
    if prev.hidden_mean.shape != (d_h,) or prev.memory_mean.shape != (d_h,):
        raise ShapeError(f"frame state must have length {d_h}")


def lstm_step(f, f_hat, prev: FrameState, params: UnitParams) -> tuple[RegionStates, GateActivations]:
    f = as_matrix(f)
    f_hat = as_matrix(f_hat)
    _check(f, f_hat, prev, params)
    h_bar = prev.hidden_mean

    def pre(g):
        return (f @ getattr(params, f"W_{g}").T + f_hat @ getattr(params, f"Wt_{g}").T
                + getattr(params, f"U_{g}") @ h_bar + getattr(params, f"b_{g}"))

    gates = GateActivations(gu=sigmoid(pre("u")), gf=sigmoid(pre("f")),
                            go=sigmoid(pre("o")), gc=tanh_m(pre("c")))
    memory = gates.gf * prev.memory_mean + gates.gu * gates.gc
    hidden = gates.go * tanh_m(memory)
    return RegionStates(hidden, memory), gates


@dataclass
class FrameCache:
    f: np.ndarray
    f_hat: np.ndarray
    prev: FrameState
    gates: GateActivations
    states: RegionStates
    tanh_memory: np.ndarray


@dataclass
class VideoCache:
    frames: list[FrameCache]
    edges: list[FrameEdges | None]
    params: UnitParams

    @property
    def hidden(self) -> list[np.ndarray]:
        return [fc.states.hidden for fc in self.frames]


def video_forward(features: list[np.ndarray], edges: list[FrameEdges | None], params: UnitParams) -> VideoCache:
    if len(edges) != len(features):
        raise ShapeError(f"{len(features)} frames but {len(edges)} edge entries")
    prev = FrameState.zeros(params.hidden_dim)
    frames = []
    for i, f in enumerate(features):
        f = as_matrix(f)
        if i == 0 or edges[i] is None:
            f_hat = np.zeros_like(f)
        else:
            f_hat = aggregate_context(edges[i], features[i - 1])
        states, gates = lstm_step(f, f_hat, prev, params)
        frames.append(FrameCache(f, f_hat, prev, gates, states, np.tanh(states.memory)))
        prev = frame_state_average(states)
    return VideoCache(frames, list(edges), params)


def video_backward(cache: VideoCache | None, grad_hidden: list[np.ndarray]) -> tuple[UnitParams, list[np.ndarray]]:
    """Gradients of ``sum_i <grad_hidden[i], h_i>`` w.r.t. parameters and input features.

    Edge weights are treated as constants.
    """
    if cache is None:
        raise ValueError("video_backward needs the cache from video_forward")
    params = cache.params
    n = len(cache.frames)
    if len(grad_hidden) != n:
        raise ShapeError(f"{n} cached frames but {len(grad_hidden)} gradients")
    grads = params.zeros_like()
    d_feat = [np.zeros_like(fc.f) for fc in cache.frames]
    d_hbar = np.zeros(params.hidden_dim)
    d_mbar = np.zeros(params.hidden_dim)

    for i in range(n - 1, -1, -1):
        fc = cache.frames[i]
        g = fc.gates
        m_regions = fc.f.shape[0]
        dh = as_matrix(grad_hidden[i]) + d_hbar / m_regions
        dm = d_mbar / m_regions + dh * g.go * (1.0 - fc.tanh_memory ** 2)

        dz = {
            "o": dh * fc.tanh_memory * g.go * (1.0 - g.go),
            "f": dm * fc.prev.memory_mean * g.gf * (1.0 - g.gf),
            "u": dm * g.gc * g.gu * (1.0 - g.gu),
            "c": dm * g.gu * (1.0 - g.gc ** 2),
        }
        d_f_hat = np.zeros_like(fc.f_hat)
        d_hbar = np.zeros(params.hidden_dim)
        for gate in GATES:
            z = dz[gate]
            zsum = z.sum(axis=0)
            getattr(grads, f"W_{gate}")[...] += z.T @ fc.f
            getattr(grads, f"Wt_{gate}")[...] += z.T @ fc.f_hat
            getattr(grads, f"U_{gate}")[...] += np.outer(zsum, fc.prev.hidden_mean)
            getattr(grads, f"b_{gate}")[...] += zsum
            d_feat[i] += z @ getattr(params, f"W_{gate}")
            d_f_hat += z @ getattr(params, f"Wt_{gate}")
            d_hbar += getattr(params, f"U_{gate}").T @ zsum
        d_mbar = (dm * g.gf).sum(axis=0)
        if i > 0 and cache.edges[i] is not None:
            d_feat[i - 1] += aggregate_context_backward(cache.edges[i], d_f_hat)
    return grads, d_feat
