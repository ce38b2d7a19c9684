"""Two-stream region classifier.

The classification stream ``S`` is a bare linear layer; the detection stream
``L`` is softmax-normalized over the regions of the frame for every class.
Region scores are ``S * softmax(L)`` and frame scores their column sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ShapeError, as_matrix, softmax_over_rows
from .params import ParamSet


@dataclass
class HeadParams(ParamSet):
    W_cls: np.ndarray
    b_cls: np.ndarray
    W_det: np.ndarray
    b_det: np.ndarray

    @classmethod
    def zeros(cls, d_h: int, n_classes: int) -> "HeadParams":
        return cls(np.zeros((d_h, n_classes)), np.zeros(n_classes),
                   np.zeros((d_h, n_classes)), np.zeros(n_classes))


def init_head(d_h: int, n_classes: int, seed: int, scale: float = 0.1) -> HeadParams:
    rng = np.random.default_rng(seed)
    p = HeadParams.zeros(d_h, n_classes)
    for _, arr in p.items():
        arr[...] = rng.uniform(-scale, scale, size=arr.shape)
    return p


@dataclass
class HeadCache:
    hidden: np.ndarray
    S: np.ndarray
    L: np.ndarray
    P: np.ndarray
    rc: np.ndarray
    pc: np.ndarray
    params: HeadParams


def head_forward(hidden, params: HeadParams) -> HeadCache:
    hidden = as_matrix(hidden)
    if hidden.shape[1] != params.W_cls.shape[0] or params.W_det.shape != params.W_cls.shape:
        raise ShapeError(f"hidden {hidden.shape} incompatible with head {params.W_cls.shape}")
    S = hidden @ params.W_cls + params.b_cls
    L = hidden @ params.W_det + params.b_det
    P = softmax_over_rows(L)
    rc = S * P
    return HeadCache(hidden, S, L, P, rc, rc.sum(axis=0), params)


def head_backward(cache: HeadCache | None, grad_pc) -> tuple[np.ndarray, HeadParams]:
    if cache is None:
        raise ValueError("head_backward needs the cache from head_forward")
    grad_pc = np.asarray(grad_pc, dtype=np.float64).ravel()
    if grad_pc.shape[0] != cache.pc.shape[0]:
        raise ShapeError(f"grad_pc has {grad_pc.shape[0]} classes, expected {cache.pc.shape[0]}")
    dS = cache.P * grad_pc
    dP = cache.S * grad_pc
    dL = cache.P * (dP - (cache.P * dP).sum(axis=0, keepdims=True))
    p = cache.params
    grads = HeadParams(W_cls=cache.hidden.T @ dS, b_cls=dS.sum(axis=0),
                       W_det=cache.hidden.T @ dL, b_det=dL.sum(axis=0))
    d_hidden = dS @ p.W_cls.T + dL @ p.W_det.T
    return d_hidden, grads
