"""Multi-label hinge objective and SGD with momentum and weight decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ShapeError


def check_labels(y: np.ndarray) -> None:
    if not np.all((y == 1.0) | (y == -1.0)):
        bad = np.unique(y[(y != 1.0) & (y != -1.0)])
        raise ValueError(f"labels must be -1 or +1, found {bad[:5].tolist()}")


def hinge_loss(pc, y) -> tuple[float, np.ndarray]:
    """Mean over frames and classes of ``max(0, 1 - y * pc)``.

    Returns the loss and its gradient w.r.t. ``pc``; the subgradient at the
    kink is taken as zero.
    """
    pc = np.atleast_2d(np.asarray(pc, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if pc.shape != y.shape:
        raise ShapeError(f"scores {pc.shape} vs labels {y.shape}")
    check_labels(y)
    scale = 1.0 / y.size
    margin = 1.0 - y * pc
    active = margin > 0
    loss = float(np.sum(np.where(active, margin, 0.0)) * scale)
    grad = np.where(active, -y * scale, 0.0)
    return loss, grad


@dataclass
class OptimState:
    lr: float
    momentum: float = 0.9
    weight_decay: float = 5e-4
    velocity: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: OptimState) -> None:
    """In-place update: ``v = momentum * v + (g + wd * theta)``, ``theta -= lr * v``."""
    if params.keys() != grads.keys():
        raise ShapeError(f"parameter/gradient names differ: {sorted(set(params) ^ set(grads))}")
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ShapeError(f"{name}: gradient {g.shape} vs parameter {theta.shape}")
        v = state.velocity.get(name)
        if v is None:
            v = np.zeros_like(theta)
        elif v.shape != theta.shape:
            raise ShapeError(f"{name}: velocity {v.shape} vs parameter {theta.shape}")
        v = state.momentum * v + (g + state.weight_decay * theta)
        state.velocity[name] = v
        theta -= state.lr * v


def lr_schedule(epoch: int, base_lr: float = 1e-5, late_lr: float | None = 1e-6, decay_epoch: int = 10) -> float:
    """Step schedule; ``late_lr=None`` means a tenth of ``base_lr``."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    if epoch < decay_epoch:
        return base_lr
    return base_lr / 10.0 if late_lr is None else late_lr
