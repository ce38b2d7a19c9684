"""Central finite-difference check of the full composite loss.

The temporal graph is built once at the base point and held fixed while
parameters are perturbed, matching how the analytic backward treats it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import GraphMode
from .model import Model, init_model, window_backward, window_forward
from .objective import hinge_loss

TOLERANCE = 1e-4


@dataclass
class GradcheckReport:
    max_rel_error: dict[str, float] = field(default_factory=dict)
    tolerance: float = TOLERANCE

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values()) if self.max_rel_error else 0.0

    @property
    def passed(self) -> bool:
        return self.worst < self.tolerance

    def lines(self) -> list[str]:
        out = [f"{name:20s} {err:.3e}" for name, err in self.max_rel_error.items()]
        out.append(f"{'worst':20s} {self.worst:.3e}  {'PASS' if self.passed else 'FAIL'}")
        return out


def _hinge_terms(pc: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - y * pc)


def _loss_difference(pc_plus, pc_minus, y) -> float:
    # Subtract term by term so the constant margins cancel exactly.
    both = (1.0 - y * pc_plus > 0) & (1.0 - y * pc_minus > 0)
    diff = np.where(both, -y * (pc_plus - pc_minus), _hinge_terms(pc_plus, y) - _hinge_terms(pc_minus, y))
    return float(diff.sum() / y.size)


def random_problem(seed: int, n: int = 3, m: int = 4, d_raw: int = 6, d: int = 5, c: int = 2,
                   scale: float = 0.5, zero: bool = False):
    rng = np.random.default_rng(seed)
    raw = [rng.normal(size=(m, d_raw)) for _ in range(n)]
    y = np.where(rng.random((n, c)) < 0.5, -1.0, 1.0)
    model = init_model(d_raw, d, c, seed, scale)
    if zero:
        for arr in model.flat().values():
            arr[...] = 0.0
    return model, raw, y


def gradcheck(model: Model, raw: list[np.ndarray], y: np.ndarray, k: int = 2,
              mode: GraphMode | str = GraphMode.DYNAMIC, use_lstm: bool = True,
              step: float = 1e-5, backward=window_backward) -> GradcheckReport:
    model = model.copy()
    cache = window_forward(model, raw, k, mode, use_lstm)
    _, grad_pc = hinge_loss(cache.pc, y)
    analytic = backward(model, cache, grad_pc)
    edges = cache.edges

    report = GradcheckReport()
    for name, theta in model.flat().items():
        worst = 0.0
        for idx in np.ndindex(theta.shape):
            orig = theta[idx]
            theta[idx] = orig + step
            pc_plus = window_forward(model, raw, k, mode, use_lstm, edges).pc
            theta[idx] = orig - step
            pc_minus = window_forward(model, raw, k, mode, use_lstm, edges).pc
            theta[idx] = orig
            numeric = _loss_difference(pc_plus, pc_minus, y) / (2 * step)
            a = analytic[name][idx]
            denom = max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, abs(a - numeric) / denom)
        report.max_rel_error[name] = worst
    return report


def run_gradcheck(seed: int = 0, n: int = 3, m: int = 4, d_raw: int = 6, d: int = 5, c: int = 2,
                  k: int = 2, zero: bool = False, **kwargs) -> GradcheckReport:
    if n > 4 or m > 6 or d > 8:
        raise ValueError("gradcheck is meant for small sizes (N <= 4, M <= 6, D <= 8)")
    model, raw, y = random_problem(seed, n, m, d_raw, d, c, zero=zero)
    return gradcheck(model, raw, y, k=k, **kwargs)
