"""Dense float64 kernel shared by every other module.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64. The
helpers here only add shape checking and the numerically careful variants
of the nonlinearities.
"""

import numpy as np

FLOAT = np.float64


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


def as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=FLOAT)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def sigmoid(x) -> np.ndarray:
    # Split by sign so exp never overflows.
    x = np.asarray(x, dtype=FLOAT)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh_m(x) -> np.ndarray:
    return np.tanh(np.asarray(x, dtype=FLOAT))


def softmax_over_rows(x) -> np.ndarray:
    """Normalize each column over the rows: ``out[:, c]`` sums to one."""
    x = as_matrix(x)
    if x.shape[0] < 1:
        raise ShapeError("softmax over zero rows")
    e = np.exp(x - x.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


def l2_distance(a, b) -> float:
    a = np.asarray(a, dtype=FLOAT).ravel()
    b = np.asarray(b, dtype=FLOAT).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch: {a.size} vs {b.size}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def pairwise_l2(curr: np.ndarray, prev: np.ndarray) -> np.ndarray:
    """``out[j, k] = ||curr[j] - prev[k]||``, computed by explicit differences."""
    curr = as_matrix(curr)
    prev = as_matrix(prev)
    if curr.shape[1] != prev.shape[1]:
        raise ShapeError(f"feature dimension mismatch: {curr.shape} vs {prev.shape}")
    diff = curr[:, None, :] - prev[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))
