"""Binary and categorical cross-entropy, each returning (loss, dloss/dprob).

Both losses reduce by the mean over the batch and clamp probabilities away
from 0 and 1 with epsilon 1e-7, where the formulas diverge.
"""

from __future__ import annotations

import numpy as np

from .errors import NotNormalizedError

EPSILON = 1e-7


def bce_loss(targets: np.ndarray, probs: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean of -(t*log(p) + (1-t)*log(1-p)) over the batch.

    targets are 0/1, probs in (0, 1); shapes must match elementwise.
    """
    t = np.asarray(targets, dtype=np.float64)
    p = np.asarray(probs, dtype=np.float64)
    if t.shape != p.shape:
        raise ValueError(f"target shape {t.shape} != prob shape {p.shape}")
    pc = np.clip(p, EPSILON, 1.0 - EPSILON)
    n = t.size
    loss = float(-np.sum(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc)) / n)
    grad = (-t / pc + (1.0 - t) / (1.0 - pc)) / n
    return loss, grad


def cce_loss(targets: np.ndarray, probs: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over the batch of -sum_c t_c * log(p_c) for one-hot targets.

    Each probability row must already lie on the simplex (sum 1 within 1e-6);
    rows further out raise NotNormalizedError.
    """
    t = np.asarray(targets, dtype=np.float64)
    p = np.asarray(probs, dtype=np.float64)
    if t.shape != p.shape or t.ndim != 2:
        raise ValueError(f"expected matching (B, C) arrays, got {t.shape} and {p.shape}")
    row_sums = p.sum(axis=1)
    bad = np.abs(row_sums - 1.0) > 1e-6
    if bad.any():
        i = int(np.argmax(bad))
        raise NotNormalizedError(
            f"probability row {i} sums to {row_sums[i]:.9f}, not 1"
        )
    pc = np.clip(p, EPSILON, None)
    b = t.shape[0]
    loss = float(-np.sum(t * np.log(pc)) / b)
    grad = -t / pc / b
    return loss, grad
