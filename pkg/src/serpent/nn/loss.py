"""Categorical cross-entropy over softmax probabilities."""

from __future__ import annotations

import numpy as np

from serpent.errors import ShapeMismatch

_PROB_FLOOR = 1e-12


def cce_loss(probs: np.ndarray, onehot: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient w.r.t. pre-softmax logits.

    The returned gradient is (probs - onehot)/batch, the combined
    softmax-plus-cross-entropy gradient, to be fed into the layer below the
    softmax.
    """
    if probs.shape != onehot.shape or probs.ndim != 2:
        raise ShapeMismatch(f"probs {probs.shape} vs onehot {onehot.shape}")
    row_sums = probs.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-6):
        raise ValueError("probability rows must sum to 1 within 1e-6")
    batch = probs.shape[0]
    p_true = np.maximum((probs * onehot).sum(axis=1), _PROB_FLOOR)
    loss = float(-np.mean(np.log(p_true)))
    grad_logits = (probs - onehot) / batch
    return loss, grad_logits


def batch_accuracy(probs: np.ndarray, onehot: np.ndarray) -> float:
    """Fraction of rows whose argmax matches the one-hot label."""
    return float(np.mean(probs.argmax(axis=1) == onehot.argmax(axis=1)))
