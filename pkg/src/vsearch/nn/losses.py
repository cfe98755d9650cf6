"""Softmax cross-entropy, stabilized by max subtraction."""

from __future__ import annotations

import numpy as np

from vsearch.errors import InputError


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def logsumexp(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    m = logits.max(axis=axis, keepdims=True)
    out = np.log(np.exp(logits - m).sum(axis=axis)) + np.squeeze(m, axis=axis)
    return out


def softmax_cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Loss and probability vector for one example.

    Returns (-log p[label], p). Gradient wrt logits is p - onehot(label);
    callers compute it from the returned probs.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not (0 <= label < logits.shape[-1]):
        raise InputError(f"label {label} out of range for {logits.shape[-1]} classes")
    if not np.all(np.isfinite(logits)):
        raise InputError("non-finite logits")
    probs = softmax(logits)
    loss = -float(log_softmax(logits)[label])
    return loss, probs


def softmax_cross_entropy_grad(probs: np.ndarray, label: int) -> np.ndarray:
    d = probs.copy()
    d[label] -= 1.0
    return d
