"""Cosine cost volume, temperature-scaled cross-entropy, and argmax accuracy."""

import numpy as np
from scipy.special import log_softmax

from .errors import DegenerateEmbeddingError, InvalidInputError

DEFAULT_TEMPERATURE = 0.07


def _unit_rows(x, what):
    x = np.asarray(x, dtype=np.float64)
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DegenerateEmbeddingError(f"{what} embeddings contain a zero-norm row")
    return x / norm, norm


def cost_volume(visual, textual):
    """``C[i, n] = cos(visual[i], textual[n])``, shape ``(N_pixels, N_classes)``."""
    vu, _ = _unit_rows(visual, "visual")
    tu, _ = _unit_rows(textual, "textual")
    if vu.shape[-1] != tu.shape[-1]:
        raise InvalidInputError(f"dimension mismatch: {vu.shape[-1]} vs {tu.shape[-1]}")
    return vu @ tu.T


def cost_volume_vjp(visual, textual, grad):
    """Return ``(grad_visual, grad_textual)`` for :func:`cost_volume`."""
    vu, vn = _unit_rows(visual, "visual")
    tu, tn = _unit_rows(textual, "textual")
    grad = np.asarray(grad, dtype=np.float64)
    gvu = grad @ tu
    gtu = grad.T @ vu
    gv = (gvu - np.sum(gvu * vu, axis=-1, keepdims=True) * vu) / vn
    gt = (gtu - np.sum(gtu * tu, axis=-1, keepdims=True) * tu) / tn
    return gv, gt


def ce_loss(cost, labels, temperature=DEFAULT_TEMPERATURE):
    """Mean cross-entropy of ``softmax(cost / temperature)`` against ``labels``.

    Returns ``(loss, grad_on_cost)``; ``temperature=1`` is the untempered loss.
    """
    if not temperature > 0:
        raise InvalidInputError(f"temperature must be positive, got {temperature}")
    cost = np.asarray(cost, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    n, k = cost.shape
    if labels.shape != (n,) or np.any(labels < 0) or np.any(labels >= k):
        raise InvalidInputError("labels must be one class index in [0, N_classes) per row")
    logp = log_softmax(cost / temperature, axis=1)
    rows = np.arange(n)
    loss = -np.mean(logp[rows, labels])
    grad = np.exp(logp)
    grad[rows, labels] -= 1.0
    return float(loss), grad / (n * temperature)


def accuracy(cost, labels):
    """Fraction of rows whose argmax (lowest index on ties) equals the label."""
    cost = np.asarray(cost)
    return float(np.mean(np.argmax(cost, axis=1) == np.asarray(labels)))
