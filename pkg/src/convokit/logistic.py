"""Multinomial logistic regression trained by full-batch gradient descent.

Shared numerical core for the intent classifier and the dialogue policy.
Weights start at zero, so training is deterministic and a zero-epoch model
predicts the uniform distribution.
"""

from __future__ import annotations

import numpy as np

from .errors import TrainingError


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; output rows sum to 1 and are strictly
    positive for finite logits."""
    logits = np.atleast_2d(logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_gradient(
    weights: np.ndarray,
    bias: np.ndarray,
    inputs: np.ndarray,
    labels: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` and its gradient.

    ``weights`` is (classes, features), ``inputs`` (samples, features),
    ``labels`` integer class indices. The bias is not regularized.
    """
    n = inputs.shape[0]
    probs = softmax(inputs @ weights.T + bias)
    log_likelihood = np.log(probs[np.arange(n), labels])
    loss = -log_likelihood.mean() + 0.5 * l2 * float(np.sum(weights**2))
    delta = probs
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grad_w = delta.T @ inputs + l2 * weights
    grad_b = delta.sum(axis=0)
    return float(loss), grad_w, grad_b


def fit(
    inputs: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    epochs: int,
    learning_rate: float,
    l2: float,
    weights: np.ndarray | None = None,
    bias: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Run full-batch gradient descent; returns weights, bias and the
    per-epoch loss trace.

    Passing in existing ``weights``/``bias`` warm-starts training (used by
    machine teaching's partial retrain). Raises :class:`TrainingError` when
    the loss stops being finite, naming the epoch.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_features = inputs.shape[1]
    if weights is None:
        weights = np.zeros((n_classes, n_features))
    else:
        weights = np.array(weights, dtype=np.float64, copy=True)
    if bias is None:
        bias = np.zeros(n_classes)
    else:
        bias = np.array(bias, dtype=np.float64, copy=True)

    losses: list[float] = []
    for epoch in range(epochs):
        loss, grad_w, grad_b = loss_and_gradient(weights, bias, inputs, labels, l2)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        weights -= learning_rate * grad_w
        bias -= learning_rate * grad_b
        losses.append(loss)
    return weights, bias, losses


def predict_probabilities(weights: np.ndarray, bias: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Class probabilities for one input vector or a batch."""
    single = np.asarray(inputs).ndim == 1
    probs = softmax(np.atleast_2d(inputs) @ weights.T + bias)
    return probs[0] if single else probs
